"""Command-line experiment runner.

    fraciso check fk --domain "(-1,-0.2),(0.2,1)" --s 0.5 --M 1024
    fraciso scan kj --domain "(-1,-0.2),(0.2,1)" --alphas -8:0.5:12 --csv-dir out/
    fraciso table specfun --N 1,2,3 --s 0.25,0.5,0.75

Exit codes: 0 success, 1 a report is Violated (JSON still written),
2 invalid configuration, 3 solver failure, 4 unwritable output path.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from threadpoolctl import threadpool_limits

from . import isoperimetry as iso
from .domain import build_mesh, parse_domain
from .errors import BracketError, ConvergenceError
from .fracop import assemble_operator
from .specfun import (FracOrder, ball_torsion_coefficient, normalization_gamma,
                      unit_ball_torsional_rigidity_exact)
from .spectral import principal_eigenpair, refine_and_extrapolate
from .torsion import generalized_torsion, unit_ball_cache

SCHEMA = 1
EXIT_OK, EXIT_VIOLATED, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4

CHECKS = ("fk", "sv", "comp", "rh", "fkrh", "ps")
DEFAULT_Q = {"rh": "2,4,inf", "fkrh": "1.01,1.1,1.5,2,4,8"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- parsing

def _float(text) -> float:
    t = str(text).strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    return float(t)


def _float_list(text) -> list[float]:
    return [_float(x) for x in str(text).split(",") if x.strip()]


def _int_list(text) -> list[int]:
    out = []
    for x in str(text).split(","):
        if x.strip():
            v = float(x)
            if v != int(v):
                raise ValueError(f"{x!r} is not an integer")
            out.append(int(v))
    return out


def parse_alpha_spec(text) -> list[float] | None:
    """``start:stop:count`` (inclusive linspace), a comma list, or ``standard``."""
    t = str(text).strip()
    if t == "standard":
        return None
    if ":" in t:
        parts = t.split(":")
        if len(parts) != 3:
            raise ValueError(f"alpha grid {t!r} must look like start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("alpha grid count must be positive")
        return [float(a) for a in np.linspace(start, stop, count)]
    return _float_list(t)


# key -> converter; the same table serves flags and config lines
CONVERTERS = {
    "domain": str,
    "s": _float_list,
    "M": _int_list,
    "N": _int_list,
    "alphas": parse_alpha_spec,
    "alpha": _float,
    "q": _float_list,
    "tol": _float,
    "seed": int,
    "out": str,
    "csv_dir": str,
}
_ALIASES = {"csv-dir": "csv_dir"}


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Errors name the line."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key=value, got {line!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in CONVERTERS:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        try:
            CONVERTERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{no}: bad value for {key}: {exc}") from None
        values[key] = (val, f"{path}:{no}")
    return values


@dataclass
class ExperimentConfig:
    command: str
    domain: str = "(-1,1)"
    s: list = field(default_factory=lambda: [0.5])
    M: list = field(default_factory=lambda: [1024])
    N: list = field(default_factory=lambda: [1])
    alphas: list | None = None
    alpha: float = 0.0
    q: list | None = None
    tol: float | None = None
    seed: int = 0
    out: str | None = None
    csv_dir: str | None = None

    def record(self) -> dict:
        """Everything that determines the numbers; output paths are left out."""
        return {"command": self.command, "domain": self.domain, "s": self.s, "M": self.M,
                "N": self.N, "alphas": self.alphas, "alpha": self.alpha, "q": self.q,
                "tol": self.tol, "seed": self.seed}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", help='union of intervals, e.g. "(-1,-0.2),(0.2,1)"')
    common.add_argument("--s", help="fractional order (comma list for tables)")
    common.add_argument("--M", help="mesh parameter |Omega|/h (comma list allowed)")
    common.add_argument("--N", help="dimensions for the special-function table")
    common.add_argument("--alphas", help='shift grid "start:stop:count", a list, or "standard"')
    common.add_argument("--alpha", help="single shift")
    common.add_argument("--q", help="exponents, comma list (inf allowed)")
    common.add_argument("--tol", help="relative tolerance (default by mesh size)")
    common.add_argument("--seed", help="seed recorded with the run")
    common.add_argument("--out", help="JSON output path (stdout if omitted)")
    common.add_argument("--csv-dir", dest="csv_dir", help="directory for CSV curves")
    common.add_argument("--config", help="key=value file; flags take precedence")

    p = argparse.ArgumentParser(prog="fraciso", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="group", required=True)
    chk = sub.add_parser("check", parents=[common], help="inequality reports")
    chk.add_argument("which", choices=CHECKS)
    scn = sub.add_parser("scan", parents=[common], help="Kohler-Jobin radius scan")
    scn.add_argument("which", choices=("kj",))
    for name, text in (("eig", "principal eigenpair (extrapolated if several M)"),
                       ("torsion", "torsion or generalized torsion family"),
                       ("qgen", "unit-ball Q# table"),
                       ("rearrange", "decreasing rearrangement of the torsion function")):
        sub.add_parser(name, parents=[common], help=text)
    tab = sub.add_parser("table", parents=[common], help="closed-form tables")
    tab.add_argument("which", choices=("specfun",))
    return p


def resolve_config(args) -> ExperimentConfig:
    command = args.group + (f" {args.which}" if getattr(args, "which", None) else "")
    raw = read_config_file(args.config) if args.config else {}
    for key in CONVERTERS:
        flag = getattr(args, key, None)
        if flag is not None:
            raw[key] = (flag, f"--{key.replace('_', '-')}")
    cfg = ExperimentConfig(command)
    for key, (val, where) in raw.items():
        try:
            conv = CONVERTERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key}: {exc}") from None
        setattr(cfg, key, conv)
    if cfg.q is None and args.group == "check" and args.which in DEFAULT_Q:
        cfg.q = _float_list(DEFAULT_Q[args.which])
    validate(cfg, raw)
    return cfg


def validate(cfg: ExperimentConfig, raw: dict) -> None:
    """Every precondition that can be checked before a solve starts."""
    def where(key):
        return raw[key][1] if key in raw else "default"

    table = cfg.command == "table specfun"
    for s in cfg.s:
        ok = 0 < s <= 1 if table else 0 < s < 1
        if not ok:
            raise ConfigError(f"{where('s')}: order s={s} outside {'(0,1]' if table else '(0,1)'}")
    if not table and len(cfg.s) != 1:
        raise ConfigError(f"{where('s')}: this command takes a single order")
    if any(n < 1 for n in cfg.N):
        raise ConfigError(f"{where('N')}: dimensions must be positive")
    if table:
        return
    if any(m < 8 for m in cfg.M):
        raise ConfigError(f"{where('M')}: M must be at least 8")
    if cfg.command != "eig" and len(cfg.M) != 1:
        raise ConfigError(f"{where('M')}: this command takes a single M")
    if cfg.command == "eig" and len(cfg.M) == 2:
        raise ConfigError(f"{where('M')}: give one M or at least three for extrapolation")
    if cfg.command == "eig" and any(b <= a for a, b in zip(cfg.M, cfg.M[1:])):
        raise ConfigError(f"{where('M')}: M list must increase")
    if cfg.tol is not None and not 0 <= cfg.tol < 1:
        raise ConfigError(f"{where('tol')}: tolerance must lie in [0, 1)")
    try:
        dom = parse_domain(cfg.domain)
        levels = [m // 2 for m in cfg.M if m // 2 >= 8] + cfg.M
        for m in levels:
            build_mesh(dom, m)
    except ValueError as exc:
        raise ConfigError(f"{where('domain')}: {exc}") from None
    cfg.domain = dom.to_literal()
    if cfg.q is not None:
        if cfg.command == "check fkrh" and any(not 1 < q <= 8 for q in cfg.q):
            raise ConfigError(f"{where('q')}: exponents must lie in (1, 8]")
        if any(not q > 1 for q in cfg.q):
            raise ConfigError(f"{where('q')}: exponents must exceed 1")


def _check_writable(cfg: ExperimentConfig) -> None:
    targets = []
    if cfg.out:
        targets.append(os.path.dirname(os.path.abspath(cfg.out)))
    if cfg.csv_dir:
        os.makedirs(cfg.csv_dir, exist_ok=True)
        targets.append(os.path.abspath(cfg.csv_dir))
    for d in targets:
        if not os.path.isdir(d) or not os.access(d, os.W_OK):
            raise OSError(f"cannot write to {d}")


# ---------------------------------------------------------------- output

def _num(x) -> str:
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else "null"


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def document(config: dict, reports: list, timestamp: str | None = None) -> str:
    ts = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    # timestamp last and on its own line so it can be excluded when diffing
    return dumps({"schema": SCHEMA, "config": config, "reports": reports, "timestamp": ts}) + "\n"


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_")


# ---------------------------------------------------------------- commands

@dataclass
class RunResult:
    records: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)   # file stem -> (header, rows)
    violated: bool = False

    def add_report(self, rep: iso.InequalityReport, stem: str | None = None) -> None:
        self.records.append(rep.to_dict())
        self.violated |= rep.verdict == iso.VIOLATED
        for cname, (header, rows) in rep.curves.items():
            self.curves[_slug(f"{stem or rep.name}_{cname}")] = (header, rows)


def run(cfg: ExperimentConfig) -> RunResult:
    res = RunResult()
    s, M, dom, tol = cfg.s[0], cfg.M[0], cfg.domain, cfg.tol
    cmd = cfg.command
    if cmd == "check fk":
        res.add_report(iso.faber_krahn_report(dom, s, M, tol))
    elif cmd == "check sv":
        res.add_report(iso.saint_venant_report(dom, s, M, tol))
    elif cmd == "check comp":
        alphas = cfg.alphas if cfg.alphas else [cfg.alpha]
        for a in alphas:
            res.add_report(iso.comparison_curve_check(dom, s, a, M, tol), f"comparison_{a:g}")
    elif cmd == "check rh":
        for rep in iso.reverse_holder_report(dom, s, cfg.q, M, tol):
            res.add_report(rep)
    elif cmd == "check fkrh":
        res.add_report(iso.fk_from_revholder_check(dom, s, cfg.q, M, tol))
    elif cmd in ("check ps", "rearrange"):
        rep = iso.polya_szego_report(dom, s, M, cfg.alpha, tol)
        res.add_report(rep)
        if cmd == "rearrange":
            from .rearrange import profile
            w = generalized_torsion(assemble_operator(build_mesh(parse_domain(dom), M), s),
                                    cfg.alpha).w
            prof = profile(w)
            res.curves["profile"] = (["value", "measure"],
                                     [[v, m] for v, m in zip(prof.values, prof.measures)])
    elif cmd == "scan kj":
        scan = iso.kohler_jobin_scan(dom, s, cfg.alphas, M, tol)
        summary = scan.summary()
        res.add_report(summary)
        res.records.append(scan.to_dict())
        res.curves["kj_scan"] = scan.curve_rows()
    elif cmd == "eig":
        _run_eig(cfg, res)
    elif cmd == "torsion":
        op = assemble_operator(build_mesh(parse_domain(dom), M), s)
        alphas = cfg.alphas if cfg.alphas else [cfg.alpha]
        rows = []
        for a in alphas:
            t = generalized_torsion(op, a)
            res.records.append({"name": "torsion", "domain": dom, "s": s, "M": M, "alpha": a,
                                "Q": t.Q, "energy": t.energy, "l2sq": t.l2sq})
            rows.append([a, t.Q, t.l2sq])
        res.curves["q_family"] = (["alpha", "Q", "l2sq"], rows)
        res.curves["torsion_function"] = (["x", "w"], [[x, v] for x, v in
                                                      zip(t.w.mesh.x, t.w.values)])
    elif cmd == "qgen":
        cache = unit_ball_cache(s, M)
        res.records.append({"name": "unit_ball_q_table", "s": s, "M": M,
                            "lambda1h": cache.lambda1h, "rows": len(cache.table)})
        res.curves["qsharp_table"] = (["beta", "Q", "l2sq"], cache.table.tolist())
    elif cmd == "table specfun":
        rows = []
        for N in cfg.N:
            for sv in cfg.s:
                o = FracOrder(sv, N)
                row = [N, sv, normalization_gamma(o), ball_torsion_coefficient(o),
                       unit_ball_torsional_rigidity_exact(o)]
                rows.append(row)
                res.records.append(dict(zip(("N", "s", "gamma", "c", "T_ball"), row)))
        res.curves["specfun"] = (["N", "s", "gamma", "c", "T_ball"], rows)
    else:  # pragma: no cover - argparse restricts the choices
        raise ConfigError(f"unknown command {cmd!r}")
    return res


def _run_eig(cfg: ExperimentConfig, res: RunResult) -> None:
    s, dom = cfg.s[0], parse_domain(cfg.domain)
    if len(cfg.M) >= 3:
        ex = refine_and_extrapolate(dom, s, cfg.M)
        res.records.append({"name": "eigenvalue_extrapolation", "domain": cfg.domain, "s": s,
                            "mesh_sizes": ex.M_list, "values": ex.values, "value": ex.value,
                            "order": ex.order, "error_bar": ex.error_bar,
                            "monotone": ex.monotone})
        res.curves["eigenvalues"] = (["M", "lambda1h"], [list(r) for r in zip(ex.M_list, ex.values)])
        return
    M = cfg.M[0]
    eig = principal_eigenpair(assemble_operator(build_mesh(dom, M), s))
    res.records.append({"name": "principal_eigenpair", "domain": cfg.domain, "s": s, "M": M,
                        "lambda1h": eig.lambda1h, "iterations": eig.iterations,
                        "residual": eig.residual})
    u = eig.eigenfunction
    res.curves["eigenfunction"] = (["x", "u1"], [[x, v] for x, v in zip(u.mesh.x, u.values)])


def emit(cfg: ExperimentConfig, res: RunResult, timestamp: str | None = None) -> None:
    text = document(cfg.record(), res.records, timestamp)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.csv_dir:
        for stem, (header, rows) in res.curves.items():
            write_csv(os.path.join(cfg.csv_dir, f"{stem}.csv"), header, rows)


_VALUE_FLAGS = ("--domain", "--s", "--M", "--N", "--alphas", "--alpha", "--q", "--tol",
                "--seed", "--out", "--csv-dir", "--config")


def _glue_values(argv):
    """Attach values to their flags so "--alphas -8:0.5:12" is not read as an option."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"fraciso: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _check_writable(cfg)
    except OSError as exc:
        print(f"fraciso: {exc}", file=sys.stderr)
        return EXIT_IO
    with threadpool_limits(limits=1):
        try:
            res = run(cfg)
        except (ConvergenceError, BracketError, np.linalg.LinAlgError) as exc:
            print(f"fraciso: solver failure: {exc}", file=sys.stderr)
            trace = getattr(exc, "trace", None)
            if trace:
                print(f"fraciso: last iterates: {trace[-5:]}", file=sys.stderr)
            return EXIT_SOLVER
        except ValueError as exc:
            print(f"fraciso: config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        emit(cfg, res)
    except OSError as exc:
        print(f"fraciso: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_VIOLATED if res.violated else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
