"""Verification harness for the isoperimetric inequalities.

Each check runs on two refinement levels (M/2 and M) so the report carries
a trend. Margins are relative and oriented so that a positive margin means
the inequality holds.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domain import Domain1D, GridFunction, build_mesh, parse_domain, scale_mesh, schwarz_ball
from .fracop import assemble_operator
from .rearrange import curve_difference, polya_szego_gap
from .spectral import principal_eigenpair
from .torsion import (ball_torsion_function, find_radius, generalized_torsion,
                      unit_ball_cache)

SUITE_DOMAINS = (
    "(-1,1)",
    "(-1,-0.05),(0.05,1)",
    "(-1,-0.2),(0.2,1)",
    "(-1,-0.4),(0.4,1)",
    "(-1.5,-0.5),(0.25,1.25)",
    "(0,0.5),(0.75,1.25),(1.5,2.5)",
)

HOLDS = "Holds"
HOLDS_WITHIN_TOL = "HoldsWithinTol"
VIOLATED = "Violated"

ALPHA_SAFETY = 0.95


def default_tol(M: int) -> float:
    """Relative tolerance: 2% up to M = 1024, 1% from M = 2048 on."""
    return 0.01 if M >= 2048 else 0.02


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FRACISO_THREADS", "1")))
    except ValueError:
        return 1


def _ordered_map(func, items):
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


def _as_domain(domain) -> Domain1D:
    return parse_domain(domain) if isinstance(domain, str) else domain


def _levels(M: int) -> list[int]:
    return [M // 2, M]


def verdict(trend: list[float], tol: float) -> str:
    """Violated only if the finest margin is below -tol and moving away from 0."""
    m = trend[-1]
    if m >= 0:
        return HOLDS
    if m >= -tol:
        return HOLDS_WITHIN_TOL
    if len(trend) > 1 and abs(trend[-1]) > abs(trend[-2]):
        return VIOLATED
    return HOLDS_WITHIN_TOL


@dataclass
class InequalityReport:
    name: str
    domain: str
    s: float
    mesh_sizes: list
    lhs: float
    rhs: float
    margin: float
    refinement_trend: list
    verdict: str
    # CSV companions: name -> (header, rows); not part of the JSON record
    curves: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {"name": self.name, "domain": self.domain, "s": self.s,
                "mesh_sizes": list(self.mesh_sizes), "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "refinement_trend": list(self.refinement_trend),
                "verdict": self.verdict}

    @property
    def ok(self) -> bool:
        return self.verdict != VIOLATED


def _report(name, domain, s, levels, lhs, rhs, trend, tol, curves=None):
    return InequalityReport(name, domain.to_literal(), float(s), list(levels), float(lhs),
                            float(rhs), float(trend[-1]), [float(t) for t in trend],
                            verdict(trend, tol), curves or {})


def faber_krahn_report(domain, s: float, M: int, tol: float | None = None) -> InequalityReport:
    """lambda_1h(Omega) >= lambda_1h(Omega#) on the shared lattice."""
    domain = _as_domain(domain)
    tol = default_tol(M) if tol is None else tol
    ball = schwarz_ball(domain)
    trend = []
    for Mi in _levels(M):
        lam = principal_eigenpair(assemble_operator(build_mesh(domain, Mi), s)).lambda1h
        lam_b = principal_eigenpair(assemble_operator(build_mesh(ball, Mi), s)).lambda1h
        trend.append((lam - lam_b) / lam_b)
    return _report("faber_krahn", domain, s, _levels(M), lam, lam_b, trend, tol)


def saint_venant_report(domain, s: float, M: int, tol: float | None = None) -> InequalityReport:
    """T(Omega) <= T(Omega#) on the shared lattice."""
    domain = _as_domain(domain)
    tol = default_tol(M) if tol is None else tol
    ball = schwarz_ball(domain)
    trend = []
    for Mi in _levels(M):
        T = generalized_torsion(assemble_operator(build_mesh(domain, Mi), s), 0.0).Q
        T_b = generalized_torsion(assemble_operator(build_mesh(ball, Mi), s), 0.0).Q
        trend.append((T_b - T) / T_b)
    return _report("saint_venant", domain, s, _levels(M), T, T_b, trend, tol)


def standard_alpha_grid(lambda1: float) -> list[float]:
    """Twelve shifts: six fixed nonpositive values and six fractions of lambda_1."""
    return [-8.0, -4.0, -2.0, -1.0, -0.5, 0.0] + [f * lambda1 for f in
                                                 (0.1, 0.25, 0.5, 0.7, 0.8, 0.9)]


def _check_alphas(alphas, lam):
    bad = [a for a in alphas if not a <= ALPHA_SAFETY * lam]
    if bad:
        raise ValueError(f"alpha values {bad} are not below {ALPHA_SAFETY} * lambda_1h = "
                         f"{ALPHA_SAFETY * lam:.6g}")


@dataclass
class KJScan:
    domain: str
    s: float
    M: int
    alpha_grid: list
    Q: list
    R: list
    lambda_ball: list
    lambda_omega: float
    R_sharp: float
    R_limit: float
    margins: list
    R_nonincreasing: bool
    Q_increasing: bool
    radius_chain: bool
    tol: float

    @property
    def holds(self) -> bool:
        return all(m >= -self.tol for m in self.margins)

    def to_dict(self) -> dict:
        return {"domain": self.domain, "s": self.s, "M": self.M,
                "alpha_grid": list(self.alpha_grid), "Q": list(self.Q), "R": list(self.R),
                "lambda_ball": list(self.lambda_ball), "lambda_omega": self.lambda_omega,
                "monotonicity_flags": {"R_nonincreasing": self.R_nonincreasing,
                                       "Q_increasing": self.Q_increasing}}

    def summary(self) -> InequalityReport:
        """The scan folded into one report: worst margin over the grid."""
        i = int(np.argmin(self.margins))
        m = float(self.margins[i])
        return InequalityReport("kohler_jobin", self.domain, self.s, [self.M],
                                self.lambda_omega, float(self.lambda_ball[i]), m, [m],
                                verdict([m], self.tol))

    def curve_rows(self):
        return (["alpha", "Q", "R", "lambda_ball", "margin"],
                [list(r) for r in zip(self.alpha_grid, self.Q, self.R, self.lambda_ball,
                                      self.margins)])


def kohler_jobin_scan(domain, s: float, alpha_grid, M: int, tol: float | None = None,
                      R_slack: float = 1e-3) -> KJScan:
    """R(alpha) and the bound lambda_1(Omega) >= lambda_1(B_R(alpha)) along a grid.

    ``alpha_grid=None`` selects :func:`standard_alpha_grid`.
    """
    domain = _as_domain(domain)
    tol = default_tol(M) if tol is None else tol
    op = assemble_operator(build_mesh(domain, M), s)
    lam = principal_eigenpair(op).lambda1h
    if alpha_grid is None:
        alpha_grid = standard_alpha_grid(lam)
    alphas = [float(a) for a in alpha_grid]
    _check_alphas(alphas, lam)
    cache = unit_ball_cache(s, M)
    R_sharp = domain.measure / 2

    def one(alpha):
        try:
            Q = generalized_torsion(op, alpha).Q
            R = find_radius(cache, alpha, Q, R_sharp)
        except Exception as exc:
            raise type(exc)(f"alpha={alpha:.6g}: {exc}") from exc
        return Q, R, cache.lambda1h * R ** (-2 * s)

    rows = _ordered_map(one, alphas)
    Q = [r[0] for r in rows]
    R = [r[1] for r in rows]
    lam_b = [r[2] for r in rows]
    order = np.argsort(alphas, kind="stable")
    R_sorted = np.asarray(R)[order]
    Q_sorted = np.asarray(Q)[order]
    return KJScan(
        domain=domain.to_literal(), s=float(s), M=int(M), alpha_grid=alphas, Q=Q, R=R,
        lambda_ball=lam_b, lambda_omega=lam, R_sharp=R_sharp,
        R_limit=(cache.lambda1h / lam) ** (1 / (2 * s)),
        margins=[(lam - lb) / lb for lb in lam_b],
        R_nonincreasing=bool(np.all(np.diff(R_sorted) <= R_slack * R_sharp)),
        Q_increasing=bool(np.all(np.diff(Q_sorted) > 0)),
        radius_chain=bool(np.all(np.asarray(R) <= R_sharp * (1 + tol))),
        tol=tol)


def _excess(f, g, norm):
    sigma, d = curve_difference(f, g)
    return float(d.max()) / norm, sigma, d


def comparison_curve_check(domain, s: float, alpha: float, M: int,
                           tol: float | None = None) -> InequalityReport:
    """Mass concentration of w on Omega against w-bar on B_R(alpha).

    The margin is minus the largest excess of int_0^sigma w* over
    int_0^sigma wbar*, relative to ||wbar||_1; the sup-norm consequence is
    folded in the same way.
    """
    domain = _as_domain(domain)
    tol = default_tol(M) if tol is None else tol
    R_sharp = domain.measure / 2
    trend = []
    for Mi in _levels(M):
        op = assemble_operator(build_mesh(domain, Mi), s)
        lam = principal_eigenpair(op).lambda1h
        _check_alphas([alpha], lam)
        res = generalized_torsion(op, alpha)
        cache = unit_ball_cache(s, Mi)
        R = find_radius(cache, alpha, res.Q, R_sharp)
        wbar = ball_torsion_function(cache, alpha, R)
        norm = wbar.integral()
        excess, sigma, d = _excess(res.w, wbar, norm)
        sup_margin = (wbar.lp_norm(math.inf) - res.w.lp_norm(math.inf)) / wbar.lp_norm(math.inf)
        trend.append(min(0.0 - excess, sup_margin))
    curves = {"concentration": (["sigma", "cum_w_minus_cum_wbar"],
                                [[a, b] for a, b in zip(sigma, d)]),
              "radius": (["alpha", "R", "Q", "Q_ball_L1_mismatch"],
                         [[alpha, R, res.Q, abs(norm - res.Q) / res.Q]])}
    return _report("comparison", domain, s, _levels(M), excess, 0.0, trend, tol, curves)


def _ball_eigenfunction(cache, lam_omega, l1_target):
    """Principal eigenfunction of the ball with eigenvalue lam_omega, L1-normalized."""
    s = cache.s
    R1 = (cache.lambda1h / lam_omega) ** (1 / (2 * s))
    z = cache.eigenfunction
    k = l1_target / (R1 * z.integral())
    return R1, GridFunction(scale_mesh(cache.mesh, R1), k * z.values)


def revholder_constant(cache, q: float) -> float:
    """C(1, s, q) from the discrete unit-interval eigenfunction."""
    s, z = cache.s, cache.eigenfunction
    return cache.lambda1h ** ((1 / (2 * s)) * (1 / q - 1)) * z.lp_norm(q) / z.lp_norm(1)


def reverse_holder_report(domain, s: float, q_list, M: int,
                          tol: float | None = None) -> list[InequalityReport]:
    """Eigenfunction concentration and ||u1||_q <= C lambda^(..) ||u1||_1 per q."""
    domain = _as_domain(domain)
    tol = default_tol(M) if tol is None else tol
    q_list = [float(q) for q in q_list]
    if any(not q > 1 for q in q_list):
        raise ValueError("exponents must satisfy 1 < q <= inf")
    conc, per_q = [], {q: [] for q in q_list}
    values = {}
    for Mi in _levels(M):
        op = assemble_operator(build_mesh(domain, Mi), s)
        eig = principal_eigenpair(op)
        u1, lam = eig.eigenfunction, eig.lambda1h
        cache = unit_ball_cache(s, Mi)
        R1, ubar = _ball_eigenfunction(cache, lam, u1.lp_norm(1))
        excess, sigma, d = _excess(u1, ubar, ubar.integral())
        conc.append(0.0 - excess)
        for q in q_list:
            lhs = u1.lp_norm(q)
            expo = 1.0 if math.isinf(q) else 1 - 1 / q
            rhs = revholder_constant(cache, q) * lam ** (expo / (2 * s)) * u1.lp_norm(1)
            per_q[q].append((rhs - lhs) / rhs)
            values[q] = (lhs, rhs)
    reports = [_report("eigen_concentration", domain, s, _levels(M), excess, 0.0, conc, tol,
                       {"concentration": (["sigma", "cum_u1_minus_cum_ubar"],
                                          [[a, b] for a, b in zip(sigma, d)])})]
    for q in q_list:
        tag = "inf" if math.isinf(q) else format(q, "g")
        reports.append(_report(f"reverse_holder[q={tag}]", domain, s, _levels(M),
                               values[q][0], values[q][1], per_q[q], tol))
    return reports


def fk_ratio(cache, q: float) -> float:
    """(f(1)/f(q))^(2s q/(q-1)) with f(r) = (int_0^1 z^r)^(1/r) for the unit eigenfunction."""
    s, z = cache.s, cache.eigenfunction
    h, v = z.mesh.h, z.values

    def log_mean(r):
        return math.log(0.5 * h * np.sum(v ** r))

    if math.isinf(q):
        return (0.5 * h * v.sum() / v.max()) ** (2 * s)
    return math.exp(2 * s * (q * log_mean(1.0) - log_mean(q)) / (q - 1))


def fk_ratio_limit(cache) -> float:
    """Limit of :func:`fk_ratio` as q decreases to 1 (an entropy term, below 1)."""
    s, z = cache.s, cache.eigenfunction
    h, v = z.mesh.h, z.values
    mass = 0.5 * h * v.sum()
    dlog = (0.5 * h * np.sum(v * np.log(v))) / mass
    return math.exp(2 * s * (math.log(mass) - dlog))


def fk_from_revholder_check(domain, s: float, q_grid, M: int,
                            tol: float | None = None) -> InequalityReport:
    """Lower bounds on lambda_1(Omega) obtained from the reverse Holder constant.

    Each bound equals lambda_1h(Omega#) times :func:`fk_ratio`; the report
    compares their supremum over the grid with lambda_1h(Omega#).
    """
    domain = _as_domain(domain)
    tol = default_tol(M) if tol is None else tol
    q_grid = [float(q) for q in q_grid]
    if any(not (1 < q <= 8) for q in q_grid):
        raise ValueError("q grid must lie in (1, 8]")
    trend = []
    for Mi in _levels(M):
        cache = unit_ball_cache(s, Mi)
        lam_sharp = (2 / domain.measure) ** (2 * s) * cache.lambda1h
        ratios = [fk_ratio(cache, q) for q in q_grid]
        bounds = [lam_sharp * r for r in ratios]
        sup = max(bounds)
        trend.append((lam_sharp - sup) / lam_sharp)
    curves = {"ratios": (["q", "bound", "ratio"],
                         [[q, b, r] for q, b, r in zip(q_grid, bounds, ratios)]),
              "limit": (["q", "ratio"], [[1.0, fk_ratio_limit(cache)]])}
    return _report("fk_from_reverse_holder", domain, s, _levels(M), sup, lam_sharp, trend,
                   tol, curves)


def polya_szego_report(domain, s: float, M: int, alpha: float = 0.0,
                       tol: float | None = None) -> InequalityReport:
    """Energy drop of the torsion function under Schwarz symmetrization.

    The margin is ``(E(w) - E(w#) + eps_h) / E(w)``; the per-level gap and
    slack terms go to the ``levels`` curve.
    """
    domain = _as_domain(domain)
    tol = default_tol(M) if tol is None else tol
    ball = schwarz_ball(domain)
    trend, rows = [], []
    for Mi in _levels(M):
        op = assemble_operator(build_mesh(domain, Mi), s)
        op_b = assemble_operator(build_mesh(ball, h=op.mesh.h), s)
        w = generalized_torsion(op, alpha).w
        g = polya_szego_gap(op, op_b, w)
        trend.append((g.gap + g.eps_h + g.roundoff) / g.energy)
        rows.append([Mi, g.gap, g.eps_h, g.truncation, g.kernel_defect, g.dropped])
    curves = {"levels": (["M", "gap", "eps_h", "truncation", "kernel_defect", "dropped"], rows)}
    return _report("polya_szego", domain, s, _levels(M), g.energy, g.energy_sharp - g.eps_h,
                   trend, tol, curves)
