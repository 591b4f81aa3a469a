"""Refinement study of lambda_1 and torsional rigidity with Richardson extrapolation."""
import argparse
from dataclasses import dataclass, field

from fraciso import assemble_operator, build_mesh, parse_domain, principal_eigenpair, torsion
from fraciso.spectral import richardson


@dataclass
class StudyConfig:
    domain: str = "(-1,1)"
    s: float = 0.5
    M_list: list = field(default_factory=lambda: [128, 256, 512, 1024])


def run(cfg: StudyConfig):
    dom = parse_domain(cfg.domain)
    lam, T = [], []
    for M in cfg.M_list:
        op = assemble_operator(build_mesh(dom, M), cfg.s)
        lam.append(principal_eigenpair(op).lambda1h)
        T.append(torsion(op).Q)
        print(f"M={M:6d}  lambda1h={lam[-1]:.10f}  T={T[-1]:.10f}")
    for name, vals in (("lambda1", lam), ("T", T)):
        ex = richardson(cfg.M_list, vals)
        print(f"{name}: extrapolated {ex.value:.10f}  order {ex.order:.3f}  "
              f"last increment {ex.error_bar:.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--domain", default=StudyConfig.domain)
    ap.add_argument("--s", type=float, default=StudyConfig.s)
    ap.add_argument("--M", type=int, nargs="+", default=None)
    a = ap.parse_args()
    cfg = StudyConfig(a.domain, a.s)
    if a.M:
        cfg.M_list = a.M
    run(cfg)


if __name__ == "__main__":
    main()
