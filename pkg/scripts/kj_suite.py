"""Sweep the equal-torsion radius bound over the suite domains and write one CSV per case."""
import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

from fraciso.isoperimetry import SUITE_DOMAINS, kohler_jobin_scan


@dataclass
class SuiteConfig:
    M: int = 512
    orders: tuple = (0.3, 0.5, 0.7)
    out: Path = Path("kj_out")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=SuiteConfig.M)
    ap.add_argument("--s", type=float, nargs="+", default=list(SuiteConfig.orders))
    ap.add_argument("--out", type=Path, default=SuiteConfig.out)
    a = ap.parse_args()
    cfg = SuiteConfig(a.M, tuple(a.s), a.out)
    cfg.out.mkdir(parents=True, exist_ok=True)
    for k, dom in enumerate(SUITE_DOMAINS):
        for s in cfg.orders:
            scan = kohler_jobin_scan(dom, s, None, cfg.M)
            head, rows = scan.curve_rows()
            path = cfg.out / f"kj_d{k}_s{s:g}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(head)
                w.writerows(rows)
            rep = scan.summary()
            print(f"{dom:28s} s={s:<4g} worst margin {rep.margin:+.3e}  "
                  f"R(0.9 lam)/R_lim-1 {scan.R[-1] / scan.R_limit - 1:+.4f}  {rep.verdict}")


if __name__ == "__main__":
    main()
