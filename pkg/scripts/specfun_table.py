"""Print the normalization constant and unit-ball torsion data over a grid of orders."""
import argparse

import numpy as np

from fraciso.specfun import (FracOrder, ball_torsion_coefficient, normalization_gamma,
                             unit_ball_torsional_rigidity_exact)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=1)
    ap.add_argument("--points", type=int, default=19)
    args = ap.parse_args()
    print("s,gamma,c,T_ball")
    for s in np.linspace(0.05, 0.95, args.points):
        o = FracOrder(float(s), args.N)
        print(f"{s:.4f},{normalization_gamma(o):.12g},{ball_torsion_coefficient(o):.12g},"
              f"{unit_ball_torsional_rigidity_exact(o):.12g}")


if __name__ == "__main__":
    main()
