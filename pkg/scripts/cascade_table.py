"""Series cascade for the BIon and the uniform ball, with certified increments.

    python3 scripts/cascade_table.py --n 1 2 4 8 16 32
"""

import argparse

import numpy as np

from bilab.approx import cascade_study
from bilab.core import PointCharges, RadialProfile


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[1, 2, 4, 8, 16, 32])
    args = ap.parse_args()
    g = np.linspace(1e-3, 1.0, 1000)
    charges = {"bion": PointCharges([[0.0, 0.0, 0.0]], [4 * np.pi]),
               "ball": RadialProfile(g, np.ones_like(g))}
    print("charge,n,energy,increment_lower,sup_distance,max_slope")
    for name, rho in charges.items():
        for row in cascade_study(rho, args.n):
            print(f"{name},{row.n},{row.energy:.17g},{row.increment_lower:.3e},"
                  f"{row.sup_distance:.6e},{row.max_slope:.6g}")


if __name__ == "__main__":
    main()
