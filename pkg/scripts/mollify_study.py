"""Shrinking-width study for a mollified BIon charge, radial path and optional grid path.

    python3 scripts/mollify_study.py --widths 0.4 0.2 0.1 0.05
    python3 scripts/mollify_study.py --grid --widths 1.0 0.75 0.5
"""

import argparse

import numpy as np

from bilab.core import Box, PointCharges
from bilab.mollify import convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--widths", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05])
    ap.add_argument("--kernel", choices=("bump", "gaussian"), default="bump")
    ap.add_argument("--grid", action="store_true", help="grid solver, limit = finest width")
    ap.add_argument("--half-width", type=float, default=4.0)
    ap.add_argument("--spacing", type=float, default=0.25)
    args = ap.parse_args()
    charge = PointCharges([[0.0, 0.0, 0.0]], [4 * np.pi])
    if args.grid:
        rows = convergence_study(charge, args.widths, "grid", kernel=args.kernel,
                                 box=Box.cube(args.half_width), spacing=args.spacing)
    else:
        rows = convergence_study(charge, args.widths, kernel=args.kernel)
    print("epsilon,sup_distance,max_grad_near_charge,energy")
    for r in rows:
        print(f"{r.epsilon:g},{r.sup_distance:.6e},{r.max_grad_near_charge:.9f},{r.energy:.12g}")


if __name__ == "__main__":
    main()
