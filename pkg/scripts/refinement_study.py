"""Grid refinement study for a mollified point charge against the radial solver.

The radial solution with zero data on the inscribed ball |x| = L lies below
the box solution, and the one on the circumscribed ball |x| = L sqrt(3)
lies above it (comparison principle).  The inscribed-ball profile is used
as the reference along the axes.  The error at the coarser level bounds
the one at the finer level in the acceptance suite.

    python3 scripts/refinement_study.py --cells 16 32 64 --eps 0.2
"""

import argparse
import time

import numpy as np

from bilab.core import Box, PointCharges
from bilab.grid import solve_grid
from bilab.io import write_table
from bilab.mollify import mollify_charge
from bilab.radial import solve_radial


def axis_errors(cells, half_width, eps, a):
    charge = PointCharges([[0.0, 0.0, 0.0]], [a])
    box = Box.cube(half_width)
    h = 2 * half_width / cells
    rho = mollify_charge(charge, eps, box=box, spacing=h, min_width_cells=0.0)
    t0 = time.perf_counter()
    phi, rep = solve_grid(rho)
    elapsed = time.perf_counter() - t0
    rad = solve_radial(mollify_charge(charge, eps))
    x = box.axes(h)[0]
    inner = rad.phi_at(np.abs(x)) - rad.phi_at(half_width)
    outer = rad.phi_at(np.abs(x)) - rad.phi_at(half_width * np.sqrt(3.0))
    c = cells // 2
    lines = [phi.values[:, c, c], phi.values[c, :, c], phi.values[c, c, :]]
    err = max(float(np.max(np.abs(v - inner))) for v in lines)
    above = min(float(np.min(v - inner)) for v in lines)
    below = min(float(np.min(outer - v)) for v in lines)
    return dict(cells=cells, h=h, sup_error=err, relative=err / inner.max(),
                min_above_inner=above, min_below_outer=below,
                newton=rep.iterations, seconds=elapsed)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--half-width", type=float, default=8.0)
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--a", type=float, default=4 * np.pi)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    rows = [axis_errors(n, args.half_width, args.eps, args.a) for n in args.cells]
    cols = {k: [r[k] for r in rows] for k in rows[0]}
    write_table(args.out, cols)


if __name__ == "__main__":
    main()
