"""Light-cone diagnostics on the segment between two equal mollified charges.

Sweeps intensity at fixed separation and separation at fixed intensity and
reports the largest |grad phi| on the segment together with the flag.

    python3 scripts/two_charge_gamma.py
"""

import argparse

import numpy as np

from bilab.core import Box, PointCharges
from bilab.grid import gamma_diagnostics, solve_grid
from bilab.mollify import mollify_charge


def run(a, sep, half_width, h, eps):
    pts = PointCharges([[-sep / 2, 0.0, 0.0], [sep / 2, 0.0, 0.0]], [a, a])
    rho = mollify_charge(pts, eps, box=Box.cube(half_width), spacing=h)
    phi, _ = solve_grid(rho)
    rep = gamma_diagnostics(phi, pts, exclude_radius=eps)
    return float(rep.segments[0][2].max()), rep.any_flag, rep.affinity_defect[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spacing", type=float, default=0.25)
    ap.add_argument("--eps", type=float, default=0.5)
    args = ap.parse_args()
    print("a,separation,max_grad_on_segment,flag,affinity_defect")
    for a in (0.1, 0.5, 2.0, 4 * np.pi):
        g, f, d = run(a, 2.0, 4.0, args.spacing, args.eps)
        print(f"{a:.6g},2,{g:.6f},{f},{d:.4e}")
    for sep in (1.0, 2.0, 4.0):
        g, f, d = run(4 * np.pi, sep, 4.0, args.spacing, args.eps)
        print(f"{4 * np.pi:.6g},{sep:g},{g:.6f},{f},{d:.4e}")


if __name__ == "__main__":
    main()
