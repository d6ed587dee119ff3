"""Mollified point charges and the uniform-convergence study for shrinking widths."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .core import (
    Box, DomainError, Exact, GridDensity, PointCharges, RadialProfile, energy, sphere_area,
)

PROFILE_NODES = 400
GAUSS_CUTOFF = 8.0  # gaussian kernels are cut at 8 widths
SUBCELL = 4


def _shape(kernel: str):
    if kernel == "bump":
        def f(x):
            x = np.asarray(x, dtype=float)
            inside = x < 1.0
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                v = np.exp(-1.0 / (1.0 - x * x))
            return np.where(inside, v, 0.0)
        return f, 1.0
    if kernel == "gaussian":
        return (lambda x: np.exp(-0.5 * np.asarray(x, dtype=float) ** 2)), GAUSS_CUTOFF
    raise DomainError(f"unknown kernel {kernel!r}")


@lru_cache(maxsize=None)
def kernel_norm(kernel: str, dim: int) -> float:
    """omega_N int_0^R k(x) x^(N-1) dx for the unit-width kernel shape."""
    f, R = _shape(kernel)
    val, _ = quad(lambda x: float(f(x)) * x ** (dim - 1), 0.0, R, epsabs=0.0, epsrel=1e-13, limit=200)
    return sphere_area(dim) * val


def kernel_value(kernel: str, r, eps: float, dim: int):
    """Unit-mass kernel of width eps at radius r."""
    f, _ = _shape(kernel)
    return f(np.asarray(r, dtype=float) / eps) / (kernel_norm(kernel, dim) * eps ** dim)


def kernel_support(kernel: str, eps: float) -> float:
    return _shape(kernel)[1] * eps


def mollify_charge(points: PointCharges, eps: float, kernel: str = "bump", *,
                   box: Box = None, spacing: float = None, nodes: int = PROFILE_NODES,
                   min_width_cells: float = 2.0):
    """Smooth density sum_i a_i k_eps(x - x_i).

    Without a box the charges must sit at the origin and a RadialProfile
    is returned; with (box, spacing) a GridDensity of dual-cell averages.
    Either way the representation is rescaled so its total is sum a_i to
    rounding.  Grid output requires eps >= min_width_cells * spacing.
    """
    if not eps > 0:
        raise DomainError("mollification width must be positive")
    _shape(kernel)
    N = points.dimension
    if box is None:
        if not points.at_origin():
            raise DomainError("radial mollification needs every charge at the origin")
        a = points.total
        R = kernel_support(kernel, eps)
        grid = np.linspace(R / nodes, R, nodes)
        vals = kernel_value(kernel, grid, eps, N)
        prof = RadialProfile(grid, vals, N)
        scale = a / (sphere_area(N) * prof.total_moment)
        return RadialProfile(grid, vals * scale, N)
    if spacing is None:
        raise DomainError("grid mollification needs a spacing")
    if eps < min_width_cells * spacing:
        raise DomainError(f"width {eps} below {min_width_cells} grid spacings ({spacing})")
    if box.dimension != N:
        raise DomainError("dimension mismatch between box and charges")
    shape = tuple(n + 1 for n in box.cells(spacing))
    out = np.zeros(shape)
    for x0, a in zip(points.positions, points.intensities):
        out += a * _cell_average(kernel, x0, eps, box, spacing, shape)
    return GridDensity(box, spacing, out)


def _cell_average(kernel, x0, eps, box, h, shape):
    """Dual-cell averages of the unit-mass kernel centred at x0, normalised to h^N sum = 1."""
    d = len(shape)
    lo = np.array(box.lower)
    R = kernel_support(kernel, eps)
    i_lo = np.maximum(np.floor((x0 - R - h / 2 - lo) / h).astype(int), 0)
    i_hi = np.minimum(np.ceil((x0 + R + h / 2 - lo) / h).astype(int), np.array(shape) - 1)
    if np.any(i_lo > i_hi):
        raise DomainError("mollified charge lies outside the box")
    q = max(SUBCELL, int(np.ceil(4.0 * h / eps)))  # keep several points inside the kernel
    gx, gw = np.polynomial.legendre.leggauss(q)
    gx = 0.5 * h * gx
    gw = 0.5 * gw
    axes = [lo[k] + h * np.arange(i_lo[k], i_hi[k] + 1) for k in range(d)]
    # coordinates of every subcell quadrature point along each axis: (n_k, q)
    sub = [a[:, None] + gx[None, :] for a in axes]
    r2 = 0.0
    for k in range(d):
        shp = [1] * (2 * d)
        shp[k] = len(axes[k])
        shp[d + k] = q
        r2 = r2 + ((sub[k] - x0[k]) ** 2).reshape(shp)
    w = 1.0
    for k in range(d):
        shp = [1] * (2 * d)
        shp[d + k] = q
        w = w * gw.reshape(shp)
    vals = kernel_value(kernel, np.sqrt(r2), eps, d) * w
    avg = vals.sum(axis=tuple(range(d, 2 * d)))
    total = avg.sum() * h ** d
    if total <= 0:
        raise DomainError("kernel unresolved by the grid")
    block = np.zeros(shape)
    block[tuple(slice(i_lo[k], i_hi[k] + 1) for k in range(d))] = avg / total
    return block


def dominating_density(points: PointCharges, eps_list, kernel: str = "bump", **grid):
    """rho~ = (eps_max/eps_min)^N |rho|_(eps_max): dominates every |rho_eps|, eps in the list."""
    e_max, e_min = max(eps_list), min(eps_list)
    N = points.dimension
    absolute = PointCharges(points.positions, np.abs(points.intensities))
    base = mollify_charge(absolute, e_max, kernel, **grid)
    factor = (e_max / e_min) ** N
    if isinstance(base, RadialProfile):
        return RadialProfile(base.grid, base.values * factor, N)
    return GridDensity(base.box, base.spacing, base.values * factor)


@dataclass
class StudyRow:
    epsilon: float
    sup_distance: float
    max_grad_near_charge: float
    energy: float


def convergence_study(points: PointCharges, eps_list, solver: str = "radial", *,
                      kernel: str = "bump", r_grid=None, box: Box = None, spacing: float = None,
                      grid_options: dict = None):
    """Distances of the mollified solutions to the point-charge limit.

    radial: the limit is the exact BIon-type solve of the point charge;
    grid: the limit is the finest-width solve in the list.
    """
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be strictly descending")
    if solver == "radial":
        return _radial_study(points, eps_list, kernel, r_grid)
    if solver == "grid":
        return _grid_study(points, eps_list, kernel, box, spacing, grid_options or {})
    raise DomainError(f"unknown solver {solver!r}")


def _radial_study(points, eps_list, kernel, r_grid):
    from .radial import charge_scale, default_grid, solve_radial
    if r_grid is None:
        r_grid = default_grid(charge_scale(points))
    limit = solve_radial(points, r_grid)
    rows = []
    for eps in eps_list:
        prof = mollify_charge(points, eps, kernel)
        phi = solve_radial(prof, r_grid)
        dist = float(np.max(np.abs(phi.phi - limit.phi)))
        band = np.linspace(eps, 2 * eps, 257)
        near = float(np.max(np.abs(phi.slope_at(band))))
        rows.append(StudyRow(eps, dist, near, energy(Exact(), prof, phi)))
    return rows


def _grid_study(points, eps_list, kernel, box, spacing, options):
    from .grid import solve_grid
    sols = []
    for eps in eps_list:
        rho = mollify_charge(points, eps, kernel, box=box, spacing=spacing,
                             min_width_cells=options.get("min_width_cells", 2.0))
        opts = {k: v for k, v in options.items() if k != "min_width_cells"}
        phi, rep = solve_grid(rho, **opts)
        sols.append((eps, phi, rep))
    limit = sols[-1][1]
    rows = []
    mesh = np.meshgrid(*box.axes(spacing), indexing="ij")
    for eps, phi, rep in sols:
        dist = float(np.max(np.abs(phi.values - limit.values)))
        gn = phi.grad_norm()
        centers = [m[tuple(slice(0, -1) for _ in range(box.dimension))] + spacing / 2 for m in mesh]
        near = 0.0
        for x0 in points.positions:
            d2 = sum((c - x) ** 2 for c, x in zip(centers, x0))
            sel = d2 <= (2 * eps) ** 2
            if np.any(sel):
                near = max(near, float(np.max(gn[sel])))
        rows.append(StudyRow(eps, dist, near, rep.energy))
    return rows
