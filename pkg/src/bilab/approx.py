"""Radial minimisers of the series (sum of 2h-Laplacians) and theta-truncated functionals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError, Exact, Series, Truncated, energy, origin_power, radial_integral,
    radial_partition, sphere_area,
)
from .radial import solve_radial


def solve_radial_series(rho, n: int, r_grid=None):
    """Unique radial critical point of I_n.

    At each node solve sum_h alpha_h |u|^(2h-2) u = -m(R)/R^(N-1) by
    safeguarded Newton, then integrate inward from the closed tail.  For
    n = 1 and an origin point charge phi(0) is infinite (Coulomb).
    """
    return solve_radial(rho, r_grid, Series(n))


def solve_radial_truncated(rho, theta: float, n: int = 2, r_grid=None):
    """Radial critical point of I_(theta,n); equals the exact solve where |phi'|^2 <= 1 - theta."""
    return solve_radial(rho, r_grid, Truncated(theta, n))


def exceeds_light_cone(phi) -> bool:
    """True when some node slope has |phi'| > 1 (allowed for approximate models)."""
    return bool(np.any(np.abs(phi.dphi[1:]) > 1.0))


@dataclass
class CascadeRow:
    n: int
    energy: float
    sup_distance: float
    max_slope: float
    increment_lower: float = float("nan")


def cascade_study(rho, n_list, r_grid=None):
    """(n, I_n(phi_n), sup-node distance to the exact radial solution, max |phi_n'|) rows."""
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must be strictly ascending")
    exact = solve_radial(rho, r_grid)
    rows = []
    prev = None
    for n in n_list:
        phi = solve_radial_series(rho, n, exact.r_grid)
        e = energy(Series(n), rho, phi)
        with np.errstate(invalid="ignore"):
            dist = float(np.max(np.abs(phi.phi - exact.phi)))
        if np.any(~np.isfinite(phi.phi)):
            dist = np.inf
        slope = float(np.max(np.abs(phi.dphi[1:]))) if len(phi.dphi) > 1 else 0.0
        inc = increment_lower_bound(prev, n, phi) if prev is not None else float("nan")
        rows.append(CascadeRow(n, float(e), dist, slope, inc))
        prev = n
    return rows


def increment_lower_bound(n: int, m: int, phi_m) -> float:
    """Cancellation-free lower bound for I_m(phi_m) - I_n(phi_n), n < m.

    Since I_n(phi_n) <= I_n(phi_m), the increment is at least
    int sum_(h=n+1..m) C_h |phi_m'|^(2h), a sum of positive terms that
    stays resolvable when the two energies agree to every printed digit.
    The far tail beyond r_max is dropped, which keeps the bound valid.
    """
    if not 1 <= n < m:
        raise DomainError("need 1 <= n < m")
    N = phi_m.dimension
    c = np.asarray(Series(m).coefficients) / (2.0 * np.arange(1, m + 1))
    high = c[n:]

    def f(r):
        u = phi_m.slope_at(r)
        t = u * u
        acc = np.zeros_like(t)
        for coef in high[::-1]:
            acc = acc * t + coef
        return t ** (n + 1) * acc * r ** (N - 1)

    part = radial_partition(phi_m.r_grid, getattr(phi_m.moment, "profile", None))
    k = origin_power(Series(m), N, phi_m.saturated_origin)
    return float(sphere_area(N) * radial_integral(f, part, origin_k=k))


def exact_energy(rho, r_grid=None) -> float:
    phi = solve_radial(rho, r_grid)
    return energy(Exact(), rho, phi)


def truncated_energy(rho, theta, n=2, r_grid=None) -> float:
    model = Truncated(theta, n)
    phi = solve_radial(rho, r_grid, model)
    return energy(model, rho, phi)


__all__ = ["solve_radial_series", "solve_radial_truncated", "cascade_study", "CascadeRow",
           "exceeds_light_cone", "increment_lower_bound", "exact_energy", "truncated_energy", "energy"]
