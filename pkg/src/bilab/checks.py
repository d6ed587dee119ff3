"""Property suites run by ``bilab check``.

Each suite returns a list of :class:`CheckResult`; randomised suites draw
from ``numpy.random.default_rng(seed)`` so reruns are identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Exact, PointCharges, RadialProfile, Series, Truncated, flux_coefficient, lagrangian_value,
    series_coefficients,
)


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def inequalities(seed: int = 0) -> list:
    """t/2 <= 1 - sqrt(1 - t) <= t on 1000 uniform points of [0, 1]."""
    t = np.linspace(0.0, 1.0, 1000)
    v = lagrangian_value(Exact(), t)
    lo = bool(np.all(0.5 * t <= v))
    hi = bool(np.all(v <= t))
    return [CheckResult("inequalities", "lower t/2", lo), CheckResult("inequalities", "upper t", hi)]


def series(seed: int = 0, max_order: int = 32) -> list:
    out = []
    alpha = series_coefficients(max_order)
    out.append(CheckResult("series", "alpha_1 = 1", bool(alpha[0] == 1.0)))
    out.append(CheckResult("series", "alpha_h > 0", bool(np.all(alpha > 0))))
    t = np.linspace(0.0, 0.999, 500)
    exact = lagrangian_value(Exact(), t)
    prev = np.zeros_like(t)
    mono, below = True, True
    for n in range(1, max_order + 1):
        v = lagrangian_value(Series(n), t)
        mono &= bool(np.all(v >= prev))
        below &= bool(np.all(v <= exact * (1 + 1e-15)))
        prev = v
    out.append(CheckResult("series", "nondecreasing in n", mono))
    out.append(CheckResult("series", "below exact", below))
    return out


def truncation(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    worst_c0 = worst_c1 = 0.0
    inner_ok = True
    for _ in range(50):
        theta = float(rng.uniform(0.01, 0.99))
        n = int(rng.integers(2, 6))
        m = Truncated(theta, n)
        s0 = 1.0 - theta
        left = 1.0 / np.sqrt(theta)
        right = m.gamma * s0 ** (n - 1) + m.delta
        worst_c0 = max(worst_c0, abs(right - left) / left)
        dl = 0.5 * theta ** -1.5
        dr = m.gamma * (n - 1) * s0 ** (n - 2)
        worst_c1 = max(worst_c1, abs(dr - dl) / dl)
        s = np.linspace(0.0, s0, 200)
        inner_ok &= bool(np.array_equal(flux_coefficient(m, s), 1.0 / np.sqrt(1.0 - s)))
    out.append(CheckResult("truncation", "C0 match", bool(worst_c0 <= 1e-12), f"{worst_c0:.2e}"))
    out.append(CheckResult("truncation", "C1 match", bool(worst_c1 <= 1e-12), f"{worst_c1:.2e}"))
    out.append(CheckResult("truncation", "exact below breakpoint", inner_ok))
    return out


def _random_profile(rng, scale=1.0):
    R = float(rng.uniform(0.5, 3.0))
    k = int(rng.integers(4, 30))
    g = np.sort(rng.uniform(0.0, R, k))
    g = np.unique(np.concatenate([g[g > 1e-3], [R]]))
    v = scale * rng.uniform(0.0, 2.0, len(g))
    return RadialProfile(g, v)


def radial(seed: int = 0, trials: int = 20) -> list:
    from .radial import first_integral_residual, solve_radial
    rng = np.random.default_rng(seed)
    worst = 0.0
    sign_ok = True
    for _ in range(trials):
        rho = _random_profile(rng)
        if rng.uniform() < 0.3:
            rho = [rho, PointCharges([[0.0, 0.0, 0.0]], [float(rng.uniform(0.1, 5.0))])]
        phi = solve_radial(rho)
        worst = max(worst, float(np.max(np.abs(first_integral_residual(phi)))))
        sign_ok &= bool(np.all(np.diff(phi.phi[1:]) <= 1e-15))
    return [CheckResult("radial", "first integral < 1e-12", bool(worst < 1e-12), f"{worst:.2e}"),
            CheckResult("radial", "nonincreasing for nonnegative charge", sign_ok)]


def comparison(seed: int = 0, trials: int = 50) -> list:
    """Ordered radial pairs rho1 <= rho2 give phi1 <= phi2 nodewise."""
    from .radial import default_grid, solve_radial
    rng = np.random.default_rng(seed)
    worst = 0.0
    r = default_grid(1.0, nodes=1024, r_min=1e-5, r_max=1e3)
    for _ in range(trials):
        p1 = _random_profile(rng)
        p1 = RadialProfile(p1.grid, p1.values - float(rng.uniform(0.0, 1.5)))
        extra = _random_profile(rng, scale=float(rng.uniform(0.1, 3.0)))
        # same nodes, so p2 - p1 is the interpolant of nonnegative values
        p2 = RadialProfile(p1.grid, p1.values + extra.density(p1.grid))
        a = solve_radial(p1, r).phi
        b = solve_radial(p2, r).phi
        worst = max(worst, float(np.max(a - b)))
    return [CheckResult("comparison", "phi1 <= phi2", bool(worst <= 1e-10), f"max violation {worst:.2e}")]


SUITES = {
    "inequalities": inequalities,
    "series": series,
    "truncation": truncation,
    "radial": radial,
    "comparison": comparison,
}


def run_suite(name: str, seed: int = 0) -> list:
    if name == "all":
        out = []
        for fn in SUITES.values():
            out.extend(fn(seed))
        return out
    return SUITES[name](seed)


__all__ = ["CheckResult", "SUITES", "run_suite"]
