"""Pointwise inversion of the radial flux law a(u^2) u = g.

The map u -> a(u^2) u is odd and strictly increasing for every model,
so each node is an independent bracketed root problem.
"""

import numpy as np

from .core import Exact, Series, Truncated, flux_coefficient, flux_coefficient_slope

RTOL = 1e-13
MAX_ITER = 200


def safeguarded_newton(f, fprime, target, lo, hi, rtol=RTOL, max_iter=MAX_ITER):
    """Vectorised Newton with bisection fallback for increasing f on [lo, hi].

    Requires f(lo) <= target <= f(hi) elementwise.  Returns the root array.
    """
    target = np.asarray(target, dtype=float)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = 0.5 * (lo + hi)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        fx = f(x)
        res = fx - target
        done = np.abs(res) <= rtol * np.abs(target)
        done |= (hi - lo) <= 4 * np.finfo(float).eps * np.maximum(np.abs(x), 1e-300)
        active &= ~done
        if not np.any(active):
            break
        lo = np.where(active & (res < 0), x, lo)
        hi = np.where(active & (res > 0), x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - res / fprime(x)
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        nxt = np.where(bad, 0.5 * (lo + hi), step)
        x = np.where(active, nxt, x)
    return x


def invert_flux(model, g):
    """Solve a(u^2) u = g for u, elementwise.

    Exact: closed form u = g / sqrt(1 + g^2) (|u| < 1 always).  Series and
    Truncated: safeguarded Newton inside a bracket that is provably valid,
    |u| <= min(|g|/alpha_1, (|g|/alpha_n)^(1/(2n-1))) for the series and
    |u| <= |g| sqrt(theta) on the truncated polynomial branch.
    """
    g = np.asarray(g, dtype=float)
    scalar = g.ndim == 0
    g = np.atleast_1d(g)
    sign = np.sign(g)
    ag = np.abs(g)
    nan = np.isnan(g)
    ag = np.where(nan, 0.0, ag)
    if isinstance(model, Exact):
        with np.errstate(invalid="ignore"):
            u = np.where(np.isinf(ag), 1.0, ag / np.sqrt(1.0 + ag * ag))
    elif isinstance(model, Series):
        u = _invert_series(model, ag)
    elif isinstance(model, Truncated):
        u = _invert_truncated(model, ag)
    else:
        raise TypeError(f"unknown model {model!r}")
    out = np.where(nan, np.nan, sign * u)
    return out[0] if scalar else out


def _poly(u, model):
    return flux_coefficient(model, u * u) * u


def _dpoly(u, model):
    s = u * u
    return flux_coefficient(model, s) + 2.0 * s * flux_coefficient_slope(model, s)


def _invert_series(model: Series, ag):
    alpha = model.coefficients
    n = model.order
    if n == 1:
        return ag / alpha[0]
    finite = np.isfinite(ag)
    agf = np.where(finite, ag, 0.0)
    hi = np.minimum(agf / alpha[0], (agf / alpha[-1]) ** (1.0 / (2 * n - 1)))
    u = safeguarded_newton(lambda x: _poly(x, model), lambda x: _dpoly(x, model),
                           agf, np.zeros_like(agf), hi)
    return np.where(finite, u, np.inf)


def _invert_truncated(model: Truncated, ag):
    th = model.theta
    finite = np.isfinite(ag)
    agf = np.where(finite, ag, 0.0)
    knee = np.sqrt((1.0 - th) / th)  # flux at the breakpoint |u|^2 = 1 - theta
    inner = agf / np.sqrt(1.0 + agf * agf)
    outer_mask = agf > knee
    if np.any(outer_mask):
        go = agf[outer_mask]
        lo = np.full_like(go, np.sqrt(1.0 - th))
        hi = go * np.sqrt(th)
        uo = safeguarded_newton(lambda x: _poly(x, model), lambda x: _dpoly(x, model), go, lo, hi)
        inner = inner.copy()
        inner[outer_mask] = uo
    return np.where(finite, inner, np.inf)
