"""Shared types for the electrostatic Born-Infeld laboratory.

Charge densities, Lagrangian integrands, potentials on radial and box
grids, and the energy / duality-pairing evaluations used by every
solver.  The Born-Infeld scale b is fixed to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.special import gammaln

# sup-norm guard band for the exact integrand: |grad phi|^2 must stay below this
EXACT_GUARD = 1.0 - 1e-14
GL_ORDER = 8


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class SolverError(RuntimeError):
    """A solver failed; ``last`` carries the last iterate and ``history`` the residuals."""

    def __init__(self, message, last=None, history=None):
        super().__init__(message)
        self.last = last
        self.history = history if history is not None else []


def sphere_area(n: int) -> float:
    """Measure of the unit (n-1)-sphere in R^n (omega_3 = 4 pi)."""
    return float(2.0 * np.exp(0.5 * n * np.log(np.pi) - gammaln(0.5 * n)))


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


# ----------------------------------------------------------------------
# Lagrangian models


@dataclass(frozen=True)
class Exact:
    """V(t) = 1 - sqrt(1 - t), defined for 0 <= t <= 1."""

    def describe(self) -> dict:
        return {"variant": "exact"}


@dataclass(frozen=True)
class Series:
    """Order-n Taylor truncation of V: sum_h alpha_h t^h / (2h)."""

    order: int
    coefficients: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(series_coefficients(self.order)))

    def describe(self) -> dict:
        return {"variant": "series", "order": self.order}


@dataclass(frozen=True)
class Truncated:
    """C^1 surgery of a_0(s) = (1-s)^(-1/2) past s = 1 - theta.

    For s > 1 - theta the coefficient is gamma s^(n-1) + delta, with
    (gamma, delta) from :func:`truncation_match` unless given.
    """

    theta: float
    power: int = 2
    gamma: float = None
    delta: float = None

    def __post_init__(self):
        g, d = truncation_match(self.theta, self.power)
        if self.gamma is None:
            object.__setattr__(self, "gamma", g)
        if self.delta is None:
            object.__setattr__(self, "delta", d)
        if not (np.isclose(self.gamma, g, rtol=1e-12, atol=0.0)
                and np.isclose(self.delta, d, rtol=1e-12, atol=1e-300)):
            raise DomainError("gamma/delta do not give a C^1 coefficient at 1 - theta")

    @property
    def breakpoint(self) -> float:
        return 1.0 - self.theta

    def describe(self) -> dict:
        return {"variant": "truncated", "theta": self.theta, "power": self.power,
                "gamma": self.gamma, "delta": self.delta}


LagrangianModel = Union[Exact, Series, Truncated]


def series_coefficients(n: int) -> np.ndarray:
    """alpha_h, h = 1..n, of the expansion of the curvature operator.

    alpha_h = 2h C_h where C_h are the Taylor coefficients of 1 - sqrt(1 - s),
    generated by the ratio recurrence (no factorials, so no overflow).
    """
    if int(n) != n or n < 1:
        raise DomainError(f"series order must be an integer >= 1, got {n}")
    n = int(n)
    c = np.empty(n)
    c[0] = 0.5
    for h in range(1, n):
        c[h] = c[h - 1] * (2 * h - 1) / (2 * (h + 1))
    return 2.0 * np.arange(1, n + 1) * c


def truncation_match(theta: float, n: int) -> tuple[float, float]:
    """(gamma, delta) making gamma s^(n-1) + delta meet a_0 in a C^1 way at 1 - theta."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    if int(n) != n or n < 2:
        raise DomainError("a C^1 match needs a nonconstant tail, i.e. power n >= 2")
    s0 = 1.0 - theta
    gamma = 0.5 * theta ** -1.5 / ((n - 1) * s0 ** (n - 2))
    delta = theta ** -0.5 - gamma * s0 ** (n - 1)
    return float(gamma), float(delta)


def _check_t(model, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("lagrangian argument must be >= 0")
    if isinstance(model, Exact) and np.any(t > 1.0):
        raise DomainError("exact Lagrangian is only defined for t <= 1")
    return t


def _series_poly(coefs, s):
    # Horner evaluation of sum_k coefs[k] s^k
    out = np.zeros_like(s, dtype=float)
    for c in coefs[::-1]:
        out = out * s + c
    return out


def lagrangian_value(model: LagrangianModel, t):
    """Integrand value at t = |grad phi|^2 for the given model."""
    t = _check_t(model, t)
    if isinstance(model, Exact):
        # 1 - sqrt(1-t) written without cancellation
        return t / (1.0 + np.sqrt(1.0 - t))
    if isinstance(model, Series):
        alpha = np.asarray(model.coefficients)
        c = alpha / (2.0 * np.arange(1, model.order + 1))
        return t * _series_poly(c, t)
    s0 = model.breakpoint
    n = model.power
    inner = np.minimum(t, s0)
    val = inner / (1.0 + np.sqrt(1.0 - inner))
    over = np.maximum(t - s0, 0.0)
    tail = 0.5 * (model.gamma * (np.maximum(t, s0) ** n - s0 ** n) / n + model.delta * over)
    return val + np.where(t > s0, tail, 0.0)


def flux_coefficient(model: LagrangianModel, s):
    """a(s) = 2 dV/dt at t = s, so the flux is a(|grad phi|^2) grad phi."""
    s = _check_t(model, s)
    if isinstance(model, Exact):
        return 1.0 / np.sqrt(1.0 - s)
    if isinstance(model, Series):
        return _series_poly(np.asarray(model.coefficients), s)
    s0 = model.breakpoint
    inner = 1.0 / np.sqrt(1.0 - np.minimum(s, s0))
    return np.where(s > s0, model.gamma * s ** (model.power - 1) + model.delta, inner)


def flux_coefficient_slope(model: LagrangianModel, s):
    """a'(s)."""
    s = _check_t(model, s)
    if isinstance(model, Exact):
        return 0.5 * (1.0 - s) ** -1.5
    if isinstance(model, Series):
        alpha = np.asarray(model.coefficients)
        d = alpha[1:] * np.arange(1, model.order)
        return _series_poly(d, s) if len(d) else np.zeros_like(s)
    s0 = model.breakpoint
    n = model.power
    inner = 0.5 * (1.0 - np.minimum(s, s0)) ** -1.5
    return np.where(s > s0, model.gamma * (n - 1) * s ** (n - 2), inner)


def _g4_tail_coefficient(model) -> float:
    # slope u = g + k g^3 + ... for small flux g; k = -1/2 unless the model is linear
    if isinstance(model, Series) and model.order == 1:
        return 0.0
    return -0.5


# ----------------------------------------------------------------------
# Charges


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial density rho(r), piecewise linear through (grid, values).

    rho equals values[0] on [0, grid[0]] and vanishes beyond grid[-1].
    """

    grid: np.ndarray
    values: np.ndarray
    dimension: int = 3

    def __post_init__(self):
        g = _frozen(np.atleast_1d(self.grid))
        v = _frozen(np.atleast_1d(self.values))
        if g.ndim != 1 or g.shape != v.shape or g.size == 0:
            raise DomainError("profile grid and values must be 1-d arrays of equal length")
        if g[0] <= 0 or np.any(np.diff(g) <= 0):
            raise DomainError("profile grid must be strictly ascending positive reals")
        if not np.all(np.isfinite(v)):
            raise DomainError("profile values must be finite")
        if self.dimension < 3:
            raise DomainError("dimension must be >= 3")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        # node-wise cumulative moments, exact for the interpolant
        nodes = np.concatenate([[0.0], g])
        vals = np.concatenate([[v[0]], v])
        seg = _segment_moment(nodes[:-1], nodes[1:], vals[:-1], vals[1:], self.dimension)
        object.__setattr__(self, "_node_moment", _frozen(np.concatenate([[0.0], np.cumsum(seg)])))

    @property
    def support(self) -> float:
        return float(self.grid[-1])

    def density(self, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.grid, self.values)
        return np.where(r > self.grid[-1], 0.0, out)

    def moment(self, r):
        """int_0^r rho(s) s^(N-1) ds, exact for the piecewise-linear density."""
        r = np.asarray(r, dtype=float)
        nodes = np.concatenate([[0.0], self.grid])
        vals = np.concatenate([[self.values[0]], self.values])
        rc = np.clip(r, 0.0, nodes[-1])
        i = np.clip(np.searchsorted(nodes, rc, side="right") - 1, 0, len(nodes) - 2)
        a = nodes[i]
        b = nodes[i + 1]
        va = vals[i]
        frac = (rc - a) / (b - a)
        vr = va + (vals[i + 1] - va) * frac
        return self._node_moment[i] + _segment_moment(a, rc, va, vr, self.dimension)

    @property
    def total_moment(self) -> float:
        return float(self._node_moment[-1])


def _segment_moment(a, b, va, vb, dim):
    # Gauss-Legendre, exact for the degree-dim polynomial (linear rho times r^(dim-1))
    x, w = np.polynomial.legendre.leggauss(dim // 2 + 1)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    va = np.asarray(va, dtype=float)[..., None]
    vb = np.asarray(vb, dtype=float)[..., None]
    t = 0.5 * (x + 1.0)
    r = a + (b - a) * t
    rho = va + (vb - va) * t
    return 0.5 * np.sum(w * rho * r ** (dim - 1), axis=-1) * (b - a)[..., 0]


@dataclass(frozen=True, eq=False)
class PointCharges:
    """rho = sum_i a_i delta_{x_i}."""

    positions: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        p = _frozen(np.atleast_2d(np.asarray(self.positions, dtype=float)))
        a = _frozen(np.atleast_1d(self.intensities))
        if p.shape[0] != a.shape[0]:
            raise DomainError("one intensity per position required")
        if p.shape[1] < 3:
            raise DomainError("dimension must be >= 3")
        if np.any(a == 0):
            raise DomainError("point-charge intensities must be nonzero")
        for i in range(len(a)):
            for j in range(i):
                if np.array_equal(p[i], p[j]):
                    raise DomainError("point-charge positions must be pairwise distinct")
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "intensities", a)

    @property
    def dimension(self) -> int:
        return int(self.positions.shape[1])

    @property
    def total(self) -> float:
        return float(np.sum(self.intensities))

    def at_origin(self, tol: float = 1e-14) -> bool:
        return bool(np.all(np.linalg.norm(self.positions, axis=1) <= tol))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower, upper]."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lower)
        hi = tuple(float(x) for x in self.upper)
        if len(lo) != len(hi) or len(lo) < 3:
            raise DomainError("box needs matching bounds in >= 3 dimensions")
        if any(h <= l for l, h in zip(lo, hi)):
            raise DomainError("box upper bounds must exceed lower bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, half_width: float, dim: int = 3) -> "Box":
        return cls((-half_width,) * dim, (half_width,) * dim)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def cells(self, h: float) -> tuple:
        n = []
        for lo, hi in zip(self.lower, self.upper):
            k = (hi - lo) / h
            if abs(k - round(k)) > 1e-9 * max(1.0, k):
                raise DomainError(f"spacing {h} does not divide box edge {hi - lo}")
            n.append(int(round(k)))
        return tuple(n)

    def axes(self, h: float) -> list:
        return [lo + h * np.arange(n + 1) for lo, n in zip(self.lower, self.cells(h))]

    def contains(self, x, strict: bool = False) -> bool:
        x = np.asarray(x, dtype=float)
        lo, hi = np.array(self.lower), np.array(self.upper)
        if strict:
            return bool(np.all(x > lo) and np.all(x < hi))
        return bool(np.all(x >= lo) and np.all(x <= hi))


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Nodal density on a box grid of spacing h; cell sums use weight h^N."""

    box: Box
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        if self.spacing <= 0:
            raise DomainError("spacing must be positive")
        v = _frozen(self.values)
        shape = tuple(n + 1 for n in self.box.cells(self.spacing))
        if v.shape != shape:
            raise DomainError(f"density shape {v.shape} does not match grid {shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("density values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def dimension(self) -> int:
        return self.box.dimension

    @property
    def total(self) -> float:
        return float(np.sum(self.values) * self.spacing ** self.dimension)


@dataclass(frozen=True, eq=False)
class MollifiedPoints:
    """Point charges smeared with a radial kernel of width eps."""

    base: PointCharges
    width: float
    kernel: str = "bump"

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("mollification width must be positive")
        if self.kernel not in ("gaussian", "bump"):
            raise DomainError(f"unknown kernel {self.kernel!r}")

    @property
    def dimension(self) -> int:
        return self.base.dimension


@dataclass(frozen=True, eq=False)
class ZeroCharge:
    """rho = 0 in R^N."""

    dimension: int = 3


ChargeSpec = Union[RadialProfile, PointCharges, GridDensity, MollifiedPoints, ZeroCharge]


# ----------------------------------------------------------------------
# Potentials


@dataclass(frozen=True, eq=False)
class RadialPotential:
    """Radial potential sampled on an ascending grid starting at r = 0.

    ``gap`` holds 1 - |phi'| computed without cancellation, so that the
    light-cone distance stays meaningful where |phi'| rounds to 1.
    ``moment`` (optional) is the cumulative-moment function the potential
    was built from; when present slopes are evaluated from it off-grid,
    otherwise from interpolation of ``dphi``.  ``components`` (optional)
    holds (weight, potential) pairs on the same grid whose weighted sum
    this potential is; values and slopes are then evaluated from them.
    """

    dimension: int
    r_grid: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    tail_constant: float
    total_moment: float
    gap: np.ndarray = None
    model: LagrangianModel = Exact()
    moment: Callable = None
    saturated_origin: bool = False
    components: tuple = ()

    def __post_init__(self):
        r = _frozen(self.r_grid)
        if r.ndim != 1 or r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise DomainError("r_grid must be strictly ascending and start at 0")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "phi", _frozen(self.phi))
        object.__setattr__(self, "dphi", _frozen(self.dphi))
        gap = 1.0 - np.abs(self.dphi) if self.gap is None else self.gap
        object.__setattr__(self, "gap", _frozen(gap))
        if self.phi.shape != r.shape or self.dphi.shape != r.shape:
            raise DomainError("phi and dphi must match r_grid")

    @property
    def r_max(self) -> float:
        return float(self.r_grid[-1])

    def flux_density_at(self, r):
        """(u, g): slope u = phi'(r) and g = a(u^2) u, the flux per unit r^(N-1)."""
        r = np.asarray(r, dtype=float)
        N = self.dimension
        if self.components:
            u = sum(w * c.slope_at(r) for w, c in self.components)
            return u, self._flux_of(u)
        if self.moment is not None:
            from .scalar import invert_flux
            m = self.moment(r)
            with np.errstate(divide="ignore", invalid="ignore"):
                g = np.where(m == 0.0, 0.0, -m / r ** (N - 1))
            u = invert_flux(self.model, g)
            return u, g
        u = self._slope_interp(r)
        return u, self._flux_of(u)

    def _flux_of(self, u):
        if isinstance(self.model, Exact):
            uu = np.clip(np.abs(u), 0.0, 1.0 - 1e-16)
            return u / np.sqrt((1.0 - uu) * (1.0 + uu))
        return flux_coefficient(self.model, u * u) * u

    def slope_at(self, r):
        return self.flux_density_at(r)[0]

    def _slope_interp(self, r):
        ok = np.isfinite(self.dphi)
        f = PchipInterpolator(self.r_grid[ok], self.dphi[ok], extrapolate=True)
        r = np.asarray(r, dtype=float)
        out = f(np.minimum(r, self.r_max))
        c = self.total_moment
        N = self.dimension
        with np.errstate(divide="ignore"):
            far = -c / np.maximum(r, 1e-300) ** (N - 1)
        return np.where(r > self.r_max, far, out)

    def tail_value(self, r):
        """Potential beyond r_max from the constant-moment closed tail."""
        N = self.dimension
        c = self.total_moment
        r = np.asarray(r, dtype=float)
        k = _g4_tail_coefficient(self.model)
        return c * r ** -(N - 2) / (N - 2) + k * c ** 3 * r ** -(3 * N - 4) / (3 * N - 4)

    def phi_at(self, r):
        """Potential at arbitrary radii."""
        r = np.asarray(r, dtype=float)
        if r.ndim == 0:
            return float(self.phi_at(r[None])[0])
        if self.components:
            return sum(w * c.phi_at(r) for w, c in self.components)
        out = np.empty_like(r)
        far = r >= self.r_max
        out[far] = self.tail_value(r[far])
        near = ~far
        if not np.any(near):
            return out
        rn = r[near]
        i = np.clip(np.searchsorted(self.r_grid, rn, side="right") - 1, 0, len(self.r_grid) - 2)
        if self.moment is not None:
            a = self.r_grid[i]
            x, w = np.polynomial.legendre.leggauss(GL_ORDER)
            pts = a[:, None] + (rn - a)[:, None] * 0.5 * (x + 1.0)
            vals = self.slope_at(pts)
            integral = 0.5 * (rn - a) * np.sum(w * vals, axis=1)
            res = self.phi[i] + integral
            res = np.where(rn == a, self.phi[i], res)
            out[near] = res
        else:
            ok = np.isfinite(self.phi) & np.isfinite(self.dphi)
            spl = CubicHermiteSpline(self.r_grid[ok], self.phi[ok], self.dphi[ok])
            out[near] = spl(rn)
        at0 = near.copy()
        at0[near] = rn == 0.0
        out[at0] = self.phi[0]
        return out

    def perturbed(self, eta: Callable, deta: Callable, t: float) -> "RadialPotential":
        """phi + t*eta sampled on the same grid (slopes by interpolation afterwards)."""
        r = self.r_grid
        return RadialPotential(
            self.dimension, r, self.phi + t * eta(r), self.dphi + t * deta(r),
            self.tail_constant, self.total_moment, None, self.model, None,
            self.saturated_origin)


@dataclass(frozen=True, eq=False)
class GridPotential:
    """Box-grid scalar field with zero boundary layer."""

    box: Box
    spacing: float
    values: np.ndarray
    active_lagrangian: LagrangianModel = Exact()

    def __post_init__(self):
        v = _frozen(self.values)
        shape = tuple(n + 1 for n in self.box.cells(self.spacing))
        if v.shape != shape:
            raise DomainError(f"potential shape {v.shape} does not match grid {shape}")
        if np.any(_boundary_values(v) != 0.0):
            raise DomainError("grid potential must vanish on the boundary layer")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "gradient", _frozen(forward_gradient(v, self.spacing)))

    @property
    def dimension(self) -> int:
        return self.box.dimension

    def grad_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.gradient ** 2, axis=0))

    def interpolate(self, points) -> np.ndarray:
        return multilinear(self.values, self.box, self.spacing, points)


def _boundary_values(v):
    parts = []
    for ax in range(v.ndim):
        parts.append(np.take(v, 0, axis=ax).ravel())
        parts.append(np.take(v, -1, axis=ax).ravel())
    return np.concatenate(parts)


def forward_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Per-cell forward differences: component k of cell c is (v[c+e_k] - v[c]) / h."""
    d = values.ndim
    cells = tuple(s - 1 for s in values.shape)
    out = np.empty((d,) + cells)
    for k in range(d):
        hi = [slice(0, n) for n in cells]
        hi[k] = slice(1, cells[k] + 1)
        lo = [slice(0, n) for n in cells]
        out[k] = (values[tuple(hi)] - values[tuple(lo)]) / h
    return out


def multilinear(values: np.ndarray, box: Box, h: float, points) -> np.ndarray:
    """Multilinear interpolation of nodal values at points (k, d)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.array(box.lower)
    cells = np.array(box.cells(h))
    for p in pts:
        if not box.contains(p):
            raise DomainError(f"point {p} lies outside the grid box")
    x = (pts - lo) / h
    i0 = np.clip(np.floor(x).astype(int), 0, cells - 1)
    f = x - i0
    d = pts.shape[1]
    out = np.zeros(len(pts))
    for corner in range(2 ** d):
        bits = [(corner >> k) & 1 for k in range(d)]
        w = np.ones(len(pts))
        idx = []
        for k, b in enumerate(bits):
            w = w * (f[:, k] if b else 1.0 - f[:, k])
            idx.append(i0[:, k] + b)
        out += w * values[tuple(idx)]
    return out


@dataclass
class SolveReport:
    energy: float
    el_residual_sup: float
    max_grad: float
    iterations: int
    quadrature_points: int
    wall_notes: str = ""
    history: list = field(default_factory=list)


# ----------------------------------------------------------------------
# Radial quadrature


def _gl_nodes(a, b, order=GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[:, None]
    pts = a + (b - a) * 0.5 * (x + 1.0)
    wts = (b - a) * 0.5 * w
    return pts, wts


def origin_power(model: LagrangianModel, dimension: int, origin_charge: bool) -> int:
    """Substitution exponent k (r = r1 x^k) that removes power singularities at 0."""
    if not origin_charge or isinstance(model, Exact):
        return 1
    n = model.order if isinstance(model, Series) else model.power
    return 2 * n - 1


def radial_partition(r_grid, rho=None) -> np.ndarray:
    """Quadrature breakpoints: the grid plus the profile nodes inside it."""
    pts = [np.asarray(r_grid, dtype=float)]
    prof = _radial_profile_of(rho) if rho is not None else None
    if prof is not None:
        inside = prof.grid[prof.grid < pts[0][-1]]
        pts.append(inside)
    p = np.unique(np.concatenate(pts))
    if p[0] != 0.0:
        p = np.concatenate([[0.0], p])
    return p


def radial_integral(f: Callable, partition, origin_k: int = 1, order: int = GL_ORDER) -> float:
    """int_0^{partition[-1]} f(r) dr by Gauss-Legendre on every sub-interval.

    The first interval uses r = r1 x^k to absorb integrable r^(-beta)
    singularities of the approximate-model slopes at a point charge.
    """
    p = np.asarray(partition, dtype=float)
    pts, wts = _gl_nodes(p[1:-1], p[2:], order)
    total = float(np.sum(wts * f(pts))) if len(p) > 2 else 0.0
    r1 = p[1]
    x, w = np.polynomial.legendre.leggauss(2 * order)
    xs = 0.5 * (x + 1.0)
    k = origin_k
    r0 = r1 * xs ** k
    jac = r1 * k * xs ** (k - 1) * 0.5 * w
    total += float(np.sum(jac * f(r0)))
    return total


def _radial_profile_of(rho):
    if isinstance(rho, RadialProfile):
        return rho
    if isinstance(rho, MollifiedPoints):
        from .mollify import mollify_charge
        out = mollify_charge(rho.base, rho.width, rho.kernel)
        return out if isinstance(out, RadialProfile) else None
    return None


# ----------------------------------------------------------------------
# Pairing and energy


def pairing(rho: ChargeSpec, phi) -> float:
    """Duality pairing <rho, phi>."""
    if isinstance(rho, ZeroCharge):
        return 0.0
    if isinstance(rho, (list, tuple)):
        return float(sum(pairing(part, phi) for part in rho))
    if isinstance(phi, RadialPotential):
        return _pairing_radial(rho, phi)
    if isinstance(phi, GridPotential):
        return _pairing_grid(rho, phi)
    raise TypeError(f"unsupported potential type {type(phi).__name__}")


def _pairing_radial(rho, phi: RadialPotential) -> float:
    N = phi.dimension
    if isinstance(rho, PointCharges):
        if not rho.at_origin():
            raise DomainError("radial pairing needs all point charges at the origin")
        return float(rho.total * phi.phi[0])
    if isinstance(rho, MollifiedPoints):
        rho = _radial_profile_of(rho)
        if rho is None:
            raise DomainError("radial pairing needs a centered mollified charge")
    if isinstance(rho, RadialProfile):
        if rho.dimension != N:
            raise DomainError("dimension mismatch between charge and potential")
        part = radial_partition(phi.r_grid, rho)
        part = np.unique(np.concatenate([part[part <= rho.support], [rho.support]]))
        f = lambda r: rho.density(r) * phi.phi_at(r) * r ** (N - 1)
        return float(sphere_area(N) * radial_integral(f, part))
    raise DomainError(f"{type(rho).__name__} cannot be paired with a radial potential")


def _pairing_grid(rho, phi: GridPotential) -> float:
    h = phi.spacing
    d = phi.dimension
    if isinstance(rho, PointCharges):
        if rho.dimension != d:
            raise DomainError("dimension mismatch")
        return float(np.dot(rho.intensities, phi.interpolate(rho.positions)))
    dens = grid_density_of(rho, phi.box, h)
    return float(np.sum(dens.values * phi.values) * h ** d)


def grid_density_of(rho, box: Box, h: float) -> GridDensity:
    """Nodal density of rho on the grid (box, h)."""
    if isinstance(rho, GridDensity):
        if rho.box != box or not np.isclose(rho.spacing, h):
            raise DomainError("grid density does not match the potential grid")
        return rho
    if isinstance(rho, ZeroCharge):
        return GridDensity(box, h, np.zeros(tuple(n + 1 for n in box.cells(h))))
    if isinstance(rho, RadialProfile):
        mesh = np.meshgrid(*box.axes(h), indexing="ij")
        r = np.sqrt(sum(m * m for m in mesh))
        return GridDensity(box, h, rho.density(r))
    if isinstance(rho, MollifiedPoints):
        from .mollify import mollify_charge
        return mollify_charge(rho.base, rho.width, rho.kernel, box=box, spacing=h)
    raise DomainError(f"{type(rho).__name__} has no bounded grid representation; mollify it first")


def radial_dirichlet_integral(model: LagrangianModel, phi: RadialPotential) -> float:
    """omega_N int V(phi'^2) r^(N-1) dr including the far tail beyond r_max."""
    N = phi.dimension
    part = radial_partition(phi.r_grid, _moment_profile(phi))
    k = origin_power(model, N, phi.saturated_origin)

    def f(r):
        u = phi.slope_at(r)
        return lagrangian_value(model, u * u) * r ** (N - 1)

    body = radial_integral(f, part, origin_k=k)
    c = phi.total_moment
    R = phi.r_max
    # V(u^2) = g^2/2 - 3 g^4/8 + ... for the slope of constant-moment flux g
    k4 = -0.375 if _g4_tail_coefficient(model) != 0.0 else 0.0
    tail = 0.5 * c * c * R ** -(N - 2) / (N - 2) + k4 * c ** 4 * R ** -(3 * N - 4) / (3 * N - 4)
    return float(sphere_area(N) * (body + tail))


def _moment_profile(phi: RadialPotential):
    m = phi.moment
    return getattr(m, "profile", None) if m is not None else None


def energy(model: LagrangianModel, rho: ChargeSpec, phi) -> float:
    """Integrand integral minus <rho, phi>."""
    if isinstance(phi, RadialPotential):
        if isinstance(model, Exact) and np.any(phi.gap[1:] < 0):
            raise DomainError("exact energy needs |phi'| <= 1")
        return radial_dirichlet_integral(model, phi) - pairing(rho, phi)
    if isinstance(phi, GridPotential):
        t = np.sum(phi.gradient ** 2, axis=0)
        if isinstance(model, Exact) and np.any(t > EXACT_GUARD):
            raise DomainError("exact energy needs |grad phi|^2 <= 1 - 1e-14 in every cell")
        vol = phi.spacing ** phi.dimension
        return float(vol * np.sum(lagrangian_value(model, t)) - pairing(rho, phi))
    raise TypeError(f"unsupported potential type {type(phi).__name__}")
