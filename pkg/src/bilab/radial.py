"""Radial solver built on the first integral phi'(R) R^(N-1) / sqrt(1 - phi'^2) = -m(R).

The cumulative moment m is known in closed form for piecewise-linear
profiles plus an origin point charge, so the slope at any radius is pure
algebra and the potential is a single outward quadrature plus a closed
tail beyond the last node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DomainError, Exact, MollifiedPoints, PointCharges, RadialPotential, RadialProfile,
    ZeroCharge, GL_ORDER, _frozen, _gl_nodes, _g4_tail_coefficient, origin_power,
    radial_integral, radial_partition, sphere_area,
)
from .scalar import invert_flux

EPS_REPORT = 1e-3


@dataclass(frozen=True, eq=False)
class CumulativeMoment:
    """m(R) = a0/omega_N [R > 0] + int_0^R rho(r) r^(N-1) dr on a grid; callable off-grid."""

    dimension: int
    r_grid: np.ndarray
    m: np.ndarray
    m_infinity: float
    origin_charge: float = 0.0
    profile: RadialProfile = None
    scale: float = field(default=1.0, repr=False)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        N = self.dimension
        out = np.where(r > 0, self.origin_charge / sphere_area(N), 0.0)
        if self.profile is not None:
            out = out + self.profile.moment(r)
        return out

    @property
    def support(self) -> float:
        return self.profile.support if self.profile is not None else 0.0


def _split_charge(rho):
    """(origin intensity, profile or None, dimension) of a radial charge."""
    if isinstance(rho, ZeroCharge):
        return 0.0, None, rho.dimension
    if isinstance(rho, RadialProfile):
        return 0.0, rho, rho.dimension
    if isinstance(rho, PointCharges):
        if not rho.at_origin():
            raise DomainError("off-origin point charge: use the grid solver instead")
        return rho.total, None, rho.dimension
    if isinstance(rho, MollifiedPoints):
        from .mollify import mollify_charge
        prof = mollify_charge(rho.base, rho.width, rho.kernel)
        return 0.0, prof, prof.dimension
    if isinstance(rho, (list, tuple)):
        a0, prof, dim = 0.0, None, None
        for part in rho:
            a, p, d = _split_charge(part)
            if dim is not None and d != dim:
                raise DomainError("dimension mismatch between charge components")
            dim = d
            a0 += a
            if p is not None:
                if prof is not None:
                    prof = _sum_profiles(prof, p)
                else:
                    prof = p
        return a0, prof, dim
    raise DomainError(f"{type(rho).__name__} is not a radial charge")


def _sum_profiles(p, q):
    g = np.union1d(p.grid, q.grid)
    return RadialProfile(g, p.density(g) + q.density(g), p.dimension)


def charge_scale(rho) -> float:
    """Length scale L of a radial charge: the support radius, or the BIon radius for points."""
    a0, prof, N = _split_charge(rho)
    if prof is not None:
        return float(prof.support)
    if a0 != 0.0:
        return float((abs(a0) / sphere_area(N)) ** (1.0 / (N - 1)))
    return 1.0


def default_grid(scale: float = 1.0, nodes: int = 2048, r_min: float = 1e-6, r_max: float = 1e3):
    """0 followed by ``nodes`` geometric nodes from r_min*scale to r_max*scale."""
    return np.concatenate([[0.0], np.geomspace(r_min * scale, r_max * scale, nodes)])


def _prepare_grid(rho, r_grid):
    if r_grid is None:
        r_grid = default_grid(charge_scale(rho))
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or np.any(np.diff(r) <= 0) or r[0] < 0:
        raise DomainError("r_grid must be ascending and nonnegative")
    if r[0] > 0:
        r = np.concatenate([[0.0], r])
    return r


def cumulative_moment(rho, r_grid=None) -> CumulativeMoment:
    r = _prepare_grid(rho, r_grid)
    a0, prof, N = _split_charge(rho)
    if prof is not None and prof.support > r[-1]:
        raise DomainError("r_grid must cover the support of rho")
    m_inf = a0 / sphere_area(N) + (prof.total_moment if prof is not None else 0.0)
    mom = CumulativeMoment(N, _frozen(r), None, m_inf, a0, prof)
    object.__setattr__(mom, "m", _frozen(mom(r)))
    return mom


def slope_from_moment(mom: CumulativeMoment, model=Exact()):
    """phi' samples on mom.r_grid together with a light-cone saturation flag at r = 0.

    Exact model: phi'(R) = -m / sqrt(m^2 + R^(2N-2)).  At R = 0 with an
    origin charge the limit -sign(a) is returned and the flag is set.
    """
    r = mom.r_grid
    N = mom.dimension
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(mom.m == 0.0, 0.0, -mom.m / r ** (N - 1))
    u = invert_flux(model, g)
    saturated = bool(r[0] == 0.0 and mom.origin_charge != 0.0)
    if saturated:
        lim = 1.0 if isinstance(model, Exact) else np.inf
        u[0] = -np.sign(mom.origin_charge) * lim
    return u, saturated


def _exact_gap(g):
    # 1 - |g|/sqrt(1+g^2) without cancellation
    ag = np.abs(g)
    q = np.sqrt(1.0 + ag * ag)
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(ag), 0.0, 1.0 / (q * (q + ag)))


def solve_radial(rho, r_grid=None, model=Exact()) -> RadialPotential:
    """Radial minimiser for ``model``; phi(r) = -int_r^inf phi'(s) ds.

    Quadrature: Gauss-Legendre on every interval of the grid merged with
    the profile breakpoints, and the closed constant-moment tail
    c r^-(N-2)/(N-2) + k c^3 r^-(3N-4)/(3N-4) beyond the last node.
    """
    mom = cumulative_moment(rho, r_grid)
    r = mom.r_grid
    N = mom.dimension
    u_nodes, saturated = slope_from_moment(mom, model)

    def slope(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            m = mom(s)
            g = np.where(m == 0.0, 0.0, -m / s ** (N - 1))
        return invert_flux(model, g)

    part = radial_partition(r, mom.profile)
    # integrals over [p_i, p_{i+1}] for i >= 1, then accumulate outward-in
    pts, wts = _gl_nodes(part[1:-1], part[2:])
    seg = np.sum(wts * slope(pts), axis=1)
    c = mom.m_infinity
    k = _g4_tail_coefficient(model)
    R = part[-1]
    tail = c * R ** -(N - 2) / (N - 2) + k * c ** 3 * R ** -(3 * N - 4) / (3 * N - 4)
    phi_part = np.empty(len(part))
    phi_part[-1] = tail
    phi_part[1:-1] = tail - np.cumsum(seg[::-1])[::-1]
    # first interval [0, p1]
    korigin = origin_power(model, N, mom.origin_charge != 0.0)
    diverges = False
    if mom.origin_charge != 0.0 and not isinstance(model, Exact):
        n = model.order if hasattr(model, "order") else model.power
        diverges = (N - 1) >= (2 * n - 1)
    if diverges:
        phi_part[0] = np.sign(mom.origin_charge) * np.inf
    else:
        first = radial_integral(slope, part[:2], origin_k=korigin, order=GL_ORDER)
        phi_part[0] = phi_part[1] - first
    idx = np.searchsorted(part, r)
    phi = phi_part[idx]

    with np.errstate(divide="ignore", invalid="ignore"):
        g_nodes = np.where(mom.m == 0.0, 0.0, -mom.m / r ** (N - 1))
    if isinstance(model, Exact):
        gap = _exact_gap(g_nodes)
        if saturated:
            gap[0] = 0.0
    else:
        gap = 1.0 - np.abs(u_nodes)
    return RadialPotential(N, r, phi, u_nodes, c / (N - 2), c, gap, model, mom, saturated)


def first_integral_residual(phi: RadialPotential, mom: CumulativeMoment = None) -> np.ndarray:
    """phi' r^(N-1)/sqrt(1 - phi'^2) + m at every node r > 0 (exact model)."""
    mom = mom if mom is not None else phi.moment
    r = phi.r_grid
    N = phi.dimension
    u = phi.dphi
    gap = phi.gap
    pos = r > 0
    one_minus_u2 = gap * (2.0 - gap)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = u * r ** (N - 1) / np.sqrt(one_minus_u2)
    m = mom(r) if callable(mom) else np.asarray(mom)
    return np.where(pos, h + m, 0.0)


@dataclass
class RegularityReport:
    slope_at_origin: float
    origin_class: str
    bands: list
    sigma: float
    predicted_c1: bool


def regularity_report(phi: RadialPotential, rho, eps: float = EPS_REPORT, r0: float = None):
    """Origin behaviour of phi' and strict spacelikeness per dyadic band.

    bands: (lo, hi, sup |phi'|, sup <= 1 - eps) for [r0 2^j, r0 2^(j+1)].
    sigma: integrability exponent of rho near 0 (inf for bounded profiles,
    0 for an origin point charge, N/beta for profiles ~ r^-beta).
    """
    a0, prof, N = _split_charge(rho)
    r = phi.r_grid
    pos = r > 0
    r0 = r0 if r0 is not None else float(r[pos][0])
    gap = phi.gap
    k = int(np.argmax(pos))
    slope0 = float(phi.dphi[k])
    if phi.saturated_origin or (a0 != 0.0):
        origin_class = "light-cone singular"
    elif abs(slope0) < 1e-3:
        origin_class = "C1"
    else:
        origin_class = "undetermined"
    bands = []
    lo = r0
    while lo < phi.r_max:
        hi = min(2 * lo, phi.r_max)
        sel = (r >= lo) & (r <= hi)
        if np.any(sel):
            sup = float(np.max(np.abs(phi.dphi[sel])))
            mingap = float(np.min(gap[sel]))
            bands.append((lo, hi, sup, mingap >= eps))
        lo = hi
    if a0 != 0.0:
        sigma = 0.0
    elif prof is None:
        sigma = np.inf
    else:
        sigma = _profile_sigma(prof)
    predicted = sigma >= N and a0 == 0.0
    return RegularityReport(slope0, origin_class, bands, sigma, predicted)


def _profile_sigma(prof: RadialProfile) -> float:
    g, v = prof.grid, np.abs(prof.values)
    if len(g) < 3 or v[0] == 0 or v[0] <= v[min(2, len(v) - 1)]:
        return np.inf
    # local power law |rho| ~ r^-beta from the innermost nodes
    beta = -np.log(v[1] / v[0]) / np.log(g[1] / g[0])
    if beta <= 0:
        return np.inf
    return float(prof.dimension / beta)


@dataclass(frozen=True)
class TestProfile:
    """Radial test function psi with derivative, supported in [0, support]."""

    psi: object
    dpsi: object
    support: float
    __test__ = False

    @classmethod
    def tent(cls, R: float) -> "TestProfile":
        return cls(lambda r: np.where(r <= R, R - r, 0.0),
                   lambda r: np.where(r <= R, -1.0, 0.0), R)

    @classmethod
    def bump(cls, center: float, width: float, height: float = 1.0) -> "TestProfile":
        """exp(-1/(1 - x^2)) bump in x = (r - center)/width, flat-topped at r = 0 if needed."""
        def psi(r):
            x = (np.asarray(r, dtype=float) - center) / width
            inside = np.abs(x) < 1
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                val = np.exp(-1.0 / (1.0 - x * x))
            return np.where(inside, height * val, 0.0)

        def dpsi(r):
            x = (np.asarray(r, dtype=float) - center) / width
            inside = np.abs(x) < 1
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                q = 1.0 - x * x
                val = np.exp(-1.0 / q) * (-2.0 * x / (q * q)) / width
            return np.where(inside, height * val, 0.0)

        return cls(psi, dpsi, center + width)


def weak_residual_radial(phi: RadialPotential, rho, tests) -> float:
    """sup over tests of |int_0^inf h psi' dr - <rho, psi>/omega_N| with h = flux r^(N-1)."""
    a0, prof, N = _split_charge(rho)
    worst = 0.0
    for t in tests:
        if t.support > phi.r_max:
            raise DomainError("test support exceeds the grid")
        part = radial_partition(phi.r_grid, prof)
        brk = [t.support] + ([prof.support] if prof is not None else [])
        part = np.unique(np.concatenate([part[part <= t.support], brk]))
        part = part[part <= t.support]

        def lhs(r):
            _, g = phi.flux_density_at(r)
            return g * r ** (N - 1) * t.dpsi(r)

        left = radial_integral(lhs, part)
        right = a0 * float(t.psi(np.array(0.0))) / sphere_area(N)
        if prof is not None:
            right += radial_integral(lambda r: prof.density(r) * t.psi(r) * r ** (N - 1), part)
        worst = max(worst, abs(left - right))
    return worst


def nehari_integral(phi: RadialPotential) -> float:
    """omega_N int phi'^2 / sqrt(1 - phi'^2) r^(N-1) dr, tail included."""
    N = phi.dimension
    part = radial_partition(phi.r_grid, getattr(phi.moment, "profile", None))

    def f(r):
        u, g = phi.flux_density_at(r)
        return u * g * r ** (N - 1)

    body = radial_integral(f, part)
    c = phi.total_moment
    tail = c * c * phi.r_max ** -(N - 2) / (N - 2)
    return float(sphere_area(N) * (body + tail))


class RadialDiscreteEnergy:
    """Radial energy of a piecewise-linear potential on a fixed grid.

    E(phi) = omega_N [sum_i L(s_i^2) w_i - sum_j rho_j phi_j q_j], with
    s_i the slope on [r_i, r_(i+1)], w_i = int r^(N-1) over that interval
    and q_j trapezoid weights of r^(N-1).  Used for derivative checks.
    """

    def __init__(self, rho: RadialProfile, r_grid):
        r = np.asarray(r_grid, dtype=float)
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise DomainError("r_grid must start at 0 and ascend")
        N = rho.dimension
        self.r = r
        self.N = N
        self.dr = np.diff(r)
        self.w = (r[1:] ** N - r[:-1] ** N) / N
        f = r ** (N - 1)
        q = np.zeros_like(r)
        q[:-1] += 0.5 * self.dr * f[:-1]
        q[1:] += 0.5 * self.dr * f[1:]
        self.load = rho.density(r) * q
        self.omega = sphere_area(N)

    def energy(self, model, phi) -> float:
        from .core import lagrangian_value
        s = np.diff(phi) / self.dr
        return float(self.omega * (np.sum(lagrangian_value(model, s * s) * self.w)
                                   - np.dot(self.load, phi)))

    def gradient(self, model, phi) -> np.ndarray:
        from .core import flux_coefficient
        s = np.diff(phi) / self.dr
        flux = flux_coefficient(model, s * s) * s * self.w / self.dr
        g = -self.load.copy()
        g[:-1] -= flux
        g[1:] += flux
        return self.omega * g
