"""Finite-difference minimisation of the Born-Infeld energy on a box with zero boundary values.

Gradients live on cells (forward differences), the divergence is the
exact adjoint, so the discrete energy

    E(v) = h^N sum_cells L(|D v|^2) - h^N sum_nodes rho v

is differentiated exactly by :meth:`GridProblem.gradient` and
:meth:`GridProblem.hessian`.  The exact integrand is reached through a
continuation in the truncation parameter theta_k = 2^-k.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    Box, DomainError, Exact, GridDensity, GridPotential, PointCharges, SolveReport,
    SolverError, Truncated, flux_coefficient, flux_coefficient_slope, forward_gradient,
    grid_density_of, lagrangian_value, multilinear,
)

log = logging.getLogger(__name__)

EPS_REPORT = 1e-3


@dataclass
class GridConfig:
    """Continuation and Newton settings for :func:`solve_grid`."""

    power: int = 2
    levels: int = 20
    tol_kkt: float = 1e-8
    tol_active: float = 1e-9
    tol_energy: float = 1e-12
    max_newton: int = 60
    direct_limit: int = 6000
    linear_rtol: float = 1e-10
    skip_levels: bool = True


class GridProblem:
    """Discrete energy, gradient and Hessian over the interior nodes of a box grid."""

    def __init__(self, rho, box: Box, spacing: float):
        if isinstance(rho, PointCharges):
            raise DomainError("raw point charges have no grid representation; mollify them first")
        dens = grid_density_of(rho, box, spacing)
        self.box = box
        self.h = float(spacing)
        self.d = box.dimension
        self.cells = box.cells(spacing)
        if min(self.cells) < 2:
            raise DomainError("need at least two cells per axis")
        self.shape = tuple(n + 1 for n in self.cells)
        self.inner = tuple(slice(1, n) for n in self.cells)
        self.rho = dens.values[self.inner].ravel()
        self.vol = self.h ** self.d
        self._D = None

    @property
    def size(self) -> int:
        return int(np.prod([n - 1 for n in self.cells]))

    def full(self, x) -> np.ndarray:
        v = np.zeros(self.shape)
        v[self.inner] = np.reshape(x, tuple(n - 1 for n in self.cells))
        return v

    def cell_gradient(self, x) -> np.ndarray:
        return forward_gradient(self.full(x), self.h)

    def adjoint(self, F) -> np.ndarray:
        """D^T F on interior nodes: sum_k (F_k(c - e_k) - F_k(c)) / h."""
        out = np.zeros(self.shape)
        for k in range(self.d):
            lo = [slice(0, n) for n in self.cells]
            hi = list(lo)
            hi[k] = slice(1, self.cells[k] + 1)
            out[tuple(hi)] += F[k] / self.h
            out[tuple(lo)] -= F[k] / self.h
        return out[self.inner].ravel()

    def energy(self, model, x) -> float:
        g = self.cell_gradient(x)
        t = np.sum(g * g, axis=0)
        return float(self.vol * (np.sum(lagrangian_value(model, t)) - np.dot(self.rho, x)))

    def gradient(self, model, x) -> np.ndarray:
        g = self.cell_gradient(x)
        a = flux_coefficient(model, np.sum(g * g, axis=0))
        return self.vol * (self.adjoint(a * g) - self.rho)

    def _operators(self):
        if self._D is None:
            blocks = []
            for k in range(self.d):
                mats = []
                for j, n in enumerate(self.cells):
                    emb = sp.eye(n + 1, n - 1, k=-1, format="csr")
                    if j == k:
                        diff = (sp.eye(n, n + 1, k=1) - sp.eye(n, n + 1)) / self.h
                        mats.append(diff @ emb)
                    else:
                        mats.append(sp.eye(n, n + 1) @ emb)
                op = mats[0]
                for m in mats[1:]:
                    op = sp.kron(op, m, format="csr")
                blocks.append(op)
            self._D = sp.vstack(blocks, format="csr")
        return self._D

    def hessian(self, model, x) -> sp.csr_matrix:
        """h^N D^T (a I + 2 a' g g^T) D, assembled cellwise."""
        g = self.cell_gradient(x).reshape(self.d, -1)
        t = np.sum(g * g, axis=0)
        a = flux_coefficient(model, t)
        da = flux_coefficient_slope(model, t)
        rows = []
        for k in range(self.d):
            row = []
            for l in range(self.d):
                w = 2.0 * da * g[k] * g[l] + (a if k == l else 0.0)
                row.append(sp.diags(w))
            rows.append(row)
        W = sp.bmat(rows, format="csr")
        D = self._operators()
        return (self.vol * (D.T @ W @ D)).tocsr()

    def to_potential(self, x, model=Exact()) -> GridPotential:
        return GridPotential(self.box, self.h, self.full(x), model)


def _linear_solve(H, b, config: GridConfig):
    if H.shape[0] <= config.direct_limit:
        return spla.spsolve(H.tocsc(), b)
    import pyamg
    ml = pyamg.smoothed_aggregation_solver(H, symmetry="symmetric")
    M = ml.aspreconditioner(cycle="V")
    x, info = spla.cg(H, b, rtol=config.linear_rtol, atol=0.0, maxiter=500, M=M)
    if info != 0:
        log.debug("cg stopped with info %s", info)
    return x


def newton_minimize(problem: GridProblem, model, x0, config: GridConfig = GridConfig()):
    """Damped Newton with Armijo backtracking; returns (x, steps, kkt)."""
    x = np.array(x0, dtype=float)
    kkt = np.inf
    for step in range(config.max_newton + 1):
        gr = problem.gradient(model, x)
        kkt = float(np.max(np.abs(gr))) / problem.vol if gr.size else 0.0
        if kkt <= config.tol_kkt:
            return x, step, kkt
        if step == config.max_newton:
            break
        p = _linear_solve(problem.hessian(model, x), -gr, config)
        e0 = problem.energy(model, x)
        slope = float(np.dot(gr, p))
        if not slope < 0:
            p = -gr
            slope = -float(np.dot(gr, gr))
        t = 1.0
        while True:
            e1 = problem.energy(model, x + t * p)
            if e1 <= e0 + 1e-4 * t * slope:
                break
            if t == 1.0 and abs(e1 - e0) <= 64 * np.finfo(float).eps * max(1.0, abs(e0)):
                break  # energy flat to rounding: accept the full Newton step
            t *= 0.5
            if t < 1e-14:
                raise SolverError("line search failed", last=problem.to_potential(x, model),
                                  history=[kkt])
        x = x + t * p
    raise SolverError(f"Newton did not reach tol_kkt (last {kkt:.3e})",
                      last=problem.to_potential(x, model), history=[kkt])


def solve_grid(rho, box: Box = None, spacing: float = None, model=Exact(),
               config: GridConfig = None, initial=None):
    """Discrete minimiser of the box energy with zero boundary values.

    Exact model: minimise the Truncated(theta_k, power) energies for
    theta_k = 2^-k, warm-starting each level, until an iterate has every
    cell in the untouched region |grad|^2 <= 1 - theta_k and
    |grad| <= 1 - tol_active; there the truncated and exact discrete
    energies coincide, so the iterate is the exact minimiser.  Series and
    Truncated models are minimised directly.  Returns (GridPotential,
    SolveReport).
    """
    config = config or GridConfig()
    if isinstance(rho, GridDensity):
        box = box or rho.box
        spacing = spacing or rho.spacing
    if box is None or spacing is None:
        raise DomainError("solve_grid needs a box and a spacing")
    problem = GridProblem(rho, box, spacing)
    x = np.zeros(problem.size) if initial is None else initial.values[problem.inner].ravel()
    history = []
    total = 0
    if not isinstance(model, Exact):
        x, steps, kkt = newton_minimize(problem, model, x, config)
        phi = problem.to_potential(x, model)
        e = problem.energy(model, x)
        history.append((None, e, steps, kkt))
        return phi, _report(problem, phi, rho, e, steps, history, model)
    k = 1
    while k <= config.levels:
        theta = 2.0 ** -k
        trunc = Truncated(theta, config.power)
        x, steps, kkt = newton_minimize(problem, trunc, x, config)
        total += steps
        g = problem.cell_gradient(x)
        tmax = float(np.max(np.sum(g * g, axis=0)))
        e_trunc = problem.energy(trunc, x)
        history.append((theta, e_trunc, steps, kkt))
        log.info("theta=%.3e  E=%.12g  newton=%d  max|grad|^2=%.12f", theta, e_trunc, steps, tmax)
        if tmax <= 1.0 - theta and np.sqrt(tmax) <= 1.0 - config.tol_active:
            e_exact = problem.energy(Exact(), x)
            if abs(e_exact - e_trunc) <= config.tol_energy * max(1.0, abs(e_exact)):
                phi = problem.to_potential(x, Exact())
                return phi, _report(problem, phi, rho, e_exact, total, history, Exact())
        nxt = k + 1
        if config.skip_levels and tmax < 1.0:
            # the truncated minimiser overshoots, so 1 - theta >= tmax is a safe next target
            nxt = max(nxt, min(int(np.ceil(-np.log2(1.0 - tmax))), k + 2))
        k = nxt
    raise SolverError("continuation exhausted before the iterate became strictly spacelike",
                      last=problem.to_potential(x, Truncated(2.0 ** -config.levels, config.power)),
                      history=history)


def _report(problem, phi, rho, e, steps, history, model):
    res = el_residual_grid(phi, rho, model=model)
    notes = "; ".join(f"theta={h[0]:.3g}:newton={h[2]}" if h[0] else f"newton={h[2]}"
                      for h in history)
    return SolveReport(e, res, float(np.max(phi.grad_norm())), steps,
                       int(np.prod(problem.cells)), notes, history)


def el_residual_grid(phi: GridPotential, rho, eps_report: float = EPS_REPORT, model=Exact()) -> float:
    """sup |D^T(a(|grad|^2) grad) - rho| over interior nodes whose adjacent cells have |grad| <= 1 - eps."""
    problem = GridProblem(rho, phi.box, phi.spacing)
    g = phi.gradient
    t = np.sum(g * g, axis=0)
    safe = np.sqrt(t) <= 1.0 - eps_report
    tt = np.where(safe, t, 0.0) if isinstance(model, Exact) else t
    a = flux_coefficient(model, tt)
    res = np.abs(problem.adjoint(a * g) - problem.rho).reshape(tuple(n - 1 for n in problem.cells))
    ok = np.ones(problem.shape, dtype=bool)
    bad = ~safe
    # a node touches cells c with c_j in {i_j - 1, i_j}
    for shift in range(2 ** problem.d):
        sl = tuple(slice(1 - ((shift >> j) & 1), problem.cells[j] + 1 - ((shift >> j) & 1))
                   for j in range(problem.d))
        part = np.zeros(problem.shape, dtype=bool)
        part[sl] = bad
        ok &= ~part
    ok = ok[problem.inner]
    return float(np.max(res[ok])) if np.any(ok) else 0.0


def variational_gap(phi: GridPotential, rho, psi_values) -> float:
    """Left minus right side of the variational inequality for a test field psi (<= 0 up to KKT error).

    sum a|g|^2 - sum a g . grad psi  -  <rho, phi - psi>, all with cell weight h^N.
    """
    problem = GridProblem(rho, phi.box, phi.spacing)
    g = phi.gradient
    t = np.sum(g * g, axis=0)
    a = flux_coefficient(Exact(), t)
    gp = forward_gradient(np.asarray(psi_values, dtype=float), phi.spacing)
    lhs = problem.vol * np.sum(a * (t - np.sum(g * gp, axis=0)))
    dens = grid_density_of(rho, phi.box, phi.spacing)
    rhs = problem.vol * np.sum(dens.values * (phi.values - psi_values))
    return float(lhs - rhs)


# ----------------------------------------------------------------------
# Diagnostics for point-charge configurations


@dataclass
class GammaReport:
    segments: list = field(default_factory=list)  # (i, j, samples of |grad phi|)
    near_lightlike: list = field(default_factory=list)
    affinity_defect: list = field(default_factory=list)
    eps_report: float = EPS_REPORT

    @property
    def any_flag(self) -> bool:
        return any(self.near_lightlike)


def _cell_gradient_at(phi: GridPotential, pts):
    lo = np.array(phi.box.lower)
    idx = np.floor((pts - lo) / phi.spacing).astype(int)
    idx = np.clip(idx, 0, np.array(phi.box.cells(phi.spacing)) - 1)
    gn = phi.grad_norm()
    return gn[tuple(idx.T)]


def gamma_diagnostics(phi: GridPotential, points: PointCharges, samples: int = 200,
                      exclude_radius: float = 0.0, eps_report: float = EPS_REPORT) -> GammaReport:
    """|grad phi| and chord affinity defect along every segment x_i x_j.

    Samples are taken on the open segment, skipping exclude_radius around
    each endpoint (typically the mollification width).  The gradient at a
    point is that of its cell, clipped to [0, 1].
    """
    rep = GammaReport(eps_report=eps_report)
    P = points.positions
    for p in P:
        if not phi.box.contains(p):
            raise DomainError(f"charge at {p} lies outside the box")
    k = len(P)
    for i in range(k):
        for j in range(i + 1, k):
            a, b = P[i], P[j]
            L = float(np.linalg.norm(b - a))
            s0 = min(exclude_radius / L, 0.5)
            s = np.linspace(s0, 1.0 - s0, samples + 2)[1:-1]
            pts = a[None, :] + s[:, None] * (b - a)[None, :]
            grad = np.clip(_cell_gradient_at(phi, pts), 0.0, 1.0)
            vals = phi.interpolate(pts)
            ends = phi.interpolate(np.stack([a, b]))
            chord = ends[0] + s * (ends[1] - ends[0])
            rep.segments.append((i, j, grad))
            rep.near_lightlike.append(bool(np.max(grad) > 1.0 - eps_report))
            rep.affinity_defect.append(float(np.max(np.abs(vals - chord))))
    return rep


def trudinger_probe(phi: GridPotential, points: PointCharges, radii) -> list:
    """Value of the field-weighted integral near the charges on balls of shrinking radius.

    With F = sum_i b_i (x - x_i)/|x - x_i|^N, b_i = a_i / ((N - 2) omega_N),
    returns [(r, int_{U_r} F.F sqrt(1 - |grad phi|^2) dx)] with U_r the
    union of the balls B(x_i, r), cells at a charge excluded.  Reported
    only; finiteness of the limit is not asserted.
    """
    from .core import sphere_area
    N = phi.dimension
    h = phi.spacing
    b = points.intensities / ((N - 2) * sphere_area(N))
    centers = np.meshgrid(*[ax[:-1] + h / 2 for ax in phi.box.axes(h)], indexing="ij")
    X = np.stack([c.ravel() for c in centers], axis=1)
    F = np.zeros_like(X)
    dist = np.full(len(X), np.inf)
    for bi, xi in zip(b, points.positions):
        dx = X - xi
        r = np.linalg.norm(dx, axis=1)
        dist = np.minimum(dist, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            F += bi * dx / np.where(r > 0, r, np.inf)[:, None] ** N
    w = np.sqrt(np.clip(1.0 - phi.grad_norm().ravel() ** 2, 0.0, 1.0))
    dens = np.sum(F * F, axis=1) * w * h ** N
    out = []
    for r in radii:
        sel = (dist <= r) & (dist > 0.5 * h)
        out.append((float(r), float(np.sum(dens[sel]))))
    return out


def box_size_diagnostic(rho, box: Box, spacing: float, config: GridConfig = None):
    """sup |phi_box - phi_2box| over the nodes of the smaller box (same spacing)."""
    phi, _ = solve_grid(rho, box, spacing, config=config)
    big = Box(tuple(2 * l for l in box.lower), tuple(2 * u for u in box.upper))
    rho_big = _regrid(rho, big, spacing)
    phi2, _ = solve_grid(rho_big, big, spacing, config=config)
    mesh = np.meshgrid(*box.axes(spacing), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    other = multilinear(phi2.values, big, spacing, pts).reshape(phi.values.shape)
    return float(np.max(np.abs(phi.values - other)))


def _regrid(rho, big: Box, h):
    if isinstance(rho, GridDensity):
        out = np.zeros(tuple(n + 1 for n in big.cells(h)))
        off = [int(round((l - L) / h)) for l, L in zip(rho.box.lower, big.lower)]
        sl = tuple(slice(o, o + s) for o, s in zip(off, rho.values.shape))
        out[sl] = rho.values
        return GridDensity(big, h, out)
    return rho


__all__ = ["GridConfig", "GridProblem", "newton_minimize", "solve_grid", "el_residual_grid",
           "variational_gap", "GammaReport", "gamma_diagnostics", "trudinger_probe",
           "box_size_diagnostic"]
