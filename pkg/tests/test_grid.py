import numpy as np
import pytest

from bilab.core import (
    Box, DomainError, Exact, GridDensity, PointCharges, Series, Truncated, ZeroCharge, energy,
)
from bilab.grid import (
    GridConfig, GridProblem, box_size_diagnostic, el_residual_grid, gamma_diagnostics,
    solve_grid, trudinger_probe, variational_gap,
)
from bilab.mollify import mollify_charge

BOX = Box.cube(2.0)
H = 0.25


@pytest.fixture(scope="module")
def blob():
    return mollify_charge(PointCharges([[0.0, 0.0, 0.0]], [3.0]), 0.6, box=BOX, spacing=H)


@pytest.fixture(scope="module")
def blob_solution(blob):
    return solve_grid(blob)


def test_zero_charge():
    phi, rep = solve_grid(GridDensity(BOX, H, np.zeros((17, 17, 17))))
    assert np.all(phi.values == 0.0) and rep.energy == 0.0


def test_point_charges_rejected():
    with pytest.raises(DomainError):
        GridProblem(PointCharges([[0.0, 0.0, 0.0]], [1.0]), BOX, H)
    with pytest.raises(DomainError):
        solve_grid(ZeroCharge())


@pytest.mark.parametrize("model", [Series(3), Truncated(0.25, 2), Exact()], ids=str)
def test_gradient_and_hessian(blob, model):
    rng = np.random.default_rng(7)
    p = GridProblem(blob, BOX, H)
    x = 0.02 * rng.standard_normal(p.size)
    g = p.gradient(model, x)
    Hm = p.hessian(model, x)
    d = rng.standard_normal(p.size)
    fd = (p.energy(model, x + 1e-6 * d) - p.energy(model, x - 1e-6 * d)) / 2e-6
    assert fd == pytest.approx(g @ d, rel=1e-6)
    fdh = (p.gradient(model, x + 1e-6 * d) - p.gradient(model, x - 1e-6 * d)) / 2e-6
    assert np.allclose(fdh, Hm @ d, rtol=1e-5, atol=1e-9 * np.max(np.abs(fdh)))


def test_solution_properties(blob, blob_solution):
    phi, rep = blob_solution
    v = phi.values
    assert rep.energy < 0 and rep.max_grad < 1
    # axis permutations are exact symmetries of the forward-difference scheme
    assert np.allclose(v, v.transpose(2, 1, 0), atol=1e-12)
    assert np.allclose(v, v.transpose(1, 0, 2), atol=1e-12)
    # reflections are not, they hold to the discretisation error only
    assert np.max(np.abs(v - v[::-1])) < 0.1 * np.max(v)
    assert np.all(v >= -1e-14) and rep.el_residual_sup < 1e-7
    assert energy(Exact(), blob, phi) == pytest.approx(rep.energy, rel=1e-12)


def test_odd_symmetry():
    pts = PointCharges([[-0.75, 0, 0], [0.75, 0.25, 0]], [1.5, -0.5])
    rho = mollify_charge(pts, 0.5, box=BOX, spacing=H)
    phi, _ = solve_grid(rho)
    neg, _ = solve_grid(GridDensity(BOX, H, -rho.values))
    assert np.allclose(neg.values, -phi.values, atol=1e-10)


def test_variational_gap(blob, blob_solution):
    phi, _ = blob_solution
    rng = np.random.default_rng(1)
    for _ in range(5):
        psi = phi.values + 0.05 * rng.standard_normal(phi.values.shape)
        psi[[0, -1], :, :] = psi[:, [0, -1], :] = psi[:, :, [0, -1]] = 0.0
        psi /= max(1.0, np.max(np.linalg.norm(np.diff(psi, axis=0), axis=None)))
        assert variational_gap(phi, blob, psi) <= 1e-8


def test_energy_beats_perturbations(blob, blob_solution):
    phi, rep = blob_solution
    p = GridProblem(blob, BOX, H)
    x = phi.values[p.inner].ravel()
    rng = np.random.default_rng(2)
    for _ in range(5):
        y = x + 1e-3 * rng.standard_normal(x.size)
        assert p.energy(Exact(), y) > rep.energy


def test_comparison(blob, blob_solution):
    bigger = GridDensity(BOX, H, blob.values * 1.5 + 0.05)
    lo, _ = blob_solution
    hi, _ = solve_grid(bigger)
    assert np.all(lo.values <= hi.values + 1e-10)


def test_el_residual_series(blob):
    phi, rep = solve_grid(blob, model=Series(4))
    assert el_residual_grid(phi, blob, model=Series(4)) < 1e-7


def test_continuation_history(blob_solution):
    _, rep = blob_solution
    thetas = [h[0] for h in rep.history]
    assert all(b < a for a, b in zip(thetas, thetas[1:]))


def test_solver_error_when_levels_exhausted():
    from bilab.core import SolverError
    strong = mollify_charge(PointCharges([[0.0, 0.0, 0.0]], [30.0]), 0.5, box=BOX, spacing=H)
    with pytest.raises(SolverError) as info:
        solve_grid(strong, config=GridConfig(levels=1))
    assert info.value.history


def test_gamma_small_charges():
    pts = PointCharges([[-0.5, 0, 0], [0.5, 0, 0]], [0.3, 0.3])
    rho = mollify_charge(pts, 0.5, box=BOX, spacing=H)
    phi, _ = solve_grid(rho)
    rep = gamma_diagnostics(phi, pts, exclude_radius=0.5)
    assert not rep.any_flag and len(rep.segments) == 1
    assert rep.affinity_defect[0] >= 0


def test_trudinger_probe_reports(blob_solution):
    phi, _ = blob_solution
    out = trudinger_probe(phi, PointCharges([[0.0, 0.0, 0.0]], [3.0]), [1.0, 0.5])
    assert out[0][1] >= out[1][1] >= 0


def test_box_size_diagnostic():
    rho = mollify_charge(PointCharges([[0.0, 0.0, 0.0]], [1.0]), 0.5, box=Box.cube(1.0), spacing=H)
    d = box_size_diagnostic(rho, Box.cube(1.0), H)
    assert d > 0
