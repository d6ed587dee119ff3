import numpy as np
import pytest

from bilab.approx import (
    cascade_study, exact_energy, exceeds_light_cone, increment_lower_bound,
    solve_radial_series, solve_radial_truncated, truncated_energy,
)
from bilab.core import DomainError, PointCharges, Series, energy
from bilab.radial import solve_radial

EXACT_BALL_ENERGY = -0.8313367634714424


def test_coulomb():
    phi = solve_radial_series(PointCharges([[0, 0, 0]], [1.0]), 1)
    r = np.geomspace(1e-3, 1e2, 9)
    assert np.allclose(phi.phi_at(r), 1 / (4 * np.pi * r), rtol=1e-10, atol=0)
    assert phi.phi[0] == np.inf


def test_two_term_bion_node():
    phi = solve_radial_series(PointCharges([[0, 0, 0]], [4 * np.pi]), 2)
    assert phi.slope_at(1.0) == pytest.approx(-0.770916997059248, abs=1e-13)
    # N - 1 = 2 < 2n - 1 = 3: finite at the origin, past the light cone nearby
    assert np.isfinite(phi.phi[0])
    assert exceeds_light_cone(phi)


def test_exact_never_exceeds(bion):
    assert not exceeds_light_cone(bion)


@pytest.mark.parametrize("theta", [0.5, 0.1, 2.0 ** -6])
def test_truncated_agrees_inside_breakpoint(bion_charge, bion, theta):
    phi = solve_radial_truncated(bion_charge, theta, 2, bion.r_grid)
    inside = bion.dphi ** 2 <= 1 - theta
    inside[0] = False
    assert np.array_equal(phi.dphi[inside], bion.dphi[inside])


def test_truncated_energies_increase_to_exact(unit_ball):
    e_exact = exact_energy(unit_ball)
    assert e_exact == pytest.approx(EXACT_BALL_ENERGY, rel=1e-10)
    # ball slopes stay far from 1, so every truncation is already exact there
    vals = [truncated_energy(unit_ball, 2.0 ** -k) for k in range(1, 6)]
    assert all(v <= e_exact + 1e-14 for v in vals)
    assert vals[-1] == pytest.approx(e_exact, rel=1e-12)


def test_truncated_energies_bion(bion_charge, bion):
    vals = [truncated_energy(bion_charge, 2.0 ** -k, 2, bion.r_grid) for k in (1, 3, 5, 7)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] < energy_exact_bion(bion_charge, bion)


def energy_exact_bion(rho, phi):
    from bilab.core import Exact
    return energy(Exact(), rho, phi)


def test_series_energy_below_exact(unit_ball):
    e_exact = exact_energy(unit_ball)
    for n in (1, 3, 9):
        phi = solve_radial_series(unit_ball, n)
        assert energy(Series(n), unit_ball, phi) <= e_exact


def test_cascade_ball(unit_ball):
    rows = cascade_study(unit_ball, [1, 2, 4, 8])
    e = [row.energy for row in rows]
    assert np.all(np.diff(e) > 0)
    for prev, row in zip(rows, rows[1:]):
        assert 0 < row.increment_lower <= (row.energy - prev.energy) * (1 + 1e-6)
    assert rows[-1].sup_distance < rows[0].sup_distance
    assert np.isnan(rows[0].increment_lower)


def test_cascade_rejects_order():
    with pytest.raises(DomainError):
        cascade_study(PointCharges([[0, 0, 0]], [1.0]), [2, 1])


def test_increment_bound_rejects(bion):
    with pytest.raises(DomainError):
        increment_lower_bound(3, 3, bion)
