import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from bilab.core import (
    DomainError, Exact, PointCharges, RadialProfile, Series, Truncated, ZeroCharge, pairing,
)
from bilab.radial import (
    RadialDiscreteEnergy, TestProfile, charge_scale, cumulative_moment, default_grid,
    first_integral_residual, nehari_integral, regularity_report, solve_radial,
    weak_residual_radial,
)

mpmath.mp.dps = 30

# 30-digit adaptive quadrature values, frozen
BION_PHI_1 = 0.927037338650685959
BION_PHI_0 = 1.85407467730137192
BALL_PHI_2 = 0.166551259488367132
BION_NEHARI = 23.2989895416674264


def bion_oracle(r):
    return float(mpmath.quad(lambda s: 1 / mpmath.sqrt(1 + s ** 4), [r, mpmath.inf]))


class TestBion:
    def test_frozen_values(self, bion):
        assert bion.phi_at(1.0) == pytest.approx(BION_PHI_1, abs=1e-10)
        assert bion.phi[0] == pytest.approx(BION_PHI_0, abs=1e-10)
        assert bion.phi_at(0.0) == pytest.approx(BION_PHI_0, abs=1e-10)

    @pytest.mark.parametrize("r", [0.01, 0.3, 2.0, 17.0])
    def test_live_quadrature(self, bion, r):
        assert bion.phi_at(r) == pytest.approx(bion_oracle(r), abs=1e-9)

    def test_slopes(self, bion):
        assert bion.slope_at(1.0) == pytest.approx(-1 / np.sqrt(2), rel=1e-13)
        assert bion.slope_at(np.sqrt(3.0)) == pytest.approx(-1 / np.sqrt(10), rel=1e-13)
        assert bion.dphi[0] == -1.0 and bion.saturated_origin

    def test_far_field_is_coulomb(self, bion):
        r = 1e4
        assert bion.phi_at(r) == pytest.approx(1 / r, rel=1e-8)
        assert bion.total_moment == pytest.approx(1.0, rel=1e-15)

    def test_first_integral(self, bion):
        assert np.max(np.abs(first_integral_residual(bion))) < 1e-12

    def test_nehari(self, bion, bion_charge):
        assert nehari_integral(bion) == pytest.approx(BION_NEHARI, rel=1e-8)
        assert nehari_integral(bion) == pytest.approx(pairing(bion_charge, bion), rel=1e-8)

    def test_regularity(self, bion, bion_charge):
        rep = regularity_report(bion, bion_charge)
        assert rep.origin_class == "light-cone singular"
        assert rep.sigma == 0.0 and not rep.predicted_c1
        # only the innermost bands reach within 1e-3 of the light cone
        assert all(ok for lo, hi, sup, ok in rep.bands if lo > 0.25)

    def test_weak_residual(self, bion, bion_charge):
        tests = [TestProfile.bump(c, w) for c, w in [(0.5, 0.4), (2.0, 1.5), (0.0, 1.0)]]
        assert weak_residual_radial(bion, bion_charge, tests) < 1e-10

    def test_scaling(self):
        # phi_a(r) = a^(1/2) phi_1(r a^(-1/2)) for a = intensity / omega_3
        phi = solve_radial(PointCharges([[0, 0, 0]], [4 * np.pi * 9]))
        assert phi.phi_at(3.0) == pytest.approx(3 * BION_PHI_1, abs=1e-9)


class TestBall:
    def test_frozen(self, unit_ball):
        phi = solve_radial(unit_ball)
        assert phi.phi_at(2.0) == pytest.approx(BALL_PHI_2, abs=1e-11)

    def test_outside_profile(self, unit_ball):
        phi = solve_radial(unit_ball)
        m = 1 / 3
        oracle = float(mpmath.quad(lambda s: m / mpmath.sqrt(m * m + s ** 4), [1.5, mpmath.inf]))
        assert phi.phi_at(1.5) == pytest.approx(oracle, abs=1e-11)

    def test_inside_slope(self, unit_ball):
        phi = solve_radial(unit_ball)
        r = 0.5
        m = r ** 3 / 3
        assert phi.slope_at(r) == pytest.approx(-m / np.sqrt(m * m + r ** 4), rel=1e-12)

    def test_regularity(self, unit_ball):
        phi = solve_radial(unit_ball)
        rep = regularity_report(phi, unit_ball)
        assert rep.origin_class == "C1" and rep.predicted_c1 and np.isinf(rep.sigma)
        assert all(ok for *_, ok in rep.bands)

    def test_nehari_equals_pairing(self, unit_ball):
        phi = solve_radial(unit_ball)
        assert nehari_integral(phi) == pytest.approx(pairing(unit_ball, phi), rel=1e-10)

    def test_weak_residual(self, unit_ball):
        phi = solve_radial(unit_ball)
        tests = [TestProfile.tent(R) for R in (0.5, 1.0, 3.0)] + [TestProfile.bump(0.9, 0.3)]
        assert weak_residual_radial(phi, unit_ball, tests) < 1e-10


class TestGeneral:
    def test_zero_charge(self):
        phi = solve_radial(ZeroCharge(), default_grid())
        assert np.all(phi.phi == 0.0) and np.all(phi.dphi == 0.0)

    def test_negative_charge_is_mirror(self, bion):
        neg = solve_radial(PointCharges([[0, 0, 0]], [-4 * np.pi]))
        assert np.array_equal(neg.phi, -bion.phi)

    def test_superposition_of_components(self, unit_ball):
        mixed = [unit_ball, PointCharges([[0, 0, 0]], [2.0])]
        phi = solve_radial(mixed)
        assert np.max(np.abs(first_integral_residual(phi))) < 1e-12
        assert cumulative_moment(mixed).m_infinity == pytest.approx(1 / 3 + 2 / (4 * np.pi))

    def test_dimension_four(self):
        rho = PointCharges([[0, 0, 0, 0]], [2 * np.pi ** 2])
        phi = solve_radial(rho)
        r = 1.3
        oracle = float(mpmath.quad(lambda s: 1 / mpmath.sqrt(1 + s ** 6), [r, mpmath.inf]))
        assert phi.phi_at(r) == pytest.approx(oracle, abs=1e-9)

    def test_off_origin_rejected(self):
        with pytest.raises(DomainError):
            solve_radial(PointCharges([[1.0, 0, 0]], [1.0]))

    def test_grid_must_cover_support(self, unit_ball):
        with pytest.raises(DomainError):
            solve_radial(unit_ball, np.linspace(0, 0.5, 10))
        with pytest.raises(DomainError):
            solve_radial(unit_ball, np.array([0.0, 2.0, 1.0]))

    def test_charge_scale(self, bion_charge, unit_ball):
        assert charge_scale(bion_charge) == pytest.approx(1.0)
        assert charge_scale(unit_ball) == 1.0

    @given(st.floats(0.05, 20.0), st.floats(0.2, 3.0))
    def test_random_ball_first_integral(self, height, radius):
        g = np.linspace(radius / 50, radius, 50)
        rho = RadialProfile(g, height * (1 - g / (2 * radius)))
        phi = solve_radial(rho)
        assert np.max(np.abs(first_integral_residual(phi))) < 1e-12
        assert np.all(np.abs(phi.dphi) < 1)

    @pytest.mark.parametrize("model", [Series(3), Truncated(0.3)], ids=["series", "truncated"])
    def test_models_first_integral(self, unit_ball, model):
        from bilab.core import flux_coefficient
        phi = solve_radial(unit_ball, None, model)
        r = phi.r_grid[1:]
        u = phi.dphi[1:]
        lhs = flux_coefficient(model, u * u) * u * r ** 2
        assert np.max(np.abs(lhs + phi.moment(r))) < 1e-12


def test_discrete_energy_gradient():
    rng = np.random.default_rng(3)
    r = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 2.0, 30)), [2.5]])
    rho = RadialProfile(r[1:], rng.uniform(0.0, 2.0, len(r) - 1))
    de = RadialDiscreteEnergy(rho, r)
    for model in (Series(4), Truncated(0.2, 3), Exact()):
        a, k = rng.uniform(0.1, 0.3), rng.uniform(1.0, 4.0)
        phi = a * (2.5 - r) + 0.05 * np.sin(k * r) - 0.05 * np.sin(k * 2.5)
        g = de.gradient(model, phi)
        for i in rng.choice(len(r) - 1, 5, replace=False):
            e = np.zeros_like(phi)
            e[i] = 1e-6
            fd = (de.energy(model, phi + e) - de.energy(model, phi - e)) / 2e-6
            assert fd == pytest.approx(g[i], rel=1e-5, abs=1e-9)
