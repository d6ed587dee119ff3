import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from bilab.core import (
    Box, DomainError, Exact, GridDensity, GridPotential, MollifiedPoints, PointCharges,
    RadialPotential, RadialProfile, Series, Truncated, ZeroCharge, energy, flux_coefficient,
    flux_coefficient_slope, lagrangian_value, pairing, radial_dirichlet_integral,
    series_coefficients, sphere_area, truncation_match,
)
from bilab.radial import solve_radial


def test_sphere_area():
    assert sphere_area(3) == pytest.approx(4 * np.pi, rel=1e-15)
    assert sphere_area(4) == pytest.approx(2 * np.pi ** 2, rel=1e-15)
    assert sphere_area(5) == pytest.approx(8 * np.pi ** 2 / 3, rel=1e-15)


class TestLagrangian:
    def test_exact_endpoints(self):
        assert lagrangian_value(Exact(), 1.0) == 1.0
        assert lagrangian_value(Exact(), 0.0) == 0.0

    def test_series_two_terms(self):
        assert lagrangian_value(Series(2), 0.5) == pytest.approx(0.28125, abs=1e-16)

    def test_domain(self):
        with pytest.raises(DomainError):
            lagrangian_value(Exact(), 1.0 + 1e-12)
        with pytest.raises(DomainError):
            lagrangian_value(Series(3), -0.1)
        # truncated integrand extends past the light cone
        assert np.isfinite(lagrangian_value(Truncated(0.5), 4.0))

    @given(st.floats(0.0, 1.0))
    def test_simple_inequality(self, t):
        v = lagrangian_value(Exact(), t)
        assert t / 2 <= v <= t

    @given(st.floats(0.0, 0.999), st.integers(1, 30))
    def test_series_monotone_below_exact(self, t, n):
        a = lagrangian_value(Series(n), t)
        b = lagrangian_value(Series(n + 1), t)
        assert a <= b <= lagrangian_value(Exact(), t) * (1 + 1e-15)

    @given(st.floats(0.01, 0.99), st.integers(2, 5), st.floats(0.0, 1.0))
    def test_truncated_matches_exact_inside(self, theta, n, frac):
        m = Truncated(theta, n)
        t = frac * (1 - theta)
        assert lagrangian_value(m, t) == pytest.approx(lagrangian_value(Exact(), t), rel=1e-14, abs=1e-300)
        assert flux_coefficient(m, t) == pytest.approx((1 - t) ** -0.5, rel=1e-14)

    @given(st.floats(0.05, 0.95), st.integers(2, 5), st.floats(0.0, 3.0))
    def test_truncated_value_is_half_primitive(self, theta, n, t):
        # d/dt V = a/2 checked by central differences
        m = Truncated(theta, n)
        h = 1e-6
        t = max(t, 2 * h)
        fd = (lagrangian_value(m, t + h) - lagrangian_value(m, t - h)) / (2 * h)
        assert fd == pytest.approx(0.5 * flux_coefficient(m, t), rel=1e-6)

    def test_truncated_below_exact(self):
        t = np.linspace(0, 1, 501)
        for theta in (0.5, 0.1, 0.01):
            assert np.all(lagrangian_value(Truncated(theta), t) <= lagrangian_value(Exact(), t) + 1e-15)


class TestSeriesCoefficients:
    def test_small_orders(self):
        assert list(series_coefficients(1)) == [1.0]
        assert list(series_coefficients(2)) == [1.0, 0.5]
        assert list(series_coefficients(3)) == [1.0, 0.5, 0.375]

    def test_against_symbolic_taylor(self):
        s = sympy.symbols("s")
        expansion = sympy.series(1 - sympy.sqrt(1 - s), s, 0, 13).removeO()
        alpha = series_coefficients(12)
        for h in range(1, 13):
            c = expansion.coeff(s, h)
            assert alpha[h - 1] == pytest.approx(float(2 * h * c), rel=1e-15)

    def test_positive_and_no_overflow(self):
        a = series_coefficients(400)
        assert np.all(a > 0) and np.all(np.isfinite(a))

    @pytest.mark.parametrize("bad", [0, -1, 2.5])
    def test_rejects(self, bad):
        with pytest.raises(DomainError):
            series_coefficients(bad)


class TestTruncationMatch:
    def test_three_quarters(self):
        g, d = truncation_match(0.75, 2)
        assert g == pytest.approx(4 / (3 * np.sqrt(3)), rel=1e-14)
        assert d == pytest.approx(5 / (3 * np.sqrt(3)), rel=1e-14)
        m = Truncated(0.75, 2)
        s0 = 0.25
        assert flux_coefficient(m, s0 + 1e-300) == pytest.approx((1 - s0) ** -0.5, rel=1e-12)
        assert g * s0 + d == pytest.approx((1 - s0) ** -0.5, rel=1e-12)
        assert g == pytest.approx(0.5 * (1 - s0) ** -1.5, rel=1e-12)

    def test_half(self):
        g, d = truncation_match(0.5, 2)
        assert g == pytest.approx(np.sqrt(2), rel=1e-14)
        assert d == pytest.approx(np.sqrt(2) / 2, rel=1e-14)
        m = Truncated(0.5, 2)
        assert flux_coefficient(m, 0.5) == pytest.approx(np.sqrt(2), rel=1e-14)

    @given(st.floats(0.01, 0.99), st.integers(2, 6))
    def test_c1(self, theta, n):
        g, d = truncation_match(theta, n)
        s0 = 1 - theta
        assert g * s0 ** (n - 1) + d == pytest.approx(theta ** -0.5, rel=1e-12)
        assert g * (n - 1) * s0 ** (n - 2) == pytest.approx(0.5 * theta ** -1.5, rel=1e-12)

    @given(st.floats(0.01, 0.99), st.integers(2, 4))
    def test_a_at_zero_is_one(self, theta, n):
        assert flux_coefficient(Truncated(theta, n), 0.0) == 1.0

    def test_rejects(self):
        with pytest.raises(DomainError):
            truncation_match(0.5, 1)
        for th in (0.0, 1.0, -0.2):
            with pytest.raises(DomainError):
                truncation_match(th, 2)
        with pytest.raises(DomainError):
            Truncated(0.5, 2, gamma=1.0)

    def test_slope_derivative(self):
        for m in (Exact(), Series(5), Truncated(0.3, 3)):
            s = np.linspace(0.05, 0.6, 7)
            fd = (flux_coefficient(m, s + 1e-7) - flux_coefficient(m, s - 1e-7)) / 2e-7
            assert np.allclose(fd, flux_coefficient_slope(m, s), rtol=1e-6)


class TestTypes:
    def test_point_charge_invariants(self):
        with pytest.raises(DomainError):
            PointCharges([[0, 0, 0], [0, 0, 0]], [1, 2])
        with pytest.raises(DomainError):
            PointCharges([[0, 0, 0]], [0.0])
        with pytest.raises(DomainError):
            PointCharges([[0, 0]], [1.0])

    def test_profile_invariants(self):
        with pytest.raises(DomainError):
            RadialProfile([1.0, 0.5], [1.0, 1.0])
        with pytest.raises(DomainError):
            RadialProfile([0.5, 1.0], [1.0, np.nan])
        with pytest.raises(DomainError):
            RadialProfile([0.5, 1.0], [1.0, 1.0], dimension=2)

    def test_profile_moment_exact_for_linear(self):
        p = RadialProfile([0.5, 1.0, 2.0], [2.0, 1.0, 0.0])
        # rho = 2 on [0, 0.5], 3 - 2r on [0.5, 1], 2 - r on [1, 2]
        exact = 2 * 0.5 ** 3 / 3 + (3 * (1 - 0.125) / 3 - 2 * (1 - 0.0625) / 4) \
            + (2 * (8 - 1) / 3 - (16 - 1) / 4)
        assert p.total_moment == pytest.approx(exact, rel=1e-14)
        assert p.moment(5.0) == pytest.approx(exact, rel=1e-14)

    def test_mollified_validation(self):
        base = PointCharges([[0, 0, 0]], [1.0])
        with pytest.raises(DomainError):
            MollifiedPoints(base, 0.0)
        with pytest.raises(DomainError):
            MollifiedPoints(base, 0.1, "square")

    def test_grid_potential_boundary(self):
        box = Box.cube(1.0)
        v = np.zeros((5, 5, 5))
        GridPotential(box, 0.5, v)
        v[0, 2, 2] = 1.0
        with pytest.raises(DomainError):
            GridPotential(box, 0.5, v)

    def test_box_divisibility(self):
        with pytest.raises(DomainError):
            Box.cube(1.0).cells(0.3)

    def test_radial_potential_grid_starts_at_zero(self):
        with pytest.raises(DomainError):
            RadialPotential(3, np.array([0.1, 1.0]), np.zeros(2), np.zeros(2), 0.0, 0.0)


def _constant_radial(c, r_max=3.0):
    r = np.linspace(0.0, r_max, 301)
    return RadialPotential(3, r, np.full_like(r, c), np.zeros_like(r), 0.0, 0.0)


class TestPairing:
    def test_zero_charge(self, bion):
        assert pairing(ZeroCharge(), bion) == 0.0

    def test_point_at_origin(self):
        r = np.linspace(0, 1, 11)
        phi = RadialPotential(3, r, 0.3 - 0.1 * r, np.full_like(r, -0.1), 0.0, 0.0)
        assert pairing(PointCharges([[0, 0, 0]], [1.0]), phi) == pytest.approx(0.3, abs=1e-15)

    def test_uniform_ball_constant(self, unit_ball):
        c = 0.7
        got = pairing(unit_ball, _constant_radial(c))
        # midpoint rule oracle of omega_3 int_0^1 c r^2 dr
        m = 20000
        mid = (np.arange(m) + 0.5) / m
        oracle = 4 * np.pi * c * np.sum(mid ** 2) / m
        assert got == pytest.approx(oracle, rel=1e-8)
        assert got == pytest.approx(c * 4 * np.pi / 3, rel=1e-13)

    def test_off_center_points_rejected(self, bion):
        with pytest.raises(DomainError):
            pairing(PointCharges([[1.0, 0, 0]], [1.0]), bion)

    def test_grid_point_outside_box(self):
        phi = GridPotential(Box.cube(1.0), 0.5, np.zeros((5, 5, 5)))
        with pytest.raises(DomainError):
            pairing(PointCharges([[2.0, 0, 0]], [1.0]), phi)

    def test_grid_point_multilinear(self):
        box = Box.cube(1.0)
        x = box.axes(0.5)
        X, Y, Z = np.meshgrid(*x, indexing="ij")
        v = (1 - X ** 2) * (1 - Y ** 2) * (1 - Z ** 2)
        phi = GridPotential(box, 0.5, v)
        assert pairing(PointCharges([[0.0, 0.0, 0.0]], [2.0]), phi) == pytest.approx(2.0)

    def test_grid_density_cell_sum(self):
        box = Box.cube(1.0)
        rho = GridDensity(box, 0.5, np.ones((5, 5, 5)))
        v = np.zeros((5, 5, 5))
        v[1:-1, 1:-1, 1:-1] = 2.0
        assert pairing(rho, GridPotential(box, 0.5, v)) == pytest.approx(27 * 2 * 0.125)


class TestEnergy:
    def test_zero_potential(self, unit_ball):
        assert energy(Exact(), unit_ball, _constant_radial(0.0)) == 0.0

    def test_zero_charge_lower_bound(self, unit_ball):
        phi = solve_radial(unit_ball)
        e = energy(Exact(), ZeroCharge(), phi)
        half_dirichlet = radial_dirichlet_integral(Series(1), phi)
        assert e >= half_dirichlet > 0

    def test_exact_rejects_superluminal(self):
        r = np.linspace(0, 1, 11)
        phi = RadialPotential(3, r, 1.2 * (1 - r), np.full_like(r, -1.2), 0.0, 0.0)
        with pytest.raises(DomainError):
            energy(Exact(), ZeroCharge(), phi)
        box = Box.cube(1.0)
        v = np.zeros((5, 5, 5))
        v[2, 2, 2] = 1.0
        with pytest.raises(DomainError):
            energy(Exact(), ZeroCharge(), GridPotential(box, 0.5, v))

    def test_bion_energy_oracle(self, bion, bion_charge):
        # adaptive mpmath quadrature of the closed-form integrand (30 digits)
        assert energy(Exact(), bion_charge, bion) == pytest.approx(
            -15.5326596944449509174652163851, rel=1e-6)

    def test_lower_estimates_same_phi(self, unit_ball):
        phi = solve_radial(unit_ball)
        e = energy(Exact(), unit_ball, phi)
        for m in (Series(1), Series(4), Truncated(0.5), Truncated(0.9, 3)):
            assert energy(m, unit_ball, phi) <= e + 1e-14
