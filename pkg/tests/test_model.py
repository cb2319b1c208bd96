import math

import numpy as np
import pytest

from periodic_euler.errors import AdmissibilityError, ValidationError
from periodic_euler.model import (
    BoundaryForcing,
    DampingField,
    GasState,
    RiemannPair,
    boundary_c1_norm,
    eigenvalues,
    invariants_from_primitive,
    lambda_coefficients,
    make_equilibrium,
    nu,
    perturbation_eigenvalues,
    primitive_from_invariants,
    riemann_from_state,
    sound_speed,
    state_from_riemann,
    validate_hypothesis,
)

SQRT3 = 1.7320508075688772
SQRT14 = 1.1832159566199232


class TestSoundSpeed:
    def test_gamma_three(self):
        assert sound_speed(1.0, 3.0) == pytest.approx(SQRT3, abs=1e-12)

    def test_gamma_air(self):
        assert sound_speed(1.0, 1.4) == pytest.approx(SQRT14, abs=1e-12)

    def test_gamma_to_one_limit(self):
        # rho^((gamma-1)/2) -> 1, so c -> sqrt(gamma) -> 1
        assert sound_speed(1.0, 1.0 + 1e-9) == pytest.approx(1.0, abs=1e-6)

    def test_domain_errors(self):
        with pytest.raises(ValidationError):
            sound_speed(0.0, 1.4)
        with pytest.raises(ValidationError):
            sound_speed(-1.0, 1.4)
        with pytest.raises(ValidationError):
            sound_speed(1.0, 1.0)


class TestRiemannTransforms:
    def test_rest_state_gamma_three(self):
        pair = riemann_from_state(GasState(1.0, 0.0), 3.0)
        assert pair.m == pytest.approx(-SQRT3 / 2, abs=1e-12)
        assert pair.n == pytest.approx(SQRT3 / 2, abs=1e-12)

    def test_rest_state_gamma_air(self):
        # 2c/(gamma-1) = 5*sqrt(1.4), halved
        pair = riemann_from_state(GasState(1.0, 0.0), 1.4)
        assert pair.n == pytest.approx(5 * SQRT14 / 2, abs=1e-12)
        assert pair.m == pytest.approx(-5 * SQRT14 / 2, abs=1e-12)

    def test_inverse_frozen_cases(self):
        s = state_from_riemann(RiemannPair(-SQRT3 / 2, SQRT3 / 2), 3.0)
        assert s.rho == pytest.approx(1.0, abs=1e-12)
        assert s.u == pytest.approx(0.0, abs=1e-12)
        s = state_from_riemann(RiemannPair(-2.958039891549808, 2.958039891549808), 1.4)
        assert s.rho == pytest.approx(1.0, abs=1e-12)
        assert s.u == pytest.approx(0.0, abs=1e-13)

    def test_vacuum_rejected(self):
        with pytest.raises(ValidationError):
            RiemannPair(0.3, 0.3)

    def test_round_trip_random_states(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            rho = rng.uniform(0.4, 2.5)
            gamma = rng.uniform(1.1, 3.0)
            u = rng.uniform(-0.5, 0.5) * sound_speed(rho, gamma)
            s0 = GasState(rho, u)
            s1 = state_from_riemann(riemann_from_state(s0, gamma), gamma)
            assert s1.rho == pytest.approx(rho, rel=1e-13)
            assert s1.u == pytest.approx(u, rel=1e-13, abs=1e-13)

    def test_array_transforms_match_scalar(self):
        rho = np.array([0.8, 1.0, 1.3])
        u = np.array([-0.1, 0.0, 0.2])
        m, n = invariants_from_primitive(rho, u, 1.4)
        rho2, u2 = primitive_from_invariants(m, n, 1.4)
        np.testing.assert_allclose(rho2, rho, rtol=1e-13)
        np.testing.assert_allclose(u2, u, atol=1e-14)


class TestEigenvalues:
    def test_gamma_three_decouples(self):
        pair = RiemannPair(-SQRT3 / 2, SQRT3 / 2)
        lam1, lam2 = eigenvalues(pair, 3.0)
        assert lam1 == pytest.approx(2 * pair.m, abs=1e-14)
        assert lam2 == pytest.approx(2 * pair.n, abs=1e-14)
        assert lam1 == pytest.approx(-SQRT3, abs=1e-12)

    def test_equilibrium_air(self):
        pair = riemann_from_state(GasState(1.0, 0.0), 1.4)
        lam1, lam2 = eigenvalues(pair, 1.4)
        assert lam1 == pytest.approx(-SQRT14, abs=1e-12)
        assert lam2 == pytest.approx(SQRT14, abs=1e-12)

    def test_sum_and_difference_identities(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            gamma = rng.uniform(1.05, 4.0)
            m = rng.uniform(-3, 3)
            n = m + rng.uniform(1e-3, 3)
            lam1, lam2 = eigenvalues(RiemannPair(m, n), gamma)
            assert lam1 + lam2 == pytest.approx(2 * (m + n), rel=1e-12, abs=1e-12)
            assert lam2 - lam1 == pytest.approx((gamma - 1) * (n - m), rel=1e-12)
            assert lam1 < lam2


class TestNu:
    def test_reciprocals_gamma_three(self):
        pair = RiemannPair(-SQRT3 / 2, SQRT3 / 2)
        nu1, nu2 = nu(pair, 3.0)
        assert nu1 == pytest.approx(-0.5773502691896258, abs=1e-12)
        assert nu2 == pytest.approx(0.5773502691896258, abs=1e-12)

    def test_equilibrium_value(self):
        eq = make_equilibrium(1.0, 1.4, 0.0)
        pair = riemann_from_state(GasState(1.0, 0.0), 1.4)
        nu1, _ = nu(pair, 1.4)
        assert nu1 == pytest.approx(-1.0 / eq.c_bar, abs=1e-14)

    def test_sonic_guard(self):
        # lambda1 = 1.2 m + 0.8 n vanishes for (m, n) = (-1, 1.5) at gamma = 1.4
        with pytest.raises(AdmissibilityError):
            nu(RiemannPair(-1.0, 1.5), 1.4)

    def test_magnitudes_bounded_by_a0_over_ball(self):
        eq = make_equilibrium(1.0, 1.4, 0.1)
        rng = np.random.default_rng(3)
        phi = rng.uniform(-0.1, 0.1, size=(500, 2))
        lam1, lam2 = perturbation_eigenvalues(phi[:, 0], phi[:, 1], eq)
        assert np.max(np.abs(1.0 / lam1)) <= eq.a0 * (1 + 1e-12)
        assert np.max(np.abs(1.0 / lam2)) <= eq.a0 * (1 + 1e-12)


class TestEquilibrium:
    def test_reference_values(self):
        eq = make_equilibrium(1.0, 1.4, 0.1)
        assert eq.c_bar == pytest.approx(SQRT14, abs=1e-12)
        assert eq.n_bar == pytest.approx(5 * SQRT14 / 2, abs=1e-12)
        assert eq.m_bar == -eq.n_bar
        # eigenvalue deviation over the sup ball is 2 * radius for gamma <= 3
        assert eq.a0 == pytest.approx(1.0 / (SQRT14 - 0.2), rel=1e-12)

    def test_degenerate_ball(self):
        eq = make_equilibrium(1.0, 1.4, 0.0)
        assert eq.a0 == pytest.approx(1.0 / SQRT14, rel=1e-14)

    def test_radius_hitting_sonic_rejected(self):
        # first failing radius: deviation = radius * ((gamma+1)/2 + |3-gamma|/2)
        a, b = lambda_coefficients(1.4)
        r_crit = SQRT14 / (a + abs(b))
        with pytest.raises(ValidationError):
            make_equilibrium(1.0, 1.4, r_crit * 1.001)
        make_equilibrium(1.0, 1.4, r_crit * 0.9)

    def test_bad_inputs(self):
        with pytest.raises(ValidationError):
            make_equilibrium(-1.0, 1.4, 0.1)
        with pytest.raises(ValidationError):
            make_equilibrium(1.0, 0.9, 0.1)


class TestDampingField:
    def test_constant_passes(self):
        field = DampingField.constant(-0.5, 4.0, 1.0)
        report = validate_hypothesis(field, grid_density=32)
        assert report.passed
        assert report.max_dt_beta == 0.0
        assert report.max_dx_beta == 0.0

    def test_positive_amplitude_rejected(self):
        with pytest.raises(ValidationError):
            DampingField.constant(0.1, 4.0, 1.0)

    def test_separable_sine_profile(self):
        # beta = -0.5 (1 + 0.5 sin(2 pi t / T*))
        t_star = 4.0
        field = DampingField.separable(-0.5, [(0.0, 0.5)], [1.0], t_star, 1.0)
        report = validate_hypothesis(field, grid_density=96)
        assert report.passed
        bound = 0.25 * 2 * math.pi / t_star
        assert field.deriv_bound == pytest.approx(bound, rel=1e-12)
        assert report.max_dt_beta <= bound + 1e-6
        assert report.max_dt_beta >= 0.9 * bound

    def test_separable_sign_change_rejected(self):
        with pytest.raises(ValidationError):
            DampingField.separable(-0.5, [(0.0, 1.5)], [1.0], 4.0, 1.0)

    def test_periodicity_exact(self):
        field = DampingField.separable(-0.3, [(0.2, 0.4)], [1.0, -0.5], 4.0, 1.0)
        rng = np.random.default_rng(11)
        t = rng.uniform(0, 12.0, size=50)
        x = rng.uniform(0, 1.0, size=50)
        np.testing.assert_allclose(field.beta(t + 4.0, x), field.beta(t, x),
                                   rtol=0, atol=1e-15)

    def test_tabulated_reproduces_nodes(self):
        t_star, length = 4.0, 1.0
        tn = np.linspace(0, t_star, 16, endpoint=False)
        xn = np.linspace(0, length, 9)
        vals = -0.4 * (1 + 0.3 * np.sin(2 * np.pi * tn[:, None] / t_star)) \
            * (1 - 0.5 * xn[None, :] * (1 - xn[None, :]))
        field = DampingField.tabulated(vals, t_star, length)
        got = field.beta(tn[:, None], xn[None, :])
        np.testing.assert_allclose(got, vals, atol=1e-12)
        assert validate_hypothesis(field, grid_density=48).passed

    def test_validator_flags_lower_bound_breach(self):
        field = DampingField.constant(-0.5, 4.0, 1.0)
        object.__setattr__(field, "beta_star", -0.4)
        report = validate_hypothesis(field, grid_density=16)
        assert not report.passed
        assert "lower_bound" in report.violations


class TestBoundaryForcing:
    def test_zero_coefficients(self):
        forcing = BoundaryForcing.fourier(4.0, 0.0, 0.0)
        result = boundary_c1_norm(forcing)
        assert result.sampled == 0.0
        assert result.certified == 0.0

    def test_sine_with_unit_period_scaling(self):
        # phi = eps sin(2 pi t / T*) with T* = 2 pi has derivative eps cos t
        eps = 0.01
        forcing = BoundaryForcing.fourier(2 * math.pi, 0.0, 0.0,
                                          phi1_coeffs=[(0.0, eps)])
        result = boundary_c1_norm(forcing, samples=4096)
        assert result.sampled == pytest.approx(eps, rel=1e-5)
        assert result.certified == pytest.approx(eps * 2, rel=1e-12)

    def test_certified_dominates_sampled(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            coeffs = rng.uniform(-0.01, 0.01, size=(3, 2))
            forcing = BoundaryForcing.fourier(4.0, 0.1, -0.2,
                                              phi1_coeffs=coeffs.tolist(),
                                              phi2_coeffs=[(0.0, 0.003)])
            result = boundary_c1_norm(forcing)
            assert result.certified >= result.sampled

    def test_reflection_bound_enforced(self):
        with pytest.raises(ValidationError):
            BoundaryForcing.fourier(4.0, 1.5, 0.0)
        with pytest.raises(ValidationError):
            BoundaryForcing.fourier(4.0, 0.0, -1.0)

    def test_periodic_extension(self):
        forcing = BoundaryForcing.fourier(4.0, 0.0, 0.0, phi1_coeffs=[(0.1, 0.2)])
        t = np.array([-1.7, 0.3, 2.9])
        np.testing.assert_allclose(forcing.value(1, t + 4.0), forcing.value(1, t),
                                   atol=1e-15)

    def test_min_samples(self):
        forcing = BoundaryForcing.fourier(4.0, 0.0, 0.0)
        with pytest.raises(ValidationError):
            boundary_c1_norm(forcing, samples=32)
