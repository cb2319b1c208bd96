import math

import numpy as np
import pytest

from periodic_euler.characteristics import (
    CharPath,
    PeriodicField,
    d_dx,
    d_dt_periodic,
    interpolate,
    path_integrate,
    trace,
    trace_between,
    weight_F,
    weight_grids,
    weight_upper_bound,
)
from periodic_euler.errors import AdmissibilityError, ValidationError
from periodic_euler.model import DampingField, make_equilibrium

T_STAR = 4.0
LENGTH = 1.0


def sine_field(nt, nx, amplitude=0.02):
    """phi1 = A sin(2 pi t / T*), phi2 = 0 sampled on the grid."""
    t = np.arange(nt) * (T_STAR / nt)
    vals = np.zeros((2, nt, nx))
    vals[0] = amplitude * np.sin(2 * np.pi * t / T_STAR)[:, None]
    return PeriodicField(vals, T_STAR, LENGTH)


class TestInterpolate:
    def test_nodes_reproduced_exactly(self):
        rng = np.random.default_rng(0)
        field = PeriodicField(rng.uniform(-1, 1, size=(2, 16, 9)), T_STAR, LENGTH)
        for j in (0, 3, 15):
            for k in (0, 4, 8):
                t = j * field.dt
                x = k * field.dx
                for comp in (1, 2):
                    got = interpolate(field, comp, t, x)
                    assert got == field.values[comp - 1, j, k]

    def test_constant_field_anywhere(self):
        field = PeriodicField(np.full((2, 12, 8), 0.7), T_STAR, LENGTH)
        rng = np.random.default_rng(1)
        t = rng.uniform(-10, 10, 40)
        x = rng.uniform(0, LENGTH, 40)
        np.testing.assert_allclose(interpolate(field, 1, t, x), 0.7, atol=1e-14)
        np.testing.assert_allclose(interpolate(field, 2, t, x, order=1), 0.7, atol=1e-14)

    def test_cubic_convergence_in_time(self):
        # interpolation error of a smooth sine shrinks ~16x per grid doubling
        def max_err(nt):
            field = sine_field(nt, 5, amplitude=1.0)
            tq = np.linspace(0, T_STAR, 997, endpoint=False) + 0.37 * field.dt
            exact = np.sin(2 * np.pi * tq / T_STAR)
            got = interpolate(field, 1, tq, np.full_like(tq, 0.0))
            return np.max(np.abs(got - exact))

        e32, e64 = max_err(32), max_err(64)
        assert e64 < 1e-4
        assert 12.0 <= e32 / e64 <= 20.0

    def test_domain_guard(self):
        field = sine_field(16, 9)
        with pytest.raises(ValidationError):
            interpolate(field, 1, 0.0, LENGTH + 1e-6)
        with pytest.raises(ValidationError):
            interpolate(field, 3, 0.0, 0.5)


class TestGridDerivatives:
    def test_periodic_time_derivative(self):
        nt = 64
        t = np.arange(nt) * (T_STAR / nt)
        vals = np.sin(2 * np.pi * t / T_STAR)
        got = d_dt_periodic(vals, T_STAR / nt)
        exact = (2 * np.pi / T_STAR) * np.cos(2 * np.pi * t / T_STAR)
        # centered-difference error bound: (2 pi / T*)^3 dt^2 / 6
        np.testing.assert_allclose(got, exact, atol=2.6e-3)

    def test_one_sided_edges_second_order(self):
        for nx in (33, 65):
            x = np.linspace(0, 1, nx)
            vals = x ** 3
            got = d_dx(vals, x[1] - x[0])
            np.testing.assert_allclose(got, 3 * x ** 2, atol=4.0 / (nx - 1) ** 2)


class TestTrace:
    def setup_method(self):
        self.eq = make_equilibrium(1.0, 1.4, 0.1)

    def test_zero_field_straight_line(self):
        field = PeriodicField.zeros(32, 17, T_STAR, LENGTH)
        t0, x0 = 1.3, 0.25
        path = trace(field, self.eq, 1.4, 1, (t0, x0))
        nu1 = -1.0 / self.eq.c_bar
        assert path.arrival_t == pytest.approx(t0 + nu1 * (LENGTH - x0), abs=1e-12)
        expected = t0 + nu1 * (path.xs - x0)
        np.testing.assert_allclose(path.ts, expected, atol=1e-12)
        assert np.all(np.diff(path.xs) > 0)

    def test_family1_from_left_face(self):
        field = PeriodicField.zeros(32, 17, T_STAR, LENGTH)
        path = trace(field, self.eq, 1.4, 1, (0.5, 0.0))
        assert path.arrival_t == pytest.approx(0.5 - LENGTH / self.eq.c_bar, abs=1e-12)

    def test_family2_runs_to_left(self):
        field = PeriodicField.zeros(32, 17, T_STAR, LENGTH)
        path = trace(field, self.eq, 1.4, 2, (0.5, 0.75))
        assert path.xs[-1] == 0.0
        assert path.arrival_t == pytest.approx(0.5 - 0.75 / self.eq.c_bar, abs=1e-12)

    def test_self_convergence_against_fine_reference(self):
        field = sine_field(32, 33)
        anchor = (0.9, 0.0)
        ref = trace(field, self.eq, 1.4, 1, anchor, substeps_per_cell=400).arrival_t
        err = abs(trace(field, self.eq, 1.4, 1, anchor, substeps_per_cell=4).arrival_t - ref)
        assert err <= 1e-8

    def test_fourth_order_in_substeps(self):
        # x-profile field: the interpolant is exact in t and smooth within
        # every cell, and steps never straddle cell boundaries, so the
        # one-step method shows its full order
        nx = 9
        x = np.linspace(0, LENGTH, nx)
        vals = np.zeros((2, 16, nx))
        vals[0] = (0.09 * np.sin(2 * np.pi * x / LENGTH))[None, :]
        vals[1] = (0.05 * np.cos(2 * np.pi * x / LENGTH))[None, :]
        field = PeriodicField(vals, T_STAR, LENGTH)
        anchor = (1.7, 0.0)
        ref = trace(field, self.eq, 1.4, 1, anchor, substeps_per_cell=400).arrival_t
        e2 = abs(trace(field, self.eq, 1.4, 1, anchor, substeps_per_cell=2).arrival_t - ref)
        e4 = abs(trace(field, self.eq, 1.4, 1, anchor, substeps_per_cell=4).arrival_t - ref)
        assert e2 / e4 >= 8.0

    def test_reversibility(self):
        field = sine_field(48, 49)
        t0, x0 = 2.2, 0.3
        path = trace(field, self.eq, 1.4, 1, (t0, x0), substeps_per_cell=4)
        _, _, back = trace_between(field, self.eq, 1.4, 1,
                                   path.arrival_t, LENGTH, x0, substeps_per_cell=4)
        assert back == pytest.approx(t0, abs=1e-9)

    def test_admissibility_guard(self):
        # amplitude far outside the ball radius 0.1 c_bar
        field = sine_field(32, 17, amplitude=0.9)
        with pytest.raises(AdmissibilityError):
            trace(field, self.eq, 1.4, 1, (0.0, 0.0))

    def test_bad_substeps(self):
        field = sine_field(16, 9)
        with pytest.raises(ValidationError):
            trace(field, self.eq, 1.4, 1, (0.0, 0.5), substeps_per_cell=0)


class TestWeightF:
    def setup_method(self):
        self.eq = make_equilibrium(1.0, 1.4, 0.1)

    def test_zero_damping(self):
        damping = DampingField.constant(0.0, T_STAR, LENGTH)
        assert weight_F(damping, self.eq, 1, 0.2, 0.5) == pytest.approx(1.0, abs=1e-15)
        assert weight_F(damping, self.eq, 2, 0.2, 0.5) == pytest.approx(1.0, abs=1e-15)

    def test_constant_damping_closed_form(self):
        damping = DampingField.constant(-1.0, T_STAR, LENGTH)
        expected = math.exp(0.5 / math.sqrt(1.4))
        assert weight_F(damping, self.eq, 1, 0.0, 0.0) == pytest.approx(expected, rel=1e-12)
        assert weight_F(damping, self.eq, 2, 0.0, LENGTH) == pytest.approx(expected, rel=1e-12)

    def test_empty_range_faces(self):
        damping = DampingField.separable(-0.7, [(0.1, 0.3)], [1.0, 0.2], T_STAR, LENGTH)
        assert weight_F(damping, self.eq, 1, 1.1, LENGTH) == pytest.approx(1.0, abs=1e-15)
        assert weight_F(damping, self.eq, 2, 1.1, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_bounds_and_monotonicity(self):
        damping = DampingField.separable(-0.8, [(0.0, 0.4)], [1.0, -0.6], T_STAR, LENGTH)
        m0 = weight_upper_bound(damping, self.eq)
        xs = np.linspace(0, LENGTH, 21)
        for t in (0.0, 1.3, 3.9):
            f1 = np.array([weight_F(damping, self.eq, 1, t, x) for x in xs])
            f2 = np.array([weight_F(damping, self.eq, 2, t, x) for x in xs])
            assert np.all(f1 >= 1.0 - 1e-12) and np.all(f1 <= m0 + 1e-12)
            assert np.all(f2 >= 1.0 - 1e-12) and np.all(f2 <= m0 + 1e-12)
            assert np.all(np.diff(f1) <= 1e-12)   # non-increasing in x
            assert np.all(np.diff(f2) >= -1e-12)  # non-decreasing in x

    def test_grid_tables_match_pointwise_op(self):
        damping = DampingField.separable(-0.8, [(0.0, 0.4)], [1.0, -0.6], T_STAR, LENGTH)
        t_nodes = np.arange(12) * (T_STAR / 12)
        x_nodes = np.linspace(0, LENGTH, 9)
        F, _ = weight_grids(damping.beta, damping.dbeta_dt, t_nodes, x_nodes,
                            -1.0 / self.eq.c_bar)
        for j in (0, 5, 11):
            for k in (0, 4, 8):
                ref = weight_F(damping, self.eq, 1, t_nodes[j], x_nodes[k],
                               quad_points=257)
                assert F[j, k] == pytest.approx(ref, rel=1e-9)

    def test_quad_points_guard(self):
        damping = DampingField.constant(-1.0, T_STAR, LENGTH)
        with pytest.raises(ValidationError):
            weight_F(damping, self.eq, 1, 0.0, 0.0, quad_points=1)


class TestPathIntegrate:
    def test_zero_integrand(self):
        path = CharPath(1, np.zeros(5), np.linspace(0.2, 1.0, 5), 0.0)
        assert path_integrate(path, lambda t, x: np.zeros_like(x)) == 0.0

    def test_unit_integrand_measures_range(self):
        x0 = 0.3
        path = CharPath(1, np.zeros(9), np.linspace(x0, LENGTH, 9), 0.0)
        got = path_integrate(path, lambda t, x: np.ones_like(x))
        assert got == pytest.approx(LENGTH - x0, abs=1e-14)

    def test_linear_integrand_exact(self):
        path = CharPath(1, np.zeros(11), np.linspace(0.0, 1.0, 11), 0.0)
        got = path_integrate(path, lambda t, x: x)
        assert got == pytest.approx(0.5, abs=1e-12)

    def test_family2_orientation_positive_measure(self):
        path = CharPath(2, np.zeros(6), np.linspace(0.8, 0.0, 6), 0.0)
        got = path_integrate(path, lambda t, x: np.ones_like(x))
        assert got == pytest.approx(0.8, abs=1e-14)

    def test_short_path_rejected(self):
        path = CharPath(1, np.zeros(1), np.array([0.5]), 0.0)
        with pytest.raises(ValidationError):
            path_integrate(path, lambda t, x: x)
