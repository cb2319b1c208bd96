"""Linearized fixed-point iteration for the time-periodic solution.

Each iteration solves two decoupled linear transport problems: for every
component, the previous iterate supplies the characteristic speeds, the
cross-coupling source and the reflected boundary value, while the diagonal
damping term is absorbed exactly into an exponential integrating factor.
The weighted unknown F_i * phi_i then obeys a pure integral relation along
the characteristics of the previous iterate.

The relation is marched column by column from the boundary face inward: per
grid cell, characteristic feet are traced with a 4th-order one-step method,
the partial solution is interpolated at the feet (periodic cubic in t), and
the sources are accumulated with a trapezoid rule. The only implicit piece,
the weight-correction integral that appears when the damping varies in time,
is settled by a short predictor-corrector (at most 8 passes, exact in one
pass when dbeta/dt vanishes).

Family 2 is the exact mirror image of family 1 (x -> L - x, components
swapped and negated, reflection coefficients swapped), and is computed by
mirroring the inputs through the family-1 core.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .characteristics import (
    PeriodicField,
    _interp_columns_periodic,
    d_dt_periodic,
    d_dx,
    weight_grids,
)
from .errors import (
    AdmissibilityError,
    MaxIterationsError,
    NonContractionError,
    PredictorCorrectorError,
    ValidationError,
)
from .model import (
    BoundaryForcing,
    DampingField,
    Equilibrium,
    lambda_coefficients,
    validate_hypothesis,
)

__all__ = [
    "IterationConfig",
    "ConvergenceReport",
    "PdeResidual",
    "init_zero",
    "sweep_family1",
    "sweep_family2",
    "iterate_once",
    "solve_periodic",
    "pde_residual",
    "grid_c1_norm",
]


@dataclass(frozen=True)
class IterationConfig:
    """Grid sizes and stopping control for the fixed-point iteration."""

    nt: int = 128
    nx: int = 128
    tol: float | None = None
    max_iter: int = 100
    substeps_per_cell: int = 4
    interpolation_order: int = 3
    frozen_coefficients: bool = False

    def __post_init__(self):
        if self.nt < 8 or self.nx < 8:
            raise ValidationError("grid sizes must be at least 8 in each direction")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")
        if self.tol is not None and not self.tol > 0.0:
            raise ValidationError("tol must be positive")
        if self.substeps_per_cell < 1:
            raise ValidationError("substeps_per_cell must be at least 1")
        if self.interpolation_order not in (1, 3):
            raise ValidationError("interpolation_order must be 1 or 3")

    def effective_tol(self, forcing: BoundaryForcing) -> float:
        """Explicit tolerance, or 1e-10 * max(measured forcing size, 1e-6)."""
        if self.tol is not None:
            return self.tol
        return 1e-10 * max(forcing.eps_measured, 1e-6)


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-iteration contraction diagnostics of one periodic solve."""

    diffs: tuple
    theta_estimates: tuple
    theta_estimate: float | None
    final_c0_norm: float
    final_c1_norm: float
    iterations_used: int
    converged: bool
    tol_used: float


class PdeResidual(NamedTuple):
    """Sup norms of the interior residual and the boundary relation mismatch."""

    residual_sup: tuple
    boundary_mismatch: tuple

    @property
    def max_residual(self) -> float:
        return max(self.residual_sup)

    @property
    def max_mismatch(self) -> float:
        return max(self.boundary_mismatch)


def init_zero(config: IterationConfig, t_star: float, length: float) -> PeriodicField:
    """The zero starting iterate."""
    return PeriodicField.zeros(config.nt, config.nx, t_star, length)


# --------------------------------------------------------------------------
# Canonical sweep (family-1 orientation)
# --------------------------------------------------------------------------

def _rk4_feet(t0, xk, xk1, substeps, reciprocal_speed):
    """Advance the characteristic time-coordinates of a whole column of
    anchors from x = xk to x = xk1 (one grid cell, `substeps` stages each)."""
    h = (xk1 - xk) / substeps
    t = t0.copy()
    y = xk
    for _ in range(substeps):
        k1 = reciprocal_speed(t, y)
        k2 = reciprocal_speed(t + 0.5 * h * k1, y + 0.5 * h)
        k3 = reciprocal_speed(t + 0.5 * h * k2, y + 0.5 * h)
        k4 = reciprocal_speed(t + h * k3, y + h)
        t = t + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y += h
    return t


def _sweep_canonical(p_self, p_other, boundary_vals, beta_fn, dbeta_dt_fn,
                     equilibrium: Equilibrium, config: IterationConfig,
                     t_star: float, length: float, pc_tol: float):
    """March the weighted transport relation from the last column inward.

    Canonical orientation: the solved component travels leftward (equilibrium
    reciprocal speed -1/c_bar) and its boundary data sits at x = L. The ball
    membership of the previous iterate is checked once on the grid; sonic
    margins are guarded at every interpolated sample.
    """
    nt, nx = p_self.shape
    dx = length / (nx - 1)
    t_nodes = np.arange(nt) * (t_star / nt)
    x_nodes = np.linspace(0.0, length, nx)
    a, b = lambda_coefficients(equilibrium.gamma)
    c_bar = equilibrium.c_bar
    nu_bar = -1.0 / c_bar
    margin = equilibrium.sonic_margin
    frozen = config.frozen_coefficients
    order = config.interpolation_order

    if not frozen:
        lam1 = -c_bar + a * p_self + b * p_other
        lam2 = c_bar + b * p_self + a * p_other
        if not equilibrium.contains(p_self, p_other):
            raise AdmissibilityError("previous iterate leaves the admissible ball")
        if np.max(lam1) >= -margin or np.min(lam2) <= margin:
            raise AdmissibilityError("previous iterate is sonic within the margin")

    F, I = weight_grids(beta_fn, dbeta_dt_fn, t_nodes, x_nodes, nu_bar)
    has_self_term = bool(np.max(np.abs(I)) > 0.0)

    def make_cell_speed(k, xk):
        # linear blend of the cell's two columns, cubic periodic in t
        cols = np.stack([p_self[:, k], p_self[:, k + 1],
                         p_other[:, k], p_other[:, k + 1]])

        def reciprocal_speed(tv, y):
            f = min(max((y - xk) / dx, 0.0), 1.0)
            v = _interp_columns_periodic(cols, tv, t_star, order)
            ps = (1.0 - f) * v[0] + f * v[1]
            po = (1.0 - f) * v[2] + f * v[3]
            lam = -c_bar + a * ps + b * po
            if np.max(lam) >= -margin or np.min(c_bar + b * ps + a * po) <= margin:
                raise AdmissibilityError(f"sonic state while tracing near x={y:.6g}")
            return 1.0 / lam

        return reciprocal_speed

    W = np.empty((nt, nx))
    out = np.empty((nt, nx))
    W[:, -1] = boundary_vals
    out[:, -1] = boundary_vals

    for k in range(nx - 2, -1, -1):
        xk, xk1 = x_nodes[k], x_nodes[k + 1]
        if frozen:
            tau = t_nodes + nu_bar * dx
        else:
            tau = _rk4_feet(t_nodes, xk, xk1, config.substeps_per_cell,
                            make_cell_speed(k, xk))

        cols = np.stack([W[:, k + 1], p_self[:, k + 1], p_other[:, k + 1],
                         F[:, k + 1], I[:, k + 1]])
        w_far, ps_far, po_far, f_far, i_far = _interp_columns_periodic(
            cols, tau, t_star, order)
        beta_far = beta_fn(tau, xk1)
        beta_near = beta_fn(t_nodes, xk)

        if frozen:
            s_far = 0.5 * beta_far * f_far * nu_bar * po_far
            s_near = 0.5 * beta_near * F[:, k] * nu_bar * p_other[:, k]
            g_far = nu_bar * i_far
            g_near = nu_bar * I[:, k]
        else:
            lam_far = -c_bar + a * ps_far + b * po_far
            if np.max(lam_far) >= -margin:
                raise AdmissibilityError("sonic state at characteristic feet")
            nu_far = 1.0 / lam_far
            lam_near = -c_bar + a * p_self[:, k] + b * p_other[:, k]
            nu_near = 1.0 / lam_near
            s_far = 0.5 * beta_far * f_far * (
                (nu_far - nu_bar) * (ps_far + po_far) + nu_bar * po_far)
            s_near = 0.5 * beta_near * F[:, k] * (
                (nu_near - nu_bar) * (p_self[:, k] + p_other[:, k])
                + nu_bar * p_other[:, k])
            g_far = nu_far * i_far
            g_near = nu_near * I[:, k]

        base = w_far - 0.5 * dx * (s_near + s_far + g_far * w_far)
        if has_self_term:
            w_near = F[:, k] * p_self[:, k]
            for _ in range(8):
                w_new = base - 0.5 * dx * g_near * w_near
                delta = float(np.max(np.abs(w_new - w_near)))
                w_near = w_new
                if delta <= pc_tol:
                    break
            else:
                raise PredictorCorrectorError(
                    f"implicit weight-correction term did not settle at column {k}")
        else:
            w_near = base
        W[:, k] = w_near
        out[:, k] = w_near / F[:, k]
    return out


def _resolve_pc_tol(config: IterationConfig, forcing: BoundaryForcing) -> float:
    return config.effective_tol(forcing) / 10.0


def sweep_family1(prev: PeriodicField, forcing: BoundaryForcing,
                  damping: DampingField, equilibrium: Equilibrium,
                  config: IterationConfig, pc_tol: float | None = None) -> np.ndarray:
    """One transport solve for the leftgoing component (boundary at x = L)."""
    t_nodes = prev.t_nodes
    boundary = np.asarray(forcing.value(1, t_nodes)) \
        + forcing.kappa1 * prev.values[1][:, -1]
    return _sweep_canonical(
        prev.values[0], prev.values[1], boundary,
        damping.beta, damping.dbeta_dt,
        equilibrium, config, prev.t_star, prev.length,
        _resolve_pc_tol(config, forcing) if pc_tol is None else pc_tol)


def sweep_family2(prev: PeriodicField, forcing: BoundaryForcing,
                  damping: DampingField, equilibrium: Equilibrium,
                  config: IterationConfig, pc_tol: float | None = None) -> np.ndarray:
    """One transport solve for the rightgoing component (boundary at x = 0).

    Computed as the exact mirror of the family-1 core: reverse x, swap and
    negate the components, swap the reflection coefficients, mirror the
    damping. The mirrored equilibrium is the equilibrium itself.
    """
    length = prev.length
    t_nodes = prev.t_nodes
    p_self = -prev.values[1][:, ::-1]
    p_other = -prev.values[0][:, ::-1]
    boundary = -np.asarray(forcing.value(2, t_nodes)) \
        + forcing.kappa2 * p_other[:, -1]

    def beta_m(t, x):
        return damping.beta(t, length - np.asarray(x, dtype=float))

    def dbeta_dt_m(t, x):
        return damping.dbeta_dt(t, length - np.asarray(x, dtype=float))

    mirrored = _sweep_canonical(
        p_self, p_other, boundary, beta_m, dbeta_dt_m,
        equilibrium, config, prev.t_star, length,
        _resolve_pc_tol(config, forcing) if pc_tol is None else pc_tol)
    return -mirrored[:, ::-1]


def iterate_once(prev: PeriodicField, forcing: BoundaryForcing,
                 damping: DampingField, equilibrium: Equilibrium,
                 config: IterationConfig, pc_tol: float | None = None):
    """Assemble the next iterate from both sweeps; returns (field, sup diff)."""
    g1 = sweep_family1(prev, forcing, damping, equilibrium, config, pc_tol)
    g2 = sweep_family2(prev, forcing, damping, equilibrium, config, pc_tol)
    nxt = PeriodicField(np.stack([g1, g2]), prev.t_star, prev.length)
    return nxt, float(np.max(np.abs(nxt.values - prev.values)))


# --------------------------------------------------------------------------
# Driver
# --------------------------------------------------------------------------

def _theta_estimates(diffs, tol):
    return tuple(diffs[i] / diffs[i - 1] for i in range(1, len(diffs))
                 if diffs[i - 1] > 10.0 * tol)


def _geometric_mean(values):
    if not values:
        return None
    return float(math.exp(sum(math.log(v) for v in values) / len(values)))


def _build_report(diffs, tol, field, converged):
    thetas = _theta_estimates(diffs, tol)
    return ConvergenceReport(
        diffs=tuple(diffs),
        theta_estimates=thetas,
        theta_estimate=_geometric_mean([t for t in thetas[-3:] if t > 0.0]),
        final_c0_norm=field.sup_norm(),
        final_c1_norm=grid_c1_norm(field),
        iterations_used=len(diffs),
        converged=converged,
        tol_used=tol,
    )


def grid_c1_norm(field: PeriodicField) -> float:
    """max of the sup norms of the field and its first grid differences."""
    v = field.values
    return float(max(np.max(np.abs(v)),
                     np.max(np.abs(d_dt_periodic(v, field.dt, axis=1))),
                     np.max(np.abs(d_dx(v, field.dx, axis=2)))))


def solve_periodic(forcing: BoundaryForcing, damping: DampingField,
                   equilibrium: Equilibrium, config: IterationConfig):
    """Iterate from zero until the sup difference drops below tolerance.

    Returns (field, ConvergenceReport). Raises NonContractionError when the
    differences grow three times in a row and MaxIterationsError when the
    iteration cap is hit; both carry the partial report.
    """
    if abs(forcing.t_star - damping.t_star) > 1e-14 * max(1.0, damping.t_star):
        raise ValidationError("forcing and damping must share the same period")
    hypothesis = validate_hypothesis(damping)
    if not hypothesis.passed:
        raise ValidationError(
            f"damping field violates hypothesis clauses: {hypothesis.violations}")

    tol = config.effective_tol(forcing)
    pc_tol = tol / 10.0
    prev = init_zero(config, damping.t_star, damping.length)
    diffs: list[float] = []
    for _ in range(config.max_iter):
        nxt, diff = iterate_once(prev, forcing, damping, equilibrium, config, pc_tol)
        diffs.append(diff)
        if diff < tol:
            return nxt, _build_report(diffs, tol, nxt, converged=True)
        if len(diffs) >= 4 and diffs[-1] > diffs[-2] > diffs[-3] > diffs[-4]:
            raise NonContractionError(
                "iterate differences grew for 3 consecutive iterations",
                report=_build_report(diffs, tol, nxt, converged=False))
        prev = nxt
    raise MaxIterationsError(
        f"no convergence to {tol:g} within {config.max_iter} iterations",
        report=_build_report(diffs, tol, prev, converged=False))


# --------------------------------------------------------------------------
# Residual diagnostics
# --------------------------------------------------------------------------

def pde_residual(solution: PeriodicField, forcing: BoundaryForcing,
                 damping: DampingField, equilibrium: Equilibrium) -> PdeResidual:
    """Finite-difference residual of the diagonal system and boundary mismatch.

    Centered differences in t (periodic) and x (3-point one-sided at the
    faces); the boundary mismatch evaluates the reflection relations at the
    grid nodes of each face.
    """
    if solution.nt < 16 or solution.nx < 16:
        raise ValidationError("residual check needs grid sizes of at least 16")
    phi1, phi2 = solution.values
    t_nodes = solution.t_nodes
    a, b = lambda_coefficients(equilibrium.gamma)
    lam1 = -equilibrium.c_bar + a * phi1 + b * phi2
    lam2 = equilibrium.c_bar + b * phi1 + a * phi2
    beta = damping.beta(t_nodes[:, None], solution.x_nodes[None, :])
    source = 0.5 * beta * (phi1 + phi2)
    r1 = d_dt_periodic(phi1, solution.dt, axis=0) + lam1 * d_dx(phi1, solution.dx) - source
    r2 = d_dt_periodic(phi2, solution.dt, axis=0) + lam2 * d_dx(phi2, solution.dx) - source
    mis0 = phi2[:, 0] - np.asarray(forcing.value(2, t_nodes)) - forcing.kappa2 * phi1[:, 0]
    misL = phi1[:, -1] - np.asarray(forcing.value(1, t_nodes)) - forcing.kappa1 * phi2[:, -1]
    return PdeResidual(
        residual_sup=(float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))),
        boundary_mismatch=(float(np.max(np.abs(mis0))), float(np.max(np.abs(misL)))),
    )
