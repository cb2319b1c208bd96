"""Characteristic-curve machinery on the time-periodic strip [0,T*) x [0,L].

Holds the grid container for perturbation fields, the shared interpolation
kernels (periodic Lagrange in t, clamped in x), characteristic tracing by a
classical 4th-order one-step method, the integrating-factor weights built
from the damping coefficient, and trapezoid quadrature along traced paths.

Interpolation convention: time is the periodic direction and gets the
higher-order stencil (cubic by default, linear on request); space is clamped
to [0, L] and linear for field queries, cubic only where foot accuracy
matters (see the ibvp module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, ValidationError
from .model import DampingField, Equilibrium, lambda_coefficients

__all__ = [
    "PeriodicField",
    "CharPath",
    "interpolate",
    "trace",
    "trace_between",
    "weight_F",
    "weight_upper_bound",
    "path_integrate",
    "d_dt_periodic",
    "d_dx",
]


# --------------------------------------------------------------------------
# Interpolation kernels
# --------------------------------------------------------------------------

_CUBIC_OFFSETS = np.arange(-1, 3)


def _lagrange_weights_periodic(tq, t_star: float, nt: int):
    """4-point periodic Lagrange stencil in t.

    Returns (indices (M,4), weights (M,4), derivative weights (M,4)); the
    derivative weights differentiate the interpolant with respect to t.
    """
    dt = t_star / nt
    s = np.mod(np.asarray(tq, dtype=float).ravel(), t_star) * (1.0 / dt)
    j0 = np.floor(s)
    f = s - j0
    idx = (j0.astype(np.int64)[:, None] + _CUBIC_OFFSETS[None, :]) % nt
    w = np.empty((f.size, 4))
    fm1, fm2, fp1 = f - 1.0, f - 2.0, f + 1.0
    w[:, 0] = -f * fm1 * fm2 * (1.0 / 6.0)
    w[:, 1] = (f * f - 1.0) * fm2 * 0.5
    w[:, 2] = -f * fp1 * fm2 * 0.5
    w[:, 3] = f * (f * f - 1.0) * (1.0 / 6.0)
    dw = np.empty((f.size, 4))
    f2 = 3.0 * f * f
    dw[:, 0] = -(f2 - 6.0 * f + 2.0) * (1.0 / 6.0)
    dw[:, 1] = (f2 - 4.0 * f - 1.0) * 0.5
    dw[:, 2] = -(f2 - 2.0 * f - 2.0) * 0.5
    dw[:, 3] = (f2 - 1.0) * (1.0 / 6.0)
    dw *= 1.0 / dt
    return idx, w, dw


def _linear_weights_periodic(tq, t_star: float, nt: int):
    dt = t_star / nt
    s = np.mod(np.asarray(tq, dtype=float).ravel(), t_star) * (1.0 / dt)
    j0 = np.floor(s)
    f = s - j0
    idx = (j0.astype(np.int64)[:, None] + np.arange(2)[None, :]) % nt
    w = np.empty((f.size, 2))
    w[:, 0] = 1.0 - f
    w[:, 1] = f
    dw = np.empty((f.size, 2))
    dw[:, 0] = -1.0 / dt
    dw[:, 1] = 1.0 / dt
    return idx, w, dw


def _lagrange_weights_clamped(xq, length: float, nx: int):
    """4-point clamped Lagrange stencil in x; one-sided near the edges."""
    dx = length / (nx - 1)
    s = np.clip(np.asarray(xq, dtype=float).ravel() / dx, 0.0, nx - 1.0)
    start = np.clip(np.floor(s).astype(np.int64) - 1, 0, nx - 4)
    u = s - start
    w = np.stack([
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ], axis=1)
    dw = np.stack([
        -(3.0 * u * u - 12.0 * u + 11.0) / 6.0,
        (3.0 * u * u - 10.0 * u + 6.0) / 2.0,
        -(3.0 * u * u - 8.0 * u + 3.0) / 2.0,
        (3.0 * u * u - 6.0 * u + 2.0) / 6.0,
    ], axis=1) / dx
    idx = start[:, None] + np.arange(4)[None, :]
    return idx, w, dw


def _linear_weights_clamped(xq, length: float, nx: int):
    dx = length / (nx - 1)
    s = np.clip(np.asarray(xq, dtype=float).ravel() / dx, 0.0, nx - 1.0)
    j0 = np.clip(np.floor(s).astype(np.int64), 0, nx - 2)
    f = s - j0
    idx = np.stack([j0, j0 + 1], axis=1)
    w = np.stack([1.0 - f, f], axis=1)
    return idx, w


def _interp_columns_periodic(cols: np.ndarray, tq, t_star: float, order: int):
    """Interpolate several t-columns (R, Nt) at the same query times (M,).

    One shared weight computation serves all rows; returns (R, M).
    """
    nt = cols.shape[1]
    if order == 3:
        idx, w, _ = _lagrange_weights_periodic(tq, t_star, nt)
    else:
        idx, w, _ = _linear_weights_periodic(tq, t_star, nt)
    return np.einsum("rmk,mk->rm", cols[:, idx], w)


# --------------------------------------------------------------------------
# Grid container
# --------------------------------------------------------------------------

@dataclass
class PeriodicField:
    """Perturbation pair (phi1, phi2) on a uniform periodic strip grid.

    values has shape (2, Nt, Nx) indexed by t_j = j T*/Nt (periodic, no
    duplicated endpoint) and x_k = k L/(Nx-1).
    """

    values: np.ndarray
    t_star: float
    length: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[0] != 2:
            raise ValidationError(
                f"field values must have shape (2, Nt, Nx), got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("field values must be finite")
        if self.t_star <= 0.0 or self.length <= 0.0:
            raise ValidationError("period and length must be positive")

    @classmethod
    def zeros(cls, nt: int, nx: int, t_star: float, length: float) -> "PeriodicField":
        return cls(np.zeros((2, nt, nx)), t_star, length)

    @property
    def nt(self) -> int:
        return self.values.shape[1]

    @property
    def nx(self) -> int:
        return self.values.shape[2]

    @property
    def dt(self) -> float:
        return self.t_star / self.nt

    @property
    def dx(self) -> float:
        return self.length / (self.nx - 1)

    @property
    def t_nodes(self) -> np.ndarray:
        return np.arange(self.nt) * self.dt

    @property
    def x_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.nx)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def copy(self) -> "PeriodicField":
        return PeriodicField(self.values.copy(), self.t_star, self.length)


def interpolate(field: PeriodicField, component: int, t, x, order: int = 3):
    """Evaluate one component at (t, x): periodic in t, clamped linear in x.

    order selects the t stencil (1 linear, 3 cubic); node queries reproduce
    stored values exactly. x more than 1e-12 outside [0, L] is rejected.
    """
    if component not in (1, 2):
        raise ValidationError(f"component must be 1 or 2, got {component}")
    if order not in (1, 3):
        raise ValidationError(f"interpolation order must be 1 or 3, got {order}")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > field.length + 1e-12):
        raise ValidationError("spatial query outside [0, L]")
    scalar = t.ndim == 0 and x.ndim == 0
    t, x = np.broadcast_arrays(t, x)
    shape = t.shape
    vals = field.values[component - 1]
    if order == 3:
        idx_t, wt, _ = _lagrange_weights_periodic(t.ravel(), field.t_star, field.nt)
    else:
        idx_t, wt, _ = _linear_weights_periodic(t.ravel(), field.t_star, field.nt)
    idx_x, wx = _linear_weights_clamped(x.ravel(), field.length, field.nx)
    gathered = vals[idx_t[:, :, None], idx_x[:, None, :]]
    out = np.einsum("mij,mi,mj->m", gathered, wt, wx).reshape(shape)
    return float(out) if scalar else out


# --------------------------------------------------------------------------
# Grid derivative stencils (second order)
# --------------------------------------------------------------------------

def d_dt_periodic(values: np.ndarray, dt: float, axis: int = 0) -> np.ndarray:
    """Centered periodic time difference along `axis`."""
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * dt)


def d_dx(values: np.ndarray, dx: float, axis: int = -1) -> np.ndarray:
    """Centered spatial difference, 3-point one-sided at both edges."""
    v = np.moveaxis(values, axis, -1)
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2.0 * dx)
    out[..., 0] = (-3.0 * v[..., 0] + 4.0 * v[..., 1] - v[..., 2]) / (2.0 * dx)
    out[..., -1] = (3.0 * v[..., -1] - 4.0 * v[..., -2] + v[..., -3]) / (2.0 * dx)
    return np.moveaxis(out, -1, axis)


# --------------------------------------------------------------------------
# Characteristic tracing
# --------------------------------------------------------------------------

@dataclass
class CharPath:
    """Traced characteristic: (t, x) samples from the anchor to the boundary."""

    family: int
    ts: np.ndarray
    xs: np.ndarray
    arrival_t: float

    @property
    def nodes(self) -> np.ndarray:
        return np.stack([self.ts, self.xs], axis=1)


def _reciprocal_speed(field, equilibrium, gamma, family, t, x, order):
    """1/lambda_family of the interpolated state; guards the sonic margin."""
    a, b = lambda_coefficients(gamma)
    phi1 = interpolate(field, 1, t, x, order)
    phi2 = interpolate(field, 2, t, x, order)
    lam1 = -equilibrium.c_bar + a * phi1 + b * phi2
    lam2 = equilibrium.c_bar + b * phi1 + a * phi2
    m = equilibrium.sonic_margin
    if np.max(lam1) >= -m or np.min(lam2) <= m:
        raise AdmissibilityError(
            f"interpolated state at x={x} is sonic within margin {m}")
    if not equilibrium.contains(phi1, phi2, slack=0.05 * equilibrium.neighborhood_radius + 1e-12):
        raise AdmissibilityError(
            f"interpolated state at x={x} left the admissible ball")
    return 1.0 / lam1 if family == 1 else 1.0 / lam2


def trace_between(field: PeriodicField, equilibrium: Equilibrium, gamma: float,
                  family: int, t0: float, x0: float, x1: float,
                  substeps_per_cell: int = 4, order: int = 3):
    """Integrate dt/dx = 1/lambda_family from (t0, x0) to x = x1.

    Classical 4-stage one-step integration with `substeps_per_cell` steps per
    grid cell; cell boundaries always coincide with step boundaries so the
    piecewise-defined interpolant stays smooth within every step. Returns
    (node_ts, node_xs, arrival_t) with nodes at grid-cell resolution.
    """
    if substeps_per_cell < 1:
        raise ValidationError("substeps_per_cell must be at least 1")
    if not (-1e-12 <= x0 <= field.length + 1e-12 and -1e-12 <= x1 <= field.length + 1e-12):
        raise ValidationError("trace endpoints must lie in [0, L]")
    xg = field.x_nodes
    if x1 > x0:
        inner = xg[(xg > x0 + 1e-14) & (xg < x1 - 1e-14)]
        breaks = np.concatenate(([x0], inner, [x1]))
    elif x1 < x0:
        inner = xg[(xg < x0 - 1e-14) & (xg > x1 + 1e-14)][::-1]
        breaks = np.concatenate(([x0], inner, [x1]))
    else:
        return np.array([t0]), np.array([x0]), t0

    ts = [t0]
    t = float(t0)
    for seg in range(len(breaks) - 1):
        ya, yb = breaks[seg], breaks[seg + 1]
        h = (yb - ya) / substeps_per_cell
        y = ya
        for _ in range(substeps_per_cell):
            k1 = _reciprocal_speed(field, equilibrium, gamma, family, t, y, order)
            k2 = _reciprocal_speed(field, equilibrium, gamma, family,
                                   t + 0.5 * h * k1, y + 0.5 * h, order)
            k3 = _reciprocal_speed(field, equilibrium, gamma, family,
                                   t + 0.5 * h * k2, y + 0.5 * h, order)
            k4 = _reciprocal_speed(field, equilibrium, gamma, family,
                                   t + h * k3, min(max(y + h, 0.0), field.length), order)
            t = t + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            y = y + h
        ts.append(t)
    return np.asarray(ts), breaks, t


def trace(field: PeriodicField, equilibrium: Equilibrium, gamma: float,
          family: int, anchor: tuple, substeps_per_cell: int = 4,
          order: int = 3) -> CharPath:
    """Trace the characteristic of `family` from `anchor` to its boundary face.

    Family 1 runs toward x = L (reciprocal speed negative, so t decreases as
    x grows); family 2 runs toward x = 0. Raises AdmissibilityError if any
    interpolated state along the way is sonic or outside the admissible ball.
    """
    if family not in (1, 2):
        raise ValidationError(f"family must be 1 or 2, got {family}")
    t0, x0 = float(anchor[0]), float(anchor[1])
    target = field.length if family == 1 else 0.0
    ts, xs, arrival = trace_between(field, equilibrium, gamma, family,
                                    t0, x0, target, substeps_per_cell, order)
    return CharPath(family=family, ts=ts, xs=xs, arrival_t=arrival)


# --------------------------------------------------------------------------
# Integrating-factor weights
# --------------------------------------------------------------------------

def weight_F(damping: DampingField, equilibrium: Equilibrium, family: int,
             t, x, quad_points: int = 65):
    """Exponential damping weight of the requested family at (t, x).

    Family 1: exp(int_x^L (beta/2) nu1(Phi) ds) with nu1(Phi) = -1/c_bar;
    family 2: exp(-int_0^x (beta/2) nu2(Phi) ds). Composite Simpson with at
    least quad_points samples; >= 1 always, and <= exp(-beta* A0 L / 2).
    """
    if quad_points < 2:
        raise ValidationError(f"quad_points must be at least 2, got {quad_points}")
    if family not in (1, 2):
        raise ValidationError(f"family must be 1 or 2, got {family}")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    scalar = t.ndim == 0 and x.ndim == 0
    t, x = np.broadcast_arrays(t, x)
    shape = t.shape
    tf, xf = t.ravel(), x.ravel()
    panels = max(1, (quad_points - 1 + 1) // 2)
    out = np.empty(tf.shape)
    nu_bar = -1.0 / equilibrium.c_bar if family == 1 else 1.0 / equilibrium.c_bar
    for i, (ti, xi) in enumerate(zip(tf, xf)):
        lo, hi = (xi, damping.length) if family == 1 else (0.0, xi)
        s = np.linspace(lo, hi, 2 * panels + 1)
        vals = 0.5 * damping.beta(ti, s)
        h = (hi - lo) / (2 * panels)
        integral = (h / 3.0) * (vals[0] + vals[-1] + 4.0 * np.sum(vals[1:-1:2])
                                + 2.0 * np.sum(vals[2:-2:2]))
        out[i] = math.exp(nu_bar * integral) if family == 1 else math.exp(-nu_bar * integral)
    out = out.reshape(shape)
    return float(out) if scalar else out


def weight_upper_bound(damping: DampingField, equilibrium: Equilibrium) -> float:
    """Certified upper bound exp(-beta* A0 L / 2) for both weights."""
    return math.exp(-damping.beta_star * equilibrium.a0 * damping.length / 2.0)


def weight_grids(beta_fn, dbeta_dt_fn, t_nodes: np.ndarray, x_nodes: np.ndarray,
                 nu_bar: float):
    """Grid tables of the family-1-oriented weight and its self-term integral.

    Returns (F, I) of shape (Nt, Nx) where F[j,k] = exp(nu_bar * (G_L - G_k))
    with G the running integral of beta/2 from x = 0, cell Simpson rule, and
    I[j,k] = nu_bar * int_{x_k}^L (dbeta/dt)/2 ds = (dF/dt)/F.
    """
    nx = x_nodes.size
    refined = np.empty(2 * nx - 1)
    refined[0::2] = x_nodes
    refined[1::2] = 0.5 * (x_nodes[:-1] + x_nodes[1:])
    tt = t_nodes[:, None]

    def cumulative(fn):
        vals = 0.5 * fn(tt, refined[None, :])
        widths = np.diff(x_nodes)
        panels = (widths[None, :] / 6.0) * (vals[:, 0:-2:2] + 4.0 * vals[:, 1:-1:2]
                                            + vals[:, 2::2])
        g = np.zeros((t_nodes.size, nx))
        np.cumsum(panels, axis=1, out=g[:, 1:])
        return g

    g = cumulative(beta_fn)
    h = cumulative(dbeta_dt_fn)
    F = np.exp(nu_bar * (g[:, -1:] - g))
    I = nu_bar * (h[:, -1:] - h)
    return F, I


# --------------------------------------------------------------------------
# Path quadrature
# --------------------------------------------------------------------------

def path_integrate(path: CharPath, integrand) -> float:
    """Composite trapezoid of integrand(t, x) over the path's x-range.

    Uses the path's stored nodes and the positive measure |dx|; exact for
    integrands linear in x along straight paths.
    """
    if path.xs.size < 2:
        raise ValidationError("path must contain at least 2 nodes")
    vals = np.asarray(integrand(path.ts, path.xs), dtype=float)
    widths = np.abs(np.diff(path.xs))
    return float(np.sum(0.5 * (vals[:-1] + vals[1:]) * widths))
