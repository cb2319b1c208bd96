"""Quantitative verification: stability-rate fits, regularity probes, oracles.

Distances between a forward trajectory and the periodic solution are reduced
per window of length T0 = L * A0 (the maximal domain-crossing time) and
fitted for a geometric decay rate. The frozen-coefficient regime has
closed-form transport/reflection solutions that serve as independent oracles,
and second-difference probes under grid refinement certify (or reject)
uniform second-derivative bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .characteristics import (
    PeriodicField,
    _lagrange_weights_periodic,
    d_dt_periodic,
    d_dx,
)
from .errors import InsufficientDataError, ValidationError
from .ibvp import Snapshot, Trajectory
from .model import (
    BoundaryForcing,
    DampingField,
    Equilibrium,
    primitive_from_invariants,
)

__all__ = [
    "DistanceSeries",
    "StabilityReport",
    "RegularityReport",
    "FrozenOracle",
    "stability_window",
    "distance_to_periodic",
    "c1_distance_to_periodic",
    "fit_stability",
    "regularity_probe",
    "frozen_oracle",
    "euler_residual",
]


class DistanceSeries(NamedTuple):
    times: np.ndarray
    values: np.ndarray


def stability_window(equilibrium: Equilibrium, length: float) -> float:
    """Window length T0 = L * A0: the slowest domain-crossing time bound."""
    return length * equilibrium.a0


# --------------------------------------------------------------------------
# Distances to the periodic solution
# --------------------------------------------------------------------------

def _periodic_rows(periodic: PeriodicField, t: float) -> np.ndarray:
    """All-x values of both components at time t (cubic periodic in t)."""
    idx, w, _ = _lagrange_weights_periodic(np.array([t]), periodic.t_star, periodic.nt)
    return np.einsum("ckx,k->cx", periodic.values[:, idx[0], :], w[0])


def _check_grids(traj: Trajectory, periodic: PeriodicField):
    if traj.nx != periodic.nx or abs(traj.length - periodic.length) > 1e-12:
        raise ValidationError(
            "trajectory and periodic field must share the same spatial grid")


def distance_to_periodic(traj: Trajectory, periodic: PeriodicField) -> DistanceSeries:
    """Per-snapshot sup over x and both components of the deviation."""
    _check_grids(traj, periodic)
    times = traj.times
    values = np.empty(times.size)
    for i, snap in enumerate(traj.snapshots):
        ref = _periodic_rows(periodic, snap.t)
        values[i] = np.max(np.abs(snap.phi - ref))
    return DistanceSeries(times=times, values=values)


def c1_distance_to_periodic(traj: Trajectory, periodic: PeriodicField) -> DistanceSeries:
    """Per-snapshot sup deviation of the first differences (both directions)."""
    _check_grids(traj, periodic)
    dt_rows = d_dt_periodic(periodic.values, periodic.dt, axis=1)
    dt_field = PeriodicField(dt_rows, periodic.t_star, periodic.length)
    times = traj.times
    values = np.empty(times.size)
    for i, snap in enumerate(traj.snapshots):
        ref = _periodic_rows(periodic, snap.t)
        ref_dt = _periodic_rows(dt_field, snap.t)
        d_time = np.max(np.abs(snap.dphi_dt - ref_dt))
        d_space = np.max(np.abs(d_dx(snap.phi, periodic.dx) - d_dx(ref, periodic.dx)))
        values[i] = max(d_time, d_space)
    return DistanceSeries(times=times, values=values)


# --------------------------------------------------------------------------
# Window fits
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    """Per-window decay diagnostics of a perturbed run."""

    window_length: float
    window_sup_c0: tuple
    window_sup_c1: tuple | None
    ratios_c0: tuple
    ratios_c1: tuple | None
    xi_c0: float | None
    xi_c1: float | None
    monotone_after: int | None
    error_floor: float


def _window_sups(series: DistanceSeries, window: float):
    n_windows = int(math.floor(series.times[-1] / window + 1e-9))
    if n_windows < 4:
        raise InsufficientDataError(
            f"need at least 4 full windows, horizon covers {n_windows}")
    sups = []
    for k in range(n_windows):
        mask = (series.times >= k * window - 1e-12) \
            & (series.times < (k + 1) * window - 1e-12)
        if not np.any(mask):
            raise InsufficientDataError(f"window {k} contains no samples")
        sups.append(float(np.max(series.values[mask])))
    return sups


def _ratios(sups, floor):
    out = []
    for k in range(1, len(sups)):
        if sups[k - 1] > 10.0 * floor and sups[k - 1] > 0.0:
            out.append(sups[k] / sups[k - 1])
        else:
            out.append(math.nan)
    return out


def _geomean(ratios):
    vals = [r for r in ratios if not math.isnan(r) and r > 0.0]
    if not vals:
        return None
    return float(math.exp(sum(math.log(v) for v in vals) / len(vals)))


def _monotone_onset(sups, floor):
    # last window still carrying signal
    valid_end = len(sups) - 1
    while valid_end > 0 and sups[valid_end] <= 10.0 * floor:
        valid_end -= 1
    for k0 in range(valid_end):
        if all(sups[j] < sups[j - 1] for j in range(k0 + 1, valid_end + 1)):
            return k0
    return None


def fit_stability(distances: DistanceSeries, window: float,
                  c1_distances: DistanceSeries | None = None,
                  error_floor: float = 0.0) -> StabilityReport:
    """Window sups, per-window ratios and their geometric mean.

    Ratios are only formed where the preceding window sup exceeds 10x the
    error floor; monotone_after is the first window from which the sups
    decay strictly through the last window above the floor (None when that
    never happens).
    """
    if window <= 0.0:
        raise ValidationError("window length must be positive")
    sups = _window_sups(distances, window)
    ratios = _ratios(sups, error_floor)
    sups_c1 = ratios_c1 = None
    xi_c1 = None
    if c1_distances is not None:
        sups_c1 = _window_sups(c1_distances, window)
        ratios_c1 = _ratios(sups_c1, error_floor)
        xi_c1 = _geomean(ratios_c1)
    return StabilityReport(
        window_length=window,
        window_sup_c0=tuple(sups),
        window_sup_c1=tuple(sups_c1) if sups_c1 is not None else None,
        ratios_c0=tuple(ratios),
        ratios_c1=tuple(ratios_c1) if ratios_c1 is not None else None,
        xi_c0=_geomean(ratios),
        xi_c1=xi_c1,
        monotone_after=_monotone_onset(sups, error_floor),
        error_floor=error_floor,
    )


# --------------------------------------------------------------------------
# Regularity probe
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    """Second-difference sups at two resolutions and their growth ratios."""

    d2t_sup: float
    dtdx_sup: float
    d2x_sup: float
    coarse_d2t_sup: float
    coarse_dtdx_sup: float
    coarse_d2x_sup: float
    refinement_ratios: tuple

    @property
    def stencil_rows(self):
        return (
            ("d2t", self.coarse_d2t_sup, self.d2t_sup, self.refinement_ratios[0]),
            ("dtdx", self.coarse_dtdx_sup, self.dtdx_sup, self.refinement_ratios[1]),
            ("d2x", self.coarse_d2x_sup, self.d2x_sup, self.refinement_ratios[2]),
        )


def _second_difference_sups(field: PeriodicField):
    v = field.values
    dt, dx = field.dt, field.dx
    d2t = (np.roll(v, -1, axis=1) - 2.0 * v + np.roll(v, 1, axis=1)) / dt ** 2
    d2x = (v[:, :, 2:] - 2.0 * v[:, :, 1:-1] + v[:, :, :-2]) / dx ** 2
    vp = np.roll(v, -1, axis=1)
    vm = np.roll(v, 1, axis=1)
    dtdx = (vp[:, :, 2:] - vp[:, :, :-2] - vm[:, :, 2:] + vm[:, :, :-2]) / (4.0 * dt * dx)
    return (float(np.max(np.abs(d2t))), float(np.max(np.abs(dtdx))),
            float(np.max(np.abs(d2x))))


def regularity_probe(coarse: PeriodicField, fine: PeriodicField) -> RegularityReport:
    """Second-difference sups at two resolutions; bounded ratios certify a
    grid-independent second-derivative bound, growing ratios reject it."""
    if fine.nt != 2 * coarse.nt or fine.nx != 2 * coarse.nx:
        raise ValidationError("fine field must double both grid dimensions")
    c = _second_difference_sups(coarse)
    f = _second_difference_sups(fine)
    ratios = tuple(fi / ci if ci > 0.0 else math.inf if fi > 0.0 else 1.0
                   for ci, fi in zip(c, f))
    return RegularityReport(
        d2t_sup=f[0], dtdx_sup=f[1], d2x_sup=f[2],
        coarse_d2t_sup=c[0], coarse_dtdx_sup=c[1], coarse_d2x_sup=c[2],
        refinement_ratios=ratios,
    )


# --------------------------------------------------------------------------
# Frozen-coefficient closed forms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FrozenOracle:
    """Closed-form field of the frozen-coefficient (linear) regime.

    transport: each component is its boundary signal delayed by the travel
    time from its inflow face, valid for kappa1 = kappa2 = 0 and no damping.
    reflection: the geometric bounce series over reflection products, valid
    for no damping; reduces to transport when both coefficients vanish.
    """

    mode: str
    forcing: BoundaryForcing
    equilibrium: Equilibrium
    length: float
    terms: int

    def evaluate(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        c = self.equilibrium.c_bar
        tau = self.length / c
        k1, k2 = self.forcing.kappa1, self.forcing.kappa2
        s1 = t - (self.length - x) / c
        s2 = t - x / c
        phi1 = np.zeros(np.broadcast_shapes(t.shape, x.shape))
        phi2 = np.zeros_like(phi1)
        rho = 1.0
        for k in range(self.terms):
            phi1 = phi1 + rho * (np.asarray(self.forcing.value(1, s1 - 2 * k * tau))
                                 + k1 * np.asarray(self.forcing.value(2, s1 - (2 * k + 1) * tau)))
            phi2 = phi2 + rho * (np.asarray(self.forcing.value(2, s2 - 2 * k * tau))
                                 + k2 * np.asarray(self.forcing.value(1, s2 - (2 * k + 1) * tau)))
            rho *= k1 * k2
        return phi1, phi2

    def sample_field(self, nt: int, nx: int) -> PeriodicField:
        t = np.arange(nt) * (self.forcing.t_star / nt)
        x = np.linspace(0.0, self.length, nx)
        phi1, phi2 = self.evaluate(t[:, None], x[None, :])
        return PeriodicField(np.stack([phi1, phi2]), self.forcing.t_star, self.length)


def frozen_oracle(forcing: BoundaryForcing, equilibrium: Equilibrium, mode: str,
                  length: float) -> FrozenOracle:
    """Build the closed-form evaluator; transport requires zero reflection."""
    if mode not in ("transport", "reflection"):
        raise ValidationError(f"mode must be transport or reflection, got {mode}")
    if mode == "transport" and (forcing.kappa1 != 0.0 or forcing.kappa2 != 0.0):
        raise ValidationError("transport mode requires kappa1 = kappa2 = 0")
    prod = abs(forcing.kappa1 * forcing.kappa2)
    if mode == "transport" or prod == 0.0:
        terms = 1
    else:
        amp = max(forcing.eps_measured, 1e-30)
        terms = min(2000, 1 + math.ceil(math.log(1e-14 / amp) / math.log(prod)))
    return FrozenOracle(mode=mode, forcing=forcing, equilibrium=equilibrium,
                        length=length, terms=terms)


# --------------------------------------------------------------------------
# Conservation-form residual
# --------------------------------------------------------------------------

def euler_residual(field, equilibrium: Equilibrium, damping: DampingField) -> float:
    """Sup of the conservative mass/momentum residuals in primitive form.

    Accepts a PeriodicField (time derivative by periodic differences) or a
    Snapshot (time derivative from the recorded step differences). Spatial
    derivatives are centered and the sup runs over interior nodes.
    """
    gamma = equilibrium.gamma
    if isinstance(field, PeriodicField):
        m = equilibrium.m_bar + field.values[0]
        n = equilibrium.n_bar + field.values[1]
        rho, u = primitive_from_invariants(m, n, gamma)
        mom = rho * u
        d_rho_dt = d_dt_periodic(rho, field.dt, axis=0)
        d_mom_dt = d_dt_periodic(mom, field.dt, axis=0)
        beta = damping.beta(field.t_nodes[:, None], field.x_nodes[None, :])
        dx = field.dx
    elif isinstance(field, Snapshot):
        snap = field
        nx = snap.phi.shape[1]
        m = equilibrium.m_bar + snap.phi[0]
        n = equilibrium.n_bar + snap.phi[1]
        rho, u = primitive_from_invariants(m, n, gamma)
        mom = rho * u
        c = (gamma - 1.0) * (n - m) / 2.0
        d_rho_dt = rho * (snap.dphi_dt[1] - snap.dphi_dt[0]) / c
        du_dt = snap.dphi_dt[0] + snap.dphi_dt[1]
        d_mom_dt = u * d_rho_dt + rho * du_dt
        length = damping.length
        beta = damping.beta(snap.t, np.linspace(0.0, length, nx))
        dx = length / (nx - 1)
    else:
        raise ValidationError("field must be a PeriodicField or a Snapshot")

    flux_mass = mom
    flux_mom = rho * u * u + rho ** gamma
    r1 = d_rho_dt + d_dx(flux_mass, dx)
    r2 = d_mom_dt + d_dx(flux_mom, dx) - beta * mom
    interior = (slice(None),) * (r1.ndim - 1) + (slice(1, -1),)
    return float(max(np.max(np.abs(r1[interior])), np.max(np.abs(r2[interior]))))
