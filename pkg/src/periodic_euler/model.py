"""Physical model layer for the damped subsonic gamma-law gas.

Variables live either in primitive form (density rho > 0, velocity u) or in
Riemann-invariant form (m, n), which diagonalizes the 2x2 system. All speeds
derive from the sound speed c = sqrt(gamma) * rho^((gamma-1)/2); the pressure
law is p = rho^gamma with unit pressure coefficient.

The module also hosts the two coefficient objects every solver consumes:

* DampingField  -- the non-positive, time-periodic friction coefficient
  beta(t, x) with certified lower/derivative bounds, plus a grid validator.
* BoundaryForcing -- the periodic boundary signals and reflection
  coefficients (|kappa| < 1), with measured and certified C1 norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AdmissibilityError, ValidationError

__all__ = [
    "GasState",
    "RiemannPair",
    "Equilibrium",
    "DampingField",
    "BoundaryForcing",
    "HypothesisReport",
    "C1Norm",
    "sound_speed",
    "riemann_from_state",
    "state_from_riemann",
    "invariants_from_primitive",
    "primitive_from_invariants",
    "eigenvalues",
    "lambda_coefficients",
    "perturbation_eigenvalues",
    "nu",
    "make_equilibrium",
    "validate_hypothesis",
    "boundary_c1_norm",
]


# --------------------------------------------------------------------------
# State containers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GasState:
    """Primitive state (rho, u); rho must be positive."""

    rho: float
    u: float

    def __post_init__(self):
        if not (self.rho > 0.0) or not math.isfinite(self.rho):
            raise ValidationError(f"density must be positive and finite, got {self.rho}")
        if not math.isfinite(self.u):
            raise ValidationError(f"velocity must be finite, got {self.u}")


@dataclass(frozen=True)
class RiemannPair:
    """Riemann invariants (m, n); n > m is equivalent to rho > 0."""

    m: float
    n: float

    def __post_init__(self):
        if not (self.n > self.m):
            raise ValidationError(
                f"invariants require n > m (vacuum otherwise), got m={self.m}, n={self.n}"
            )


# --------------------------------------------------------------------------
# Transforms and characteristic speeds
# --------------------------------------------------------------------------

def sound_speed(rho, gamma: float):
    """c = sqrt(gamma) * rho^((gamma-1)/2) for rho > 0, gamma > 1."""
    rho_arr = np.asarray(rho, dtype=float)
    if gamma <= 1.0:
        raise ValidationError(f"adiabatic exponent must exceed 1, got {gamma}")
    if np.any(rho_arr <= 0.0):
        raise ValidationError("density must be positive")
    out = math.sqrt(gamma) * rho_arr ** ((gamma - 1.0) / 2.0)
    return float(out) if np.isscalar(rho) else out


def riemann_from_state(state: GasState, gamma: float) -> RiemannPair:
    """Invariants m = (u - 2c/(gamma-1))/2, n = (u + 2c/(gamma-1))/2."""
    c = sound_speed(state.rho, gamma)
    spread = 2.0 * c / (gamma - 1.0)
    return RiemannPair(0.5 * (state.u - spread), 0.5 * (state.u + spread))


def state_from_riemann(pair: RiemannPair, gamma: float) -> GasState:
    """Exact inverse: u = m + n, c = (gamma-1)(n-m)/2, rho = (c^2/gamma)^(1/(gamma-1))."""
    if gamma <= 1.0:
        raise ValidationError(f"adiabatic exponent must exceed 1, got {gamma}")
    c = (gamma - 1.0) * (pair.n - pair.m) / 2.0
    rho = (c * c / gamma) ** (1.0 / (gamma - 1.0))
    return GasState(rho, pair.m + pair.n)


def invariants_from_primitive(rho, u, gamma: float):
    """Array version of riemann_from_state; returns (m, n)."""
    c = sound_speed(rho, gamma)
    spread = 2.0 * c / (gamma - 1.0)
    u = np.asarray(u, dtype=float)
    return 0.5 * (u - spread), 0.5 * (u + spread)


def primitive_from_invariants(m, n, gamma: float):
    """Array version of state_from_riemann; returns (rho, u)."""
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(n <= m):
        raise ValidationError("invariants require n > m everywhere")
    c = (gamma - 1.0) * (n - m) / 2.0
    rho = (c * c / gamma) ** (1.0 / (gamma - 1.0))
    return rho, m + n


def lambda_coefficients(gamma: float) -> tuple[float, float]:
    """Coefficients (a, b) of the linear eigenvalue formulas.

    lambda1 = a*m + b*n and lambda2 = b*m + a*n with a = (gamma+1)/2,
    b = (3-gamma)/2; both are linear in the invariants.
    """
    return (gamma + 1.0) / 2.0, (3.0 - gamma) / 2.0


def eigenvalues(pair: RiemannPair, gamma: float) -> tuple[float, float]:
    """Characteristic speeds (lambda1, lambda2) = (u - c, u + c)."""
    a, b = lambda_coefficients(gamma)
    return a * pair.m + b * pair.n, b * pair.m + a * pair.n


def perturbation_eigenvalues(phi1, phi2, equilibrium: "Equilibrium"):
    """Speeds at the perturbed state (m_bar + phi1, n_bar + phi2), vectorized."""
    a, b = lambda_coefficients(equilibrium.gamma)
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    return (-equilibrium.c_bar + a * phi1 + b * phi2,
            equilibrium.c_bar + b * phi1 + a * phi2)


def nu(pair: RiemannPair, gamma: float, margin: float = 0.0) -> tuple[float, float]:
    """Reciprocal speeds (1/lambda1, 1/lambda2) for subsonic states.

    Raises AdmissibilityError unless lambda1 < -margin and lambda2 > margin,
    which keeps both reciprocals well conditioned.
    """
    lam1, lam2 = eigenvalues(pair, gamma)
    if not (lam1 < -margin and lam2 > margin):
        raise AdmissibilityError(
            f"state is not subsonic within margin {margin}: lambda=({lam1}, {lam2})"
        )
    return 1.0 / lam1, 1.0 / lam2


# --------------------------------------------------------------------------
# Equilibrium and the admissible neighborhood
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Equilibrium:
    """Background state and the sup-norm ball of admissible perturbations.

    a0 bounds |1/lambda_i| over the closed ball of radius neighborhood_radius
    around the zero perturbation; it is attained at a ball corner because the
    eigenvalues are linear in (phi1, phi2).
    """

    rho_bar: float
    gamma: float
    m_bar: float
    n_bar: float
    c_bar: float
    a0: float
    neighborhood_radius: float

    @property
    def sonic_margin(self) -> float:
        """Eigenvalues closer to zero than this count as sonic."""
        return 1e-6 * self.c_bar

    def speed_deviation(self, radius: float) -> float:
        """Largest |lambda_i - lambda_i(Phi)| over the sup-ball of given radius."""
        a, b = lambda_coefficients(self.gamma)
        return radius * (abs(a) + abs(b))

    def contains(self, phi1, phi2, slack: float = 0.0) -> bool:
        """Whether all perturbation samples lie in the admissible ball."""
        r = self.neighborhood_radius + slack
        return bool(np.max(np.abs(phi1), initial=0.0) <= r
                    and np.max(np.abs(phi2), initial=0.0) <= r)


def make_equilibrium(rho_bar: float, gamma: float, radius: float) -> Equilibrium:
    """Build the background state with ball radius checked against sonic loss.

    The ball is rejected as soon as some corner state would have
    min(|lambda1|, |lambda2|) at or below the sonic margin.
    """
    if rho_bar <= 0.0:
        raise ValidationError(f"background density must be positive, got {rho_bar}")
    if gamma <= 1.0:
        raise ValidationError(f"adiabatic exponent must exceed 1, got {gamma}")
    if radius < 0.0:
        raise ValidationError(f"neighborhood radius must be non-negative, got {radius}")
    c_bar = sound_speed(rho_bar, gamma)
    n_bar = c_bar / (gamma - 1.0)
    a, b = lambda_coefficients(gamma)
    deviation = radius * (abs(a) + abs(b))
    margin = 1e-6 * c_bar
    if c_bar - deviation <= margin:
        raise ValidationError(
            f"radius {radius} admits sonic states: min |lambda| over the ball is "
            f"{c_bar - deviation:.3e} (sound speed {c_bar:.6f})"
        )
    return Equilibrium(
        rho_bar=rho_bar,
        gamma=gamma,
        m_bar=-n_bar,
        n_bar=n_bar,
        c_bar=c_bar,
        a0=1.0 / (c_bar - deviation),
        neighborhood_radius=radius,
    )


# --------------------------------------------------------------------------
# Periodic signals (shared by forcing and damping profiles)
# --------------------------------------------------------------------------

def _wrap_phase(t, t_star: float):
    """Fractional phase t/T in [0, 1); modulo keeps periodicity exact."""
    return np.mod(np.asarray(t, dtype=float), t_star) / t_star


@dataclass(frozen=True)
class FourierSignal:
    """Truncated Fourier series mean + sum_k a_k cos + b_k sin, period t_star."""

    t_star: float
    mean: float = 0.0
    coeffs: tuple[tuple[float, float], ...] = ()

    def value(self, t):
        phase = 2.0 * math.pi * _wrap_phase(t, self.t_star)
        out = np.full_like(phase, self.mean)
        for k, (a, b) in enumerate(self.coeffs, start=1):
            out += a * np.cos(k * phase) + b * np.sin(k * phase)
        return out

    def derivative(self, t):
        phase = 2.0 * math.pi * _wrap_phase(t, self.t_star)
        out = np.zeros_like(phase)
        for k, (a, b) in enumerate(self.coeffs, start=1):
            w = 2.0 * math.pi * k / self.t_star
            out += w * (-a * np.sin(k * phase) + b * np.cos(k * phase))
        return out

    def c1_coefficient_bound(self) -> float:
        """Certified sup bound on max(|f|, |f'|): sum (|a|+|b|)(1 + 2 pi k / T)."""
        total = abs(self.mean)
        for k, (a, b) in enumerate(self.coeffs, start=1):
            total += (abs(a) + abs(b)) * (1.0 + 2.0 * math.pi * k / self.t_star)
        return total

    def amplitude_bound(self) -> float:
        return abs(self.mean) + sum(abs(a) + abs(b) for a, b in self.coeffs)

    def derivative_bound(self) -> float:
        return sum((abs(a) + abs(b)) * 2.0 * math.pi * k / self.t_star
                   for k, (a, b) in enumerate(self.coeffs, start=1))


@dataclass(frozen=True)
class CallableSignal:
    """Periodic signal given by a callable on one period; derivative optional.

    Exists for test profiles outside the Fourier family (for example the
    regularity negative control); no certified coefficient bound is available.
    """

    t_star: float
    fn: Callable
    dfn: Callable | None = None

    def value(self, t):
        return np.asarray(self.fn(np.mod(np.asarray(t, dtype=float), self.t_star)),
                          dtype=float)

    def derivative(self, t):
        tw = np.mod(np.asarray(t, dtype=float), self.t_star)
        if self.dfn is not None:
            return np.asarray(self.dfn(tw), dtype=float)
        h = 1e-6 * self.t_star
        return (self.value(tw + h) - self.value(tw - h)) / (2.0 * h)

    def c1_coefficient_bound(self) -> float:
        return math.inf


# --------------------------------------------------------------------------
# Damping coefficient
# --------------------------------------------------------------------------

_DAMPING_KINDS = ("constant", "separable_periodic", "tabulated")


@dataclass(frozen=True)
class DampingField:
    """Non-positive T*-periodic friction coefficient beta(t, x) on [0, L].

    Three representations:

    * constant            beta == beta0
    * separable_periodic  beta0 * g(t) * h(x), g a Fourier profile with unit
                          mean, h a polynomial; periodic in t by construction
    * tabulated           node table, periodic cubic in t / clamped cubic in x

    beta_star is a certified lower bound (from coefficient bounds for the
    analytic kinds, from node values with an overshoot cushion for tables);
    deriv_bound certifies both |d beta/dt| and |d beta/dx|.
    """

    kind: str
    t_star: float
    length: float
    beta0: float
    beta_star: float
    deriv_bound: float
    temporal: FourierSignal | None = None
    spatial_coeffs: tuple[float, ...] = (1.0,)
    table: np.ndarray | None = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, beta0: float, t_star: float, length: float) -> "DampingField":
        cls._check_common(beta0, t_star, length)
        return cls(kind="constant", t_star=t_star, length=length, beta0=beta0,
                   beta_star=beta0, deriv_bound=0.0)

    @classmethod
    def separable(cls, beta0: float, temporal_coeffs: Sequence[Sequence[float]],
                  spatial_coeffs: Sequence[float], t_star: float,
                  length: float) -> "DampingField":
        cls._check_common(beta0, t_star, length)
        temporal = FourierSignal(t_star=t_star, mean=1.0,
                                 coeffs=tuple((float(a), float(b))
                                              for a, b in temporal_coeffs))
        spatial = tuple(float(c) for c in spatial_coeffs) or (1.0,)
        # the product profile must stay non-negative so beta keeps its sign
        ts = np.linspace(0.0, t_star, 257)
        xs = np.linspace(0.0, length, 129)
        g = temporal.value(ts)
        h = _polyval(spatial, xs)
        if np.min(np.outer(g, h)) < -1e-12:
            raise ValidationError(
                "separable profile changes sign; beta would become positive")
        g_max = temporal.amplitude_bound()
        h_max = sum(abs(c) * length ** j for j, c in enumerate(spatial))
        g_deriv = temporal.derivative_bound()
        h_deriv = sum(j * abs(c) * length ** (j - 1)
                      for j, c in enumerate(spatial) if j > 0)
        return cls(kind="separable_periodic", t_star=t_star, length=length,
                   beta0=beta0, beta_star=beta0 * g_max * h_max,
                   deriv_bound=abs(beta0) * max(h_max * g_deriv, g_max * h_deriv),
                   temporal=temporal, spatial_coeffs=spatial)

    @classmethod
    def tabulated(cls, values, t_star: float, length: float) -> "DampingField":
        table = np.asarray(values, dtype=float)
        if table.ndim != 2 or table.shape[0] < 4 or table.shape[1] < 4:
            raise ValidationError("tabulated damping needs a (>=4, >=4) value grid")
        if np.any(table > 0.0) or not np.all(np.isfinite(table)):
            raise ValidationError("tabulated damping values must be finite and <= 0")
        cls._check_common(float(np.min(table)), t_star, length)
        osc = float(np.max(table) - np.min(table))
        beta_star = float(np.min(table)) - 0.25 * osc - 1e-12
        field = cls(kind="tabulated", t_star=t_star, length=length,
                    beta0=float(np.min(table)), beta_star=beta_star,
                    deriv_bound=0.0, table=table)
        # measured derivative bounds with an interpolation cushion
        ts = np.linspace(0.0, t_star, 4 * table.shape[0] + 1)
        xs = np.linspace(0.0, length, 4 * table.shape[1] + 1)
        dt = (field.beta(ts[:, None] + 1e-6 * t_star, xs[None, :])
              - field.beta(ts[:, None] - 1e-6 * t_star, xs[None, :])) / (2e-6 * t_star)
        hx = 1e-6 * length
        xc = np.clip(xs, hx, length - hx)
        dx = (field.beta(ts[:, None], xc[None, :] + hx)
              - field.beta(ts[:, None], xc[None, :] - hx)) / (2.0 * hx)
        bound = 1.25 * max(float(np.max(np.abs(dt))), float(np.max(np.abs(dx)))) + 1e-12
        object.__setattr__(field, "deriv_bound", bound)
        return field

    @staticmethod
    def _check_common(beta0: float, t_star: float, length: float):
        if beta0 > 0.0:
            raise ValidationError(f"damping amplitude must be <= 0, got {beta0}")
        if t_star <= 0.0:
            raise ValidationError(f"period must be positive, got {t_star}")
        if length <= 0.0:
            raise ValidationError(f"domain length must be positive, got {length}")

    # -- evaluation ---------------------------------------------------------

    def beta(self, t, x):
        """beta(t, x), broadcasting over array arguments."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(np.float64(self.beta0), np.broadcast_shapes(t.shape, x.shape)).copy()
        if self.kind == "separable_periodic":
            return self.beta0 * self.temporal.value(t) * _polyval(self.spatial_coeffs, x)
        return self._table_eval(t, x, derivative=False)

    def dbeta_dt(self, t, x):
        """Partial time derivative of beta, broadcasting like beta()."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.zeros(np.broadcast_shapes(t.shape, x.shape))
        if self.kind == "separable_periodic":
            return self.beta0 * self.temporal.derivative(t) * _polyval(self.spatial_coeffs, x)
        return self._table_eval(t, x, derivative=True)

    def _table_eval(self, t, x, derivative: bool):
        from .characteristics import _lagrange_weights_periodic, _lagrange_weights_clamped

        mt, mx = self.table.shape
        t, x = np.broadcast_arrays(t, x)
        shape = t.shape
        t = t.ravel()
        x = x.ravel()
        idx_t, wt, dwt = _lagrange_weights_periodic(t, self.t_star, mt)
        idx_x, wx, _ = _lagrange_weights_clamped(x, self.length, mx)
        vals = self.table[idx_t[:, :, None], idx_x[:, None, :]]  # (M, 4, 4)
        weight_t = dwt if derivative else wt
        out = np.einsum("mij,mi,mj->m", vals, weight_t, wx)
        return out.reshape(shape)


def _polyval(coeffs: Sequence[float], x):
    """Polynomial sum c_j x^j with low-order-first coefficients."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x + c
    return out


@dataclass(frozen=True)
class HypothesisReport:
    """Grid validation outcome for a DampingField."""

    passed: bool
    violations: tuple[str, ...]
    max_beta: float
    min_beta: float
    max_dt_beta: float
    max_dx_beta: float
    periodicity_error: float
    beta_star: float
    deriv_bound: float


def validate_hypothesis(field: DampingField, grid_density: int = 128) -> HypothesisReport:
    """Check sign, lower bound, derivative bounds and exact periodicity.

    Returns a failed report (never raises) listing violated clauses by name:
    nonpositive, lower_bound, time_derivative_bound, space_derivative_bound,
    periodicity.
    """
    if grid_density < 2:
        raise ValidationError("grid_density must be at least 2 in each direction")
    ts = np.linspace(0.0, field.t_star, grid_density, endpoint=False)
    xs = np.linspace(0.0, field.length, grid_density)
    tt = ts[:, None]
    xx = xs[None, :]
    values = field.beta(tt, xx)

    dt = field.t_star / grid_density
    d_t = (field.beta(tt + dt, xx) - field.beta(tt - dt, xx)) / (2.0 * dt)
    dx = xs[1] - xs[0]
    d_x = (values[:, 2:] - values[:, :-2]) / (2.0 * dx)

    scale = max(1.0, abs(field.beta0))
    periodicity = float(np.max(np.abs(field.beta(tt + field.t_star, xx) - values)))
    slack = 1e-9 + 0.05 * field.deriv_bound

    violations = []
    if np.max(values) > 1e-12 * scale:
        violations.append("nonpositive")
    if np.min(values) < field.beta_star - 1e-12 * scale:
        violations.append("lower_bound")
    if np.max(np.abs(d_t)) > field.deriv_bound + slack:
        violations.append("time_derivative_bound")
    if d_x.size and np.max(np.abs(d_x)) > field.deriv_bound + slack:
        violations.append("space_derivative_bound")
    if periodicity > 1e-12 * scale:
        violations.append("periodicity")

    return HypothesisReport(
        passed=not violations,
        violations=tuple(violations),
        max_beta=float(np.max(values)),
        min_beta=float(np.min(values)),
        max_dt_beta=float(np.max(np.abs(d_t))),
        max_dx_beta=float(np.max(np.abs(d_x))) if d_x.size else 0.0,
        periodicity_error=periodicity,
        beta_star=field.beta_star,
        deriv_bound=field.deriv_bound,
    )


# --------------------------------------------------------------------------
# Boundary forcing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryForcing:
    """Periodic boundary signals with reflection coefficients |kappa_i| < 1.

    Signal 1 drives the leftgoing component at x = L, signal 2 the rightgoing
    component at x = 0. eps_measured is the sampled C1 norm over one period,
    maximized over both signals.
    """

    t_star: float
    kappa1: float
    kappa2: float
    signals: tuple
    eps_measured: float = 0.0

    def __post_init__(self):
        if self.t_star <= 0.0:
            raise ValidationError(f"period must be positive, got {self.t_star}")
        for name, k in (("kappa1", self.kappa1), ("kappa2", self.kappa2)):
            if not abs(k) < 1.0:
                raise ValidationError(
                    f"dissipative boundary needs |{name}| < 1, got {k}")

    @classmethod
    def fourier(cls, t_star: float, kappa1: float, kappa2: float,
                phi1_coeffs: Sequence[Sequence[float]] = (),
                phi2_coeffs: Sequence[Sequence[float]] = (),
                phi1_mean: float = 0.0, phi2_mean: float = 0.0) -> "BoundaryForcing":
        sig1 = FourierSignal(t_star, phi1_mean,
                             tuple((float(a), float(b)) for a, b in phi1_coeffs))
        sig2 = FourierSignal(t_star, phi2_mean,
                             tuple((float(a), float(b)) for a, b in phi2_coeffs))
        forcing = cls(t_star, kappa1, kappa2, (sig1, sig2))
        object.__setattr__(forcing, "eps_measured", boundary_c1_norm(forcing).sampled)
        return forcing

    @classmethod
    def from_callables(cls, t_star: float, kappa1: float, kappa2: float,
                       fn1: Callable, fn2: Callable,
                       dfn1: Callable | None = None,
                       dfn2: Callable | None = None) -> "BoundaryForcing":
        forcing = cls(t_star, kappa1, kappa2,
                      (CallableSignal(t_star, fn1, dfn1), CallableSignal(t_star, fn2, dfn2)))
        object.__setattr__(forcing, "eps_measured", boundary_c1_norm(forcing).sampled)
        return forcing

    def value(self, i: int, t):
        """Signal i in {1, 2} evaluated at time t (periodic extension)."""
        return self.signals[i - 1].value(t)

    def derivative(self, i: int, t):
        return self.signals[i - 1].derivative(t)


@dataclass(frozen=True)
class C1Norm:
    sampled: float
    certified: float


def boundary_c1_norm(forcing: BoundaryForcing, samples: int = 512) -> C1Norm:
    """Sampled and certified C1 norms of the boundary signals.

    The sampled value is max(sup|f|, sup|f'|) over a dense period grid; the
    certified value comes from the Fourier coefficient bound and always
    dominates the sampled one (infinite for callable signals).
    """
    if samples < 64:
        raise ValidationError(f"need at least 64 samples, got {samples}")
    ts = np.linspace(0.0, forcing.t_star, samples, endpoint=False)
    sampled = 0.0
    certified = 0.0
    for sig in forcing.signals:
        sampled = max(sampled,
                      float(np.max(np.abs(sig.value(ts)))),
                      float(np.max(np.abs(sig.derivative(ts)))))
        certified = max(certified, sig.c1_coefficient_bound())
    return C1Norm(sampled=sampled, certified=certified)
