"""Time-periodic solutions of the damped 1-D isentropic Euler equations.

Subsonic gas flow with linear friction in a bounded duct, driven by
dissipative time-periodic boundary reflections. The package computes the
periodic attractor by a characteristic-based linearized fixed-point
iteration, solves the forward initial-boundary value problem with a
semi-Lagrangian scheme, and verifies contraction, stability and regularity
claims against closed-form oracles and grid-refinement checks.
"""

from .errors import (
    AdmissibilityError,
    CFLViolationError,
    InsufficientDataError,
    MaxIterationsError,
    NonContractionError,
    NonConvergenceError,
    PredictorCorrectorError,
    ValidationError,
)
from .model import (
    BoundaryForcing,
    DampingField,
    Equilibrium,
    GasState,
    RiemannPair,
    boundary_c1_norm,
    eigenvalues,
    make_equilibrium,
    nu,
    riemann_from_state,
    sound_speed,
    state_from_riemann,
    validate_hypothesis,
)
from .characteristics import (
    CharPath,
    PeriodicField,
    interpolate,
    path_integrate,
    trace,
    weight_F,
)
from .periodic import (
    ConvergenceReport,
    IterationConfig,
    init_zero,
    iterate_once,
    pde_residual,
    solve_periodic,
    sweep_family1,
    sweep_family2,
)

__version__ = "0.1.0"
