"""Time-limited H2-optimal model order reduction for dense LTI systems.

The package reduces ẋ = Ax + Bu, y = Cx to a small system of order r so that
the output error over a finite horizon [0, T] is small in the time-limited
H2 norm. It provides the finite-horizon Gramian machinery, a conventional
IRKA baseline, a time-limited IRKA-type iteration, and evaluators that
quantify how far a reduced system is from first-order optimality.
"""

from .datasets import (
    RunConfig,
    SystemBundle,
    generate_heat_system,
    load_matrix_market_triple,
)
from .exceptions import (
    DivergenceError,
    MatrixMarketParseError,
    NonDiagonalizableError,
    NotFittedError,
    PairingError,
    ProjectionBreakdownError,
    RankDeficiencyError,
    SingularShiftError,
    SizeCapError,
    SpectraOverlapError,
    ValidationError,
)
from .gramians import compute_gramian_set, trace_identities
from .optimality import (
    OptimalityReport,
    derivative_check,
    kronecker_conditions,
    optimality_report,
    projection_deviations,
    condition_metrics,
    wilson_residuals,
)
from .reduction import IRKA, TimeLimitedIRKA, irka, tl_irka
from .system import (
    LtiSystem,
    ReducedSystem,
    error_trace,
    h2t_norm_squared,
    h2t_norm_squared_of_error,
    impulse_response,
    output_error_bound_check,
    validate_hurwitz,
)

__version__ = "0.1.0"

__all__ = [
    "IRKA",
    "LtiSystem",
    "OptimalityReport",
    "ReducedSystem",
    "RunConfig",
    "SystemBundle",
    "TimeLimitedIRKA",
    "compute_gramian_set",
    "derivative_check",
    "error_trace",
    "generate_heat_system",
    "h2t_norm_squared",
    "h2t_norm_squared_of_error",
    "impulse_response",
    "irka",
    "kronecker_conditions",
    "load_matrix_market_triple",
    "optimality_report",
    "output_error_bound_check",
    "projection_deviations",
    "condition_metrics",
    "tl_irka",
    "trace_identities",
    "validate_hurwitz",
    "wilson_residuals",
    "DivergenceError",
    "MatrixMarketParseError",
    "NonDiagonalizableError",
    "NotFittedError",
    "PairingError",
    "ProjectionBreakdownError",
    "RankDeficiencyError",
    "SingularShiftError",
    "SizeCapError",
    "SpectraOverlapError",
    "ValidationError",
    "__version__",
]
