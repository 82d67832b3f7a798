"""Exception types raised by the numerical kernels and drivers."""

__all__ = [
    "ValidationError",
    "NonDiagonalizableError",
    "SpectraOverlapError",
    "SingularShiftError",
    "RankDeficiencyError",
    "ProjectionBreakdownError",
    "DivergenceError",
    "PairingError",
    "SizeCapError",
    "MatrixMarketParseError",
    "NotFittedError",
]


class ValidationError(ValueError):
    """An input failed a structural precondition (shape, finiteness, range)."""


class NonDiagonalizableError(ValueError):
    """Eigendecomposition rejected: eigenvector matrix too ill-conditioned."""


class SpectraOverlapError(ValueError):
    """Sylvester operator is (numerically) singular: spectra of the
    coefficient pair overlap within tolerance."""


class SingularShiftError(ValueError):
    """A shifted solve (-A - d*I) x = rhs hit a shift d in the spectrum of -A."""


class RankDeficiencyError(ValueError):
    """Orthonormalization found fewer independent directions than requested."""


class ProjectionBreakdownError(ValueError):
    """W^T V is numerically singular; the oblique projector is undefined."""


class DivergenceError(ValueError):
    """An iteration produced non-finite quantities and cannot continue."""


class PairingError(ValueError):
    """Complex basis columns could not be grouped into conjugate pairs."""


class SizeCapError(ValueError):
    """A test-only explicit (Kronecker) path was asked to exceed its size cap."""


class MatrixMarketParseError(ValueError):
    """A Matrix Market file failed to parse.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where = f" [{where}]"
        super().__init__(f"{message}{where}")


try:
    from sklearn.exceptions import NotFittedError
except ImportError:  # pragma: no cover - scikit-learn is a hard dependency
    class NotFittedError(ValueError, AttributeError):
        """Estimator used before fit."""
