"""Input validation helpers shared across the package."""

import numpy as np

from .exceptions import ValidationError

__all__ = ["as_matrix", "check_square", "check_finite", "check_horizon"]


def as_matrix(M, name="matrix", allow_complex=True, copy=False):
    """Coerce ``M`` to a 2-D floating ndarray and validate its entries.

    1-D input is treated as a single column. Raises ValidationError on
    non-finite entries, empty dimensions, or (when ``allow_complex`` is
    False) complex input with a nonzero imaginary part.
    """
    A = np.array(M, copy=copy) if copy else np.asarray(M)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got ndim={A.ndim}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValidationError(f"{name} must be nonempty, got shape {A.shape}")
    if np.iscomplexobj(A):
        if not allow_complex:
            if np.any(A.imag != 0):
                raise ValidationError(f"{name} must be real, got complex entries")
            A = A.real
        A = A.astype(np.complex128, copy=False)
    else:
        A = A.astype(np.float64, copy=False)
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} contains non-finite entries")
    return A


def check_square(M, name="matrix"):
    if M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {M.shape}")
    return M


def check_finite(M, name="matrix"):
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} contains non-finite entries")
    return M


def check_horizon(horizon, allow_zero=True):
    t = float(horizon)
    if not np.isfinite(t):
        raise ValidationError("horizon must be finite")
    if t < 0 or (t == 0 and not allow_zero):
        bound = "nonnegative" if allow_zero else "positive"
        raise ValidationError(f"horizon must be {bound}, got {t}")
    return t
