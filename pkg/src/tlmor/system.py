"""LTI state-space systems, impulse responses, output-error traces, and the
finite-horizon H2 error norm.

Systems are ẋ = Ax + Bu, y = Cx with x(0) = 0 and real matrices. A reduced
system additionally carries the spectral form (D, B̃, C̃) of its A matrix,
D = S Â S⁻¹, B̃ = S B̂, C̃ = Ĉ S⁻¹, which the reduction and optimality
machinery works in.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from ._validation import as_matrix, check_horizon, check_square
from .exceptions import ValidationError

__all__ = [
    "LtiSystem",
    "ReducedSystem",
    "ErrorTrace",
    "StabilityReport",
    "check_pair",
    "validate_hurwitz",
    "impulse_response",
    "error_trace",
    "h2t_norm_squared",
    "h2t_norm_squared_of_error",
    "h2_norm_squared_of_error_infinite",
    "output_error_bound_check",
]

#: ||y(t)|| must exceed this for a relative error sample to be defined
RELATIVE_ERROR_FLOOR = 1e-12


@dataclass(frozen=True)
class LtiSystem:
    """Real state-space triple (A, B, C) with consistency checks."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    label: str = "sys"

    def __post_init__(self):
        A = check_square(as_matrix(self.A, "A", allow_complex=False), "A")
        B = as_matrix(self.B, "B", allow_complex=False)
        C = as_matrix(self.C, "C", allow_complex=False)
        if B.shape[0] != A.shape[0]:
            raise ValidationError(
                f"B has {B.shape[0]} rows but A is {A.shape[0]}x{A.shape[0]}"
            )
        if C.shape[1] != A.shape[0]:
            raise ValidationError(
                f"C has {C.shape[1]} columns but A is {A.shape[0]}x{A.shape[0]}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]


@dataclass(frozen=True)
class StabilityReport:
    max_real_part: float
    is_hurwitz: bool


def validate_hurwitz(sys):
    """Report whether all eigenvalues of A lie strictly left of the axis.

    A failing report does not raise; reduced systems may be transiently
    unstable during iteration and callers decide how to react.
    """
    max_real = float(np.linalg.eigvals(sys.A).real.max())
    return StabilityReport(max_real_part=max_real, is_hurwitz=max_real < 0.0)


@dataclass(frozen=True)
class ReducedSystem:
    """Reduced-order system with the spectral form of its A matrix attached."""

    base: LtiSystem
    spectral: linalg.SpectralDecomposition
    Btilde: np.ndarray
    Ctilde: np.ndarray

    def __post_init__(self):
        if self.Btilde.shape != (self.order, self.base.m):
            raise ValidationError(
                f"Btilde shape {self.Btilde.shape} does not match "
                f"({self.order}, {self.base.m})"
            )
        if self.Ctilde.shape != (self.base.p, self.order):
            raise ValidationError(
                f"Ctilde shape {self.Ctilde.shape} does not match "
                f"({self.base.p}, {self.order})"
            )

    @classmethod
    def from_matrices(cls, A, B, C, label="reduced"):
        """Build from (Â, B̂, Ĉ), computing the spectral form.

        Raises NonDiagonalizableError when Â is numerically defective.
        """
        base = LtiSystem(A, B, C, label=label)
        dec = linalg.eig(base.A)
        return cls(
            base=base,
            spectral=dec,
            Btilde=dec.S @ base.B,
            Ctilde=base.C @ dec.S_inv,
        )

    @property
    def order(self):
        return self.base.n

    @property
    def Ahat(self):
        return self.base.A

    @property
    def Bhat(self):
        return self.base.B

    @property
    def Chat(self):
        return self.base.C

    @property
    def eigenvalues(self):
        return self.spectral.eigenvalues

    @property
    def D(self):
        return self.spectral.D


def check_pair(full, red):
    """Validate that ``red`` can approximate ``full``: matching input/output
    counts and order not exceeding the full dimension."""
    if red.base.m != full.m or red.base.p != full.p:
        raise ValidationError(
            f"input/output mismatch: full is (m={full.m}, p={full.p}), "
            f"reduced is (m={red.base.m}, p={red.base.p})"
        )
    if red.order > full.n:
        raise ValidationError(
            f"reduced order {red.order} exceeds full order {full.n}"
        )


@dataclass(frozen=True)
class ErrorTrace:
    """Sampled impulse-response error.

    ``relative`` holds NaN at samples where the full response norm is at or
    below the floor and the relative error is therefore undefined.
    """

    times: np.ndarray
    absolute: np.ndarray
    relative: np.ndarray

    def max_absolute(self, horizon=None):
        """Largest absolute error, optionally restricted to [0, horizon]."""
        if horizon is None:
            return float(self.absolute.max())
        mask = self.times <= horizon + 1e-12
        return float(self.absolute[mask].max())


def _check_uniform_grid(times):
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size < 1:
        raise ValidationError("time grid is empty")
    if t.size == 1:
        return t, 0.0
    steps = np.diff(t)
    h = steps[0]
    if h <= 0 or np.any(np.abs(steps - h) > 1e-9 * max(h, 1e-300)):
        raise ValidationError("time grid must be uniform with positive step")
    return t, float(h)


def impulse_response(sys, times):
    """Impulse-response samples y(t) = C e^{At} B on a uniform grid.

    One matrix exponential of the step is computed and propagated,
    M_k = (e^{Ah})^k, so the cost is one expm plus a matmul per sample.

    Returns an array of shape (len(times), p, m).
    """
    t, h = _check_uniform_grid(times)
    M = np.eye(sys.n) if t[0] == 0.0 else linalg.expm(sys.A * t[0])
    E = linalg.expm(sys.A * h) if t.size > 1 else None
    out = np.empty((t.size, sys.p, sys.m))
    for k in range(t.size):
        if k:
            M = E @ M
        out[k] = sys.C @ M @ sys.B
    return out


def error_trace(full, red, times):
    """Absolute and relative impulse-response error on a time grid.

    The absolute error is the Frobenius norm of the p-by-m response
    difference at each sample; the relative error divides by the full
    response norm where that exceeds the floor and is NaN elsewhere.
    """
    check_pair(full, red)
    t, _ = _check_uniform_grid(times)
    y = impulse_response(full, t)
    yr = impulse_response(red.base, t)
    absolute = np.linalg.norm(y - yr, axis=(1, 2))
    scale = np.linalg.norm(y, axis=(1, 2))
    relative = np.full_like(absolute, np.nan)
    defined = scale > RELATIVE_ERROR_FLOOR
    relative[defined] = absolute[defined] / scale[defined]
    return ErrorTrace(times=t, absolute=absolute, relative=relative)


def h2t_norm_squared(sys, horizon):
    """Squared finite-horizon H2 norm of one system:
    integral_0^T ||C e^{As} B||_F^2 ds."""
    T = check_horizon(horizon)
    P = linalg.solve_time_limited_sylvester(sys.A, sys.A, sys.B, sys.B, T)
    return float(np.trace(sys.C @ P @ sys.C.T))


def h2t_norm_squared_of_error(full, red, horizon):
    """Squared finite-horizon H2 norm of the error system.

    Evaluates tr(C P_T C^T) + tr(Ĉ P̂_T Ĉ^T) - 2 tr(C P2_T Ĉ^T) through the
    Gramian set; tiny negative floating-point results are clamped to zero.
    """
    from . import gramians

    check_pair(full, red)
    T = check_horizon(horizon)
    gset = gramians.compute_gramian_set(full, red, T)
    full_term = float(np.trace(full.C @ gset.P_T @ full.C.T))
    red_term = float(np.trace(red.Chat @ gset.Phat_T @ red.Chat.T))
    cross_term = float(np.trace(full.C @ gset.P2_T @ red.Chat.T))
    value = full_term + red_term - 2.0 * cross_term
    scale = abs(full_term) + abs(red_term) + 2.0 * abs(cross_term)
    if value < -1e-10 * scale:
        raise ValidationError(
            f"error-norm square {value:.3e} is negative beyond roundoff "
            f"(scale {scale:.3e}); Gramian solves are inconsistent"
        )
    return max(value, 0.0)


def h2_norm_squared_of_error_infinite(full, red):
    """Squared unbounded-horizon H2 error norm via the error-system Gramian.

    Both systems must be Hurwitz for the integral to exist.
    """
    check_pair(full, red)
    for sys_, name in ((full, "full"), (red.base, "reduced")):
        rep = validate_hurwitz(sys_)
        if not rep.is_hurwitz:
            raise ValidationError(
                f"{name} system is not Hurwitz (max Re eig = "
                f"{rep.max_real_part:.3e}); unbounded-horizon norm undefined"
            )
    n, r = full.n, red.order
    Ae = np.block(
        [[full.A, np.zeros((n, r))], [np.zeros((r, n)), red.Ahat]]
    )
    Be = np.vstack([full.B, red.Bhat])
    Ce = np.hstack([full.C, -red.Chat])
    P = linalg.solve_sylvester(Ae, Ae, -Be @ Be.T)
    return max(float(np.trace(Ce @ P @ Ce.T)), 0.0)


def _zoh_discretize(A, B, h):
    """Exact zero-order-hold discretization over one step of width h."""
    n, m = B.shape
    blk = np.zeros((n + m, n + m))
    blk[:n, :n] = A * h
    blk[:n, n:] = B * h
    E = linalg.expm(blk)
    return E[:n, :n], E[:n, n:]


def output_error_bound_check(full, red, horizon, u):
    """Evaluate both sides of the worst-case output bound
    max_t ||y - ŷ||_2 <= error-norm * ||u||_L2 over [0, T].

    ``u`` is sampled on the uniform grid over [0, T] implied by its row
    count and held constant over each step (zero-order hold), which makes
    the simulated outputs exact at the sample points for that admissible
    input. Returns (lhs, rhs).
    """
    check_pair(full, red)
    T = check_horizon(horizon)
    U = as_matrix(u, "u", allow_complex=False)
    if U.shape[1] != full.m:
        raise ValidationError(f"u has {U.shape[1]} columns, expected m={full.m}")
    nsamp = U.shape[0]
    if T == 0.0 or nsamp < 2:
        return 0.0, 0.0
    h = T / (nsamp - 1)
    Ad, Bd = _zoh_discretize(full.A, full.B, h)
    Adr, Bdr = _zoh_discretize(red.Ahat, red.Bhat, h)
    x = np.zeros(full.n)
    xr = np.zeros(red.order)
    lhs = 0.0
    for k in range(nsamp):
        err = full.C @ x - red.Chat @ xr
        lhs = max(lhs, float(np.linalg.norm(err)))
        if k < nsamp - 1:
            x = Ad @ x + Bd @ U[k]
            xr = Adr @ xr + Bdr @ U[k]
    u_l2 = float(np.sqrt(h * np.sum(U[:-1] ** 2)))
    rhs = float(np.sqrt(h2t_norm_squared_of_error(full, red, T))) * u_l2
    return lhs, rhs
