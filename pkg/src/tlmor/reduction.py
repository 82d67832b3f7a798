"""Projection-based reduction by rational interpolation.

Two fixed-point iterations are provided. The conventional one (irka) builds
interpolation bases from shifted solves against the mirrored reduced
spectrum. The finite-horizon variant (tl_irka) solves the same equations
with e^{AT}/e^{DT} correction terms on the right-hand sides, targeting the
H2 norm restricted to [0, T]. Both are also wrapped as scikit-learn style
estimators whose transform/inverse_transform map full states to reduced
coordinates and back through the oblique projection.
"""

from dataclasses import dataclass
from numbers import Integral

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import linalg
from ._validation import as_matrix, check_horizon
from .exceptions import (
    DivergenceError,
    PairingError,
    ProjectionBreakdownError,
    RankDeficiencyError,
    ValidationError,
)
from .system import LtiSystem, ReducedSystem, validate_hurwitz

__all__ = [
    "ProjectionPair",
    "IterationRecord",
    "ReductionRun",
    "irka",
    "tl_irka",
    "random_initial_reduced",
    "realify_basis",
    "convergence_measure",
    "IRKA",
    "TimeLimitedIRKA",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100

#: condition number of W^T V beyond which the oblique projection is rejected
PROJECTION_CONDITION_CAP = 1e12

_REALIFY_RTOL = 1e-6


@dataclass(frozen=True)
class ProjectionPair:
    """Orthonormal basis pair (V, W) defining Pr = V (W^T V)^-1 W^T."""

    V: np.ndarray
    W: np.ndarray
    condition_number: float

    @property
    def order(self):
        return self.V.shape[1]

    def projector(self):
        """The oblique projector as a dense n x n matrix (test-sized use)."""
        M = self.W.T @ self.V
        return self.V @ np.linalg.solve(M, self.W.T)

    def reduce_state(self, x):
        """Map full states to reduced coordinates, (W^T V)^-1 W^T x.

        Accepts a single state vector or an array of rows of states.
        """
        M = self.W.T @ self.V
        x = np.asarray(x)
        if x.ndim > 1:
            return np.linalg.solve(M, (x @ self.W).T).T
        return np.linalg.solve(M, self.W.T @ x)

    def lift_state(self, xr):
        """Map reduced coordinates back to the full space, V x̂."""
        xr = np.asarray(xr)
        return xr @ self.V.T if xr.ndim > 1 else self.V @ xr


@dataclass(frozen=True)
class IterationRecord:
    eigenvalues: np.ndarray
    convergence: float
    is_hurwitz: bool


@dataclass(frozen=True)
class ReductionRun:
    """Outcome of one reduction iteration run."""

    final_reduced: ReducedSystem
    projection: ProjectionPair
    iterations: tuple
    converged: bool
    method: str
    seed: object
    horizon: object

    @property
    def degraded(self):
        """Converged or not, the final iterate is unstable."""
        return bool(self.iterations) and not self.iterations[-1].is_hurwitz

    @property
    def n_iterations(self):
        return len(self.iterations)


def convergence_measure(prev_eigs, curr_eigs):
    """Largest relative eigenvalue movement between iterations,
    max_i |l_i - l_i'| / max(|l_i'|, 1e-300) with l' the current iterate.

    Both spectra must already be in the canonical eig order, which makes
    the index-wise match stable under conjugate-pair reshuffling.
    """
    prev = np.asarray(prev_eigs).reshape(-1)
    curr = np.asarray(curr_eigs).reshape(-1)
    if prev.shape != curr.shape:
        raise ValidationError(
            f"spectra have different lengths: {prev.shape[0]} vs {curr.shape[0]}"
        )
    return float(np.max(np.abs(prev - curr) / np.maximum(np.abs(curr), 1e-300)))


def realify_basis(Vc, eigenvalues):
    """Turn a conjugate-paired complex basis into a real one, span preserved.

    Columns belonging to real eigenvalues lose their imaginary dust; each
    conjugate column pair (v, conj(v)) becomes (sqrt(2) Re v, sqrt(2) Im v).
    The pairing is read off the eigenvalue list, which must be in canonical
    order (pairs adjacent, +imaginary first).
    """
    Vc = as_matrix(Vc, "basis")
    lam = np.asarray(eigenvalues).reshape(-1)
    if Vc.shape[1] != lam.shape[0]:
        raise ValidationError(
            f"basis has {Vc.shape[1]} columns but {lam.shape[0]} eigenvalues given"
        )
    out = np.empty(Vc.shape, dtype=np.float64)
    j = 0
    while j < lam.shape[0]:
        col = Vc[:, j]
        scale = max(np.linalg.norm(col), 1e-300)
        if lam[j].imag == 0.0:
            if np.linalg.norm(np.imag(col)) > _REALIFY_RTOL * scale:
                raise PairingError(
                    f"column {j} belongs to a real eigenvalue but is not real"
                )
            out[:, j] = np.real(col)
            j += 1
            continue
        ok = (
            j + 1 < lam.shape[0]
            and lam[j].imag > 0
            and abs(lam[j + 1] - np.conj(lam[j])) <= 1e-10 * abs(lam[j])
        )
        if not ok:
            raise PairingError(
                f"eigenvalue {lam[j]} at position {j} has no adjacent conjugate partner"
            )
        if np.linalg.norm(Vc[:, j + 1] - np.conj(col)) > _REALIFY_RTOL * scale:
            raise PairingError(
                f"columns {j}, {j + 1} are not conjugates of each other"
            )
        out[:, j] = np.sqrt(2.0) * np.real(col)
        out[:, j + 1] = np.sqrt(2.0) * np.imag(col)
        j += 2
    return out


def random_initial_reduced(order, m, p, seed=0):
    """Seeded random starting point: stable diagonal A with eigenvalues
    log-uniform in [-1e2, -1e-2], dense random B and C."""
    rng = np.random.default_rng(seed)
    lam = -np.power(10.0, rng.uniform(-2.0, 2.0, size=order))
    B = rng.standard_normal((order, m))
    C = rng.standard_normal((p, order))
    return ReducedSystem.from_matrices(np.diag(np.sort(lam)), B, C, label="init")


def _finite_or_raise(arr, what):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"{what} contains non-finite entries; iteration diverged")


def _orthonormalize(X, name):
    """QR with column pivoting; rejects rank-deficient bases.

    Columns are scaled to unit norm first.  Unstable iterates produce bases
    whose columns differ by huge factors (e^{lambda T} with lambda in the
    right half-plane); that grading is not rank deficiency, so the rank test
    must not see it.  Per-column scaling leaves every span unchanged.
    """
    r = X.shape[1]
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0.0):
        rank = int(np.sum(norms > 0.0))
        raise RankDeficiencyError(f"{name} basis has effective rank {rank} < {r}")
    Q, R, _ = scipy.linalg.qr(X / norms, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > 1e-12 * max(diag[0], 1e-300)))
    if rank < r:
        raise RankDeficiencyError(
            f"{name} basis has effective rank {rank} < {r}"
        )
    return Q


def _interpolation_bases(sys, red, horizon):
    """Solve -VD - AV = BB̃^T - e^{AT} B B̃^T e^{DT} and the W counterpart
    (exponential terms absent when horizon is None), then realify."""
    lam = red.eigenvalues
    rhs_v = sys.B @ red.Btilde.T
    rhs_w = sys.C.T @ red.Ctilde
    if horizon is not None:
        with np.errstate(over="ignore"):
            eDT = np.exp(lam * horizon)
        _finite_or_raise(eDT, "e^{DT}")
        eAT = linalg.expm(sys.A * horizon)
        rhs_v = rhs_v - (eAT @ rhs_v) * eDT[None, :]
        rhs_w = rhs_w - (eAT.T @ rhs_w) * eDT[None, :]
    Vc = linalg.solve_shifted_columns(sys.A, lam, rhs_v)
    Wc = linalg.solve_shifted_columns(sys.A.T, lam, rhs_w)
    V = realify_basis(Vc, lam)
    W = realify_basis(Wc, lam)
    return V, W


def _project(sys, V, W):
    M = W.T @ V
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > PROJECTION_CONDITION_CAP:
        raise ProjectionBreakdownError(
            f"W^T V has condition number {cond:.3e}; oblique projection broke down"
        )
    Ahat = np.linalg.solve(M, W.T @ sys.A @ V)
    Bhat = np.linalg.solve(M, W.T @ sys.B)
    Chat = sys.C @ V
    return Ahat, Bhat, Chat, cond


def _iterate(sys, order, init, horizon, tol, max_iter, method, seed):
    if not isinstance(order, Integral) or order < 1:
        raise ValidationError(f"reduced order must be a positive integer, got {order}")
    if order > sys.n:
        raise ValidationError(f"reduced order {order} exceeds system order {sys.n}")
    if init.order != order:
        raise ValidationError(
            f"initial guess has order {init.order}, expected {order}"
        )
    if init.base.m != sys.m or init.base.p != sys.p:
        raise ValidationError("initial guess input/output dimensions do not match")
    if tol <= 0:
        raise ValidationError(f"tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be at least 1, got {max_iter}")

    red = init
    prev = red.eigenvalues
    records = []
    converged = False
    projection = None
    for _ in range(max_iter):
        V, W = _interpolation_bases(sys, red, horizon)
        V = _orthonormalize(V, "V")
        W = _orthonormalize(W, "W")
        Ahat, Bhat, Chat, cond = _project(sys, V, W)
        _finite_or_raise(Ahat, "reduced A")
        projection = ProjectionPair(V=V, W=W, condition_number=cond)
        red = ReducedSystem.from_matrices(Ahat, Bhat, Chat, label=method)
        measure = convergence_measure(prev, red.eigenvalues)
        records.append(
            IterationRecord(
                eigenvalues=red.eigenvalues.copy(),
                convergence=measure,
                is_hurwitz=validate_hurwitz(red.base).is_hurwitz,
            )
        )
        prev = red.eigenvalues
        if measure < tol:
            converged = True
            break
    return ReductionRun(
        final_reduced=red,
        projection=projection,
        iterations=tuple(records),
        converged=converged,
        method=method,
        seed=seed,
        horizon=horizon,
    )


def irka(sys, order, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0):
    """Conventional rational-interpolation fixed-point iteration.

    Shifts are the mirrored eigenvalues of the current reduced A and the
    tangential directions come from B̃, C̃; the loop stops when the relative
    eigenvalue movement drops below ``tol``.

    Parameters
    ----------
    sys : LtiSystem
        Full system; must be Hurwitz.
    order : int
        Reduced order r <= n.
    init : ReducedSystem or int or None
        Starting point. None draws the seeded random start; an integer is
        shorthand for a seed.
    """
    rep = validate_hurwitz(sys)
    if not rep.is_hurwitz:
        raise ValidationError(
            f"full system must be Hurwitz (max Re eig = {rep.max_real_part:.3e})"
        )
    if isinstance(init, (int, np.integer)):
        seed = int(init)
        init = None
    if init is None:
        init = random_initial_reduced(order, sys.m, sys.p, seed=seed)
    return _iterate(sys, order, init, None, tol, max_iter, "irka", seed)


def tl_irka(
    sys,
    order,
    horizon,
    init=None,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    seed=0,
):
    """Finite-horizon variant of the interpolation iteration.

    Identical loop to ``irka`` except the basis equations carry the
    -e^{AT} B B̃^T e^{DT} (resp. C-side) correction terms. By default the
    starting point is the converged conventional run on the same system,
    which is the protocol the method is intended for; pass ``init`` to
    override.
    """
    T = check_horizon(horizon, allow_zero=False)
    if isinstance(init, (int, np.integer)):
        seed = int(init)
        init = None
    if init is None:
        init = irka(sys, order, tol=tol, max_iter=max_iter, seed=seed).final_reduced
    return _iterate(sys, order, init, T, tol, max_iter, "tlirka", seed)


class _ReducerBase(BaseEstimator):
    """Shared fitted-state behavior of the two reducer estimators."""

    def _set_results(self, run):
        self.run_ = run
        self.reduced_system_ = run.final_reduced
        self.projection_ = run.projection
        self.converged_ = run.converged
        self.n_iter_ = run.n_iterations
        return self

    def transform(self, X):
        """Project full state vectors (rows) to reduced coordinates."""
        check_is_fitted(self)
        return np.atleast_2d(self.projection_.reduce_state(X))

    def inverse_transform(self, Xr):
        """Lift reduced coordinates (rows) back to the full state space."""
        check_is_fitted(self)
        return np.atleast_2d(self.projection_.lift_state(Xr))


class IRKA(_ReducerBase):
    """Estimator wrapper around :func:`irka`.

    Parameters
    ----------
    order : int
        Reduced order.
    tol : float
        Relative eigenvalue-movement stopping tolerance.
    max_iter : int
        Iteration cap; non-convergence is reported, not raised.
    random_state : int
        Seed for the random starting point.

    Attributes (after fit)
    ----------------------
    reduced_system_ : ReducedSystem
    projection_ : ProjectionPair
    run_ : ReductionRun
    converged_ : bool
    n_iter_ : int
    """

    def __init__(self, order=2, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, random_state=0):
        self.order = order
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, system, y=None, init=None):
        run = irka(
            system,
            self.order,
            init=init,
            tol=self.tol,
            max_iter=self.max_iter,
            seed=self.random_state,
        )
        return self._set_results(run)


class TimeLimitedIRKA(_ReducerBase):
    """Estimator wrapper around :func:`tl_irka`.

    Same parameters as IRKA plus the horizon; by default fitting first runs
    the conventional iteration and starts from its result.
    """

    def __init__(
        self,
        order=2,
        horizon=1.0,
        tol=DEFAULT_TOL,
        max_iter=DEFAULT_MAX_ITER,
        random_state=0,
    ):
        self.order = order
        self.horizon = horizon
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, system, y=None, init=None):
        run = tl_irka(
            system,
            self.order,
            self.horizon,
            init=init,
            tol=self.tol,
            max_iter=self.max_iter,
            seed=self.random_state,
        )
        return self._set_results(run)
