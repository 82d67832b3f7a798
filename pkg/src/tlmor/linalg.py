"""Dense linear-algebra kernels: matrix exponential, ordered eigendecomposition,
Sylvester solvers (generic, finite-horizon, shifted-columnwise), and the
Kronecker/vec utilities used by test oracles and explicit condition evaluation.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._validation import as_matrix, check_horizon, check_square
from .exceptions import (
    NonDiagonalizableError,
    SingularShiftError,
    SpectraOverlapError,
    ValidationError,
)

__all__ = [
    "SpectralDecomposition",
    "expm",
    "eig",
    "solve_sylvester",
    "solve_time_limited_sylvester",
    "solve_shifted_columns",
    "kron",
    "vec",
    "unvec",
    "trace_product",
]

#: eigenvector-matrix condition number beyond which a matrix is treated as
#: numerically defective
DIAGONALIZABILITY_CAP = 1e12

#: two eigenvalues lambda_i(A1), lambda_j(A2) with |lambda_i + lambda_j| below
#: this times (||A1|| + ||A2||) make the Sylvester operator singular
SPECTRA_OVERLAP_RTOL = 1e-12

_CONJUGATE_PAIR_RTOL = 1e-10


def expm(M):
    """Matrix exponential e^M by Pade scaling-and-squaring.

    Parameters
    ----------
    M : (n, n) array_like
        Square matrix with finite entries, real or complex.

    Returns
    -------
    (n, n) ndarray
        e^M. Real input gives real output.
    """
    A = check_square(as_matrix(M, "expm operand"), "expm operand")
    return scipy.linalg.expm(A)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Diagonalization A = S^-1 D S, stored so that D = S A S^-1.

    ``eigenvalues`` holds diag(D) in the canonical order (real part
    ascending, conjugate pairs adjacent with the +imaginary member first).
    ``S_inv`` is the matrix of canonicalized right eigenvectors; ``S`` its
    inverse. Both are complex even when all eigenvalues are real.
    """

    eigenvalues: np.ndarray
    S: np.ndarray
    S_inv: np.ndarray
    condition_number: float

    @property
    def order(self):
        return self.eigenvalues.shape[0]

    @property
    def D(self):
        """Eigenvalue matrix with exact zeros off the diagonal."""
        return np.diag(self.eigenvalues)

    def reconstruction_residual(self, A):
        """||S A S^-1 - D|| / ||A||, the defining-identity residual."""
        A = np.asarray(A)
        return float(
            np.linalg.norm(self.S @ A @ self.S_inv - self.D)
            / max(np.linalg.norm(A), np.finfo(float).tiny)
        )


def _canonical_eig_order(w):
    """Order eigenvalue indices: real part ascending, ties by imaginary part
    ascending, then conjugate pairs made adjacent with +imaginary first."""
    idx = np.lexsort((w.imag, w.real))
    sorted_w = w[idx]
    n = len(w)
    used = np.zeros(n, dtype=bool)
    order = []
    for a in range(n):
        if used[a]:
            continue
        used[a] = True
        la = sorted_w[a]
        if la.imag == 0.0:
            order.append(idx[a])
            continue
        partner = -1
        for b in range(a + 1, n):
            if used[b]:
                continue
            lb = sorted_w[b]
            if la.imag * lb.imag < 0 and abs(la - lb.conjugate()) <= _CONJUGATE_PAIR_RTOL * abs(la):
                partner = b
                break
        if partner < 0:
            order.append(idx[a])
            continue
        used[partner] = True
        plus, minus = (a, partner) if la.imag > 0 else (partner, a)
        order.append(idx[plus])
        order.append(idx[minus])
    return np.array(order, dtype=int)


def _canonicalize_columns(R):
    """Scale each column to unit 2-norm and rotate its phase so the first
    significant entry is positive real. Exact conjugate columns stay exact
    conjugates."""
    R = R.copy()
    for j in range(R.shape[1]):
        col = R[:, j]
        nrm = np.linalg.norm(col)
        if nrm == 0.0:
            continue
        anchor = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())[0]
        phase = col[anchor] / abs(col[anchor])
        R[:, j] = col / (phase * nrm)
    return R


def eig(M):
    """Canonically ordered eigendecomposition D = S M S^-1.

    Parameters
    ----------
    M : (n, n) array_like
        Square matrix, assumed diagonalizable.

    Returns
    -------
    SpectralDecomposition

    Raises
    ------
    NonDiagonalizableError
        If the eigenvector matrix has condition number above 1e12, i.e. the
        matrix is numerically defective.

    Notes
    -----
    Deterministic: identical input bits give identical output. Eigenvectors
    are normalized to unit 2-norm with the first significant entry rotated
    positive real, so the decomposition is a canonical representative of the
    diagonal-rescaling family.
    """
    A = check_square(as_matrix(M, "eig operand"), "eig operand")
    w, R = np.linalg.eig(A)
    w = w.astype(np.complex128, copy=False)
    R = R.astype(np.complex128, copy=False)
    order = _canonical_eig_order(w)
    w = w[order]
    R = _canonicalize_columns(R[:, order])
    cond = float(np.linalg.cond(R))
    if not np.isfinite(cond) or cond > DIAGONALIZABILITY_CAP:
        raise NonDiagonalizableError(
            f"matrix is numerically defective: eigenvector condition number "
            f"{cond:.3e} exceeds {DIAGONALIZABILITY_CAP:.0e}"
        )
    S = np.linalg.inv(R)
    return SpectralDecomposition(eigenvalues=w, S=S, S_inv=R, condition_number=cond)


def _check_spectra_separation(A1, A2):
    lam1 = np.linalg.eigvals(A1)
    lam2 = np.linalg.eigvals(A2)
    gap = np.abs(lam1[:, None] + lam2[None, :]).min()
    scale = np.linalg.norm(A1) + np.linalg.norm(A2)
    if gap <= SPECTRA_OVERLAP_RTOL * scale:
        raise SpectraOverlapError(
            f"spectra of the coefficient pair overlap: min |l1 + l2| = {gap:.3e} "
            f"<= {SPECTRA_OVERLAP_RTOL:.0e} * ({scale:.3e})"
        )


def solve_sylvester(A1, A2, RHS):
    """Solve the Sylvester equation A1 X + X A2^T = RHS.

    Parameters
    ----------
    A1 : (d1, d1) array_like
    A2 : (d2, d2) array_like
        Note the transpose convention: the equation involves A2^T.
    RHS : (d1, d2) array_like

    Returns
    -------
    X : (d1, d2) ndarray
        The unique solution. Unique iff the spectra of A1 and -A2 are
        disjoint; violation within tolerance raises SpectraOverlapError.

    Notes
    -----
    Bartels-Stewart via Schur decompositions of both coefficients. The
    solution equals the explicit Kronecker-form solve
    [(I kron A1) + (A2 kron I)]^-1 vec(RHS).
    """
    A1 = check_square(as_matrix(A1, "A1"), "A1")
    A2 = check_square(as_matrix(A2, "A2"), "A2")
    R = as_matrix(RHS, "RHS")
    if R.shape != (A1.shape[0], A2.shape[0]):
        raise ValidationError(
            f"RHS shape {R.shape} does not match coefficients "
            f"({A1.shape[0]}, {A2.shape[0]})"
        )
    _check_spectra_separation(A1, A2)
    if any(np.iscomplexobj(M) for M in (A1, A2, R)):
        # mixed real/complex coefficients would pair a quasi-triangular real
        # Schur factor with the complex triangular solver; promote both
        A1 = A1.astype(np.complex128, copy=False)
        A2 = A2.astype(np.complex128, copy=False)
        R = R.astype(np.complex128, copy=False)
    return scipy.linalg.solve_sylvester(A1, A2.T, R)


def solve_time_limited_sylvester(A1, A2, K1, K2, horizon):
    """Evaluate X = integral_0^T e^{A1 s} K1 K2^T e^{A2^T s} ds.

    The integral is the unique solution of

        A1 X + X A2^T = -K1 K2^T + e^{A1 T} K1 K2^T e^{A2^T T},

    provided the spectra of A1 and -A2 are disjoint, so it is computed by
    assembling that right-hand side and calling solve_sylvester.

    Parameters
    ----------
    A1 : (d1, d1), A2 : (d2, d2) array_like
    K1 : (d1, k), K2 : (d2, k) array_like
    horizon : float
        Upper integration limit T >= 0.

    Returns
    -------
    X : (d1, d2) ndarray
    """
    A1 = check_square(as_matrix(A1, "A1"), "A1")
    A2 = check_square(as_matrix(A2, "A2"), "A2")
    K1 = as_matrix(K1, "K1")
    K2 = as_matrix(K2, "K2")
    if K1.shape[0] != A1.shape[0]:
        raise ValidationError(f"K1 has {K1.shape[0]} rows, expected {A1.shape[0]}")
    if K2.shape[0] != A2.shape[0]:
        raise ValidationError(f"K2 has {K2.shape[0]} rows, expected {A2.shape[0]}")
    if K1.shape[1] != K2.shape[1]:
        raise ValidationError(
            f"K1 and K2 must have the same column count, got {K1.shape[1]} and {K2.shape[1]}"
        )
    T = check_horizon(horizon)
    if T == 0.0:
        return np.zeros((A1.shape[0], A2.shape[0]))
    K12 = K1 @ K2.T
    rhs = -K12 + expm(A1 * T) @ K12 @ expm(A2.T * T)
    return solve_sylvester(A1, A2, rhs)


def solve_shifted_columns(A, D, RHS):
    """Solve -X D - A X = RHS for diagonal D, one column at a time.

    Column i satisfies (-A - d_i I) x_i = rhs_i, each with its own dense
    factorization, so the columns are independent. The assembled X solves
    the full Sylvester equation.

    Parameters
    ----------
    A : (n, n) array_like
    D : (r, r) array_like diagonal, or length-r 1-D array of its diagonal
    RHS : (n, r) array_like

    Returns
    -------
    X : (n, r) ndarray, complex when D or RHS is complex.

    Raises
    ------
    SingularShiftError
        If some -d_i lies in the spectrum of A within tolerance.
    """
    A = check_square(as_matrix(A, "A"), "A")
    D = np.asarray(D)
    if D.ndim == 2:
        D = check_square(as_matrix(D, "D"), "D")
        if np.any(D[~np.eye(D.shape[0], dtype=bool)] != 0):
            raise ValidationError("D must be diagonal")
        d = np.diag(D)
    else:
        d = np.atleast_1d(D)
    R = as_matrix(RHS, "RHS")
    if R.shape != (A.shape[0], d.shape[0]):
        raise ValidationError(
            f"RHS shape {R.shape} does not match (n, r) = ({A.shape[0]}, {d.shape[0]})"
        )
    lam = np.linalg.eigvals(A)
    scale = np.linalg.norm(A) + np.abs(d).max()
    n = A.shape[0]
    X = np.empty((n, d.shape[0]), dtype=np.result_type(A, d, R))
    for i, di in enumerate(d):
        if np.abs(lam + di).min() <= SPECTRA_OVERLAP_RTOL * scale:
            raise SingularShiftError(
                f"shift d[{i}] = {di} collides with the spectrum of -A"
            )
        X[:, i] = np.linalg.solve(-A - di * np.eye(n), R[:, i])
    return X


def kron(X, Y):
    """Kronecker product of two matrices."""
    return np.kron(as_matrix(X, "X"), as_matrix(Y, "Y"))


def vec(X):
    """Column-stacking vectorization: vec(X)[i + j*rows] = X[i, j]."""
    X = as_matrix(X, "X")
    return X.reshape(-1, order="F")


def unvec(x, rows, cols):
    """Inverse of vec for a rows-by-cols matrix."""
    x = np.asarray(x).reshape(-1)
    if x.shape[0] != rows * cols:
        raise ValidationError(f"vector of length {x.shape[0]} is not {rows}x{cols}")
    return x.reshape((rows, cols), order="F")


def trace_product(X, Y, Z):
    """tr(X Y Z) evaluated through the vectorization identity
    tr(X Y Z) = vec(X^T)^T (I kron Y) vec(Z); test-oracle sized inputs only."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    Z = as_matrix(Z, "Z")
    if X.shape[1] != Y.shape[0] or Y.shape[1] != Z.shape[0] or Z.shape[1] != X.shape[0]:
        raise ValidationError(
            f"tr(XYZ) needs a cyclic shape match, got {X.shape}, {Y.shape}, {Z.shape}"
        )
    I = np.eye(X.shape[0])
    return vec(X.T) @ np.kron(I, Y) @ vec(Z)
