"""Finite-horizon Gramians of a (full, reduced) system pair, their
spectral-form transforms, and the unbounded-horizon Gramians of the
diagonalized reduced system.

All six members of a GramianSet are integrals over [0, T] of exponential
outer products; each is obtained from one Sylvester solve whose right-hand
side carries the e^{AT}-type boundary terms.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from ._validation import check_horizon
from .exceptions import SpectraOverlapError
from .system import check_pair

__all__ = [
    "GramianSet",
    "TransformedGramians",
    "InfiniteGramians",
    "compute_gramian_set",
    "trace_identities",
    "transformed_gramians",
    "compute_infinite_gramians",
]


@dataclass(frozen=True)
class GramianSet:
    """The six Gramians of a (full, reduced) pair over [0, T].

    P_T    (n x n): integral of e^{As} B B^T e^{A^T s}
    P2_T   (n x r): integral of e^{As} B B̂^T e^{Â^T s}
    Phat_T (r x r): integral of e^{Âs} B̂ B̂^T e^{Â^T s}
    Q_T    (n x n): integral of e^{A^T s} C^T C e^{As}
    Q2_T   (r x n): integral of e^{Â^T s} Ĉ^T C e^{As}
    Qhat_T (r x r): integral of e^{Â^T s} Ĉ^T Ĉ e^{As}
    """

    P_T: np.ndarray
    P2_T: np.ndarray
    Phat_T: np.ndarray
    Q_T: np.ndarray
    Q2_T: np.ndarray
    Qhat_T: np.ndarray
    horizon: float


@dataclass(frozen=True)
class TransformedGramians:
    """GramianSet members carried into the spectral form of the reduced
    system: Ptilde_T = S P̂ S^T, Ptilde2_T = P2 S^T, Qtilde_T = S^-T Q̂ S^-1,
    Qtilde2_T = S^-T Q2. Complex in general."""

    Ptilde_T: np.ndarray
    Ptilde2_T: np.ndarray
    Qtilde_T: np.ndarray
    Qtilde2_T: np.ndarray
    horizon: float


@dataclass(frozen=True)
class InfiniteGramians:
    """Unbounded-horizon Gramians of the diagonalized reduced system:
    D Qtilde_inf + Qtilde_inf D = -C̃^T C̃ and
    D Qtilde2_inf + Qtilde2_inf A = -C̃^T C."""

    Qtilde_inf: np.ndarray
    Qtilde2_inf: np.ndarray


def _solve_named(name, A1, A2, K1, K2, horizon):
    try:
        return linalg.solve_time_limited_sylvester(A1, A2, K1, K2, horizon)
    except SpectraOverlapError as exc:
        raise SpectraOverlapError(f"Gramian {name} is not well defined: {exc}") from exc


def _symmetrize(X):
    return 0.5 * (X + X.T)


def compute_gramian_set(full, red, horizon):
    """Solve all six defining equations over [0, T].

    The four symmetric members are symmetrized after the solve. A spectra
    overlap in any of the six equations raises SpectraOverlapError naming
    the offending Gramian.
    """
    check_pair(full, red)
    T = check_horizon(horizon)
    A, B, C = full.A, full.B, full.C
    Ah, Bh, Ch = red.Ahat, red.Bhat, red.Chat
    P_T = _symmetrize(_solve_named("P_T", A, A, B, B, T))
    P2_T = _solve_named("P2_T", A, Ah, B, Bh, T)
    Phat_T = _symmetrize(_solve_named("Phat_T", Ah, Ah, Bh, Bh, T))
    Q_T = _symmetrize(_solve_named("Q_T", A.T, A.T, C.T, C.T, T))
    Q2_T = _solve_named("Q2_T", Ah.T, A.T, Ch.T, C.T, T)
    Qhat_T = _symmetrize(_solve_named("Qhat_T", Ah.T, Ah.T, Ch.T, Ch.T, T))
    return GramianSet(
        P_T=P_T, P2_T=P2_T, Phat_T=Phat_T,
        Q_T=Q_T, Q2_T=Q2_T, Qhat_T=Qhat_T,
        horizon=T,
    )


def trace_identities(full, red, gset):
    """The three reachability/observability trace identities, returned as
    (lhs, rhs) pairs:

        tr(C P_T C^T)    = tr(B^T Q_T B)
        tr(Ĉ P̂_T Ĉ^T)  = tr(B̂^T Q̂_T B̂)
        tr(C P2_T Ĉ^T)   = tr(B̂^T Q2_T B)
    """
    full_pair = (
        float(np.trace(full.C @ gset.P_T @ full.C.T)),
        float(np.trace(full.B.T @ gset.Q_T @ full.B)),
    )
    red_pair = (
        float(np.trace(red.Chat @ gset.Phat_T @ red.Chat.T)),
        float(np.trace(red.Bhat.T @ gset.Qhat_T @ red.Bhat)),
    )
    cross_pair = (
        float(np.trace(full.C @ gset.P2_T @ red.Chat.T)),
        float(np.trace(red.Bhat.T @ gset.Q2_T @ full.B)),
    )
    return full_pair, red_pair, cross_pair


def transformed_gramians(red, gset):
    """Carry the reduced and cross Gramians into the spectral form.

    With D = S Â S^-1 diagonal, the returned matrices satisfy

        D P̃ + P̃ D   = -B̃ B̃^T + e^{DT} B̃ B̃^T e^{DT}
        A P̃2 + P̃2 D = -B B̃^T + e^{AT} B B̃^T e^{DT}
        D Q̃ + Q̃ D   = -C̃^T C̃ + e^{DT} C̃^T C̃ e^{DT}
        D Q̃2 + Q̃2 A = -C̃^T C + e^{DT} C̃^T C e^{AT}

    (plain transposes throughout; the matrices are complex symmetric, not
    Hermitian, when D is complex).
    """
    S = red.spectral.S
    S_inv = red.spectral.S_inv
    return TransformedGramians(
        Ptilde_T=S @ gset.Phat_T @ S.T,
        Ptilde2_T=gset.P2_T @ S.T,
        Qtilde_T=S_inv.T @ gset.Qhat_T @ S_inv,
        Qtilde2_T=S_inv.T @ gset.Q2_T,
        horizon=gset.horizon,
    )


def compute_infinite_gramians(red, full):
    """Unbounded-horizon observability Gramians in the spectral form.

    Qtilde_inf solves D X + X D = -C̃^T C̃ (well defined when no two
    eigenvalues of D are mirror images); Qtilde2_inf solves
    D X + X A = -C̃^T C (well defined when D and -A share no eigenvalue).
    """
    check_pair(full, red)
    lam = red.eigenvalues
    Ct = red.Ctilde
    try:
        Q_inf = linalg.solve_sylvester(red.D, red.D, -Ct.T @ Ct)
    except SpectraOverlapError as exc:
        raise SpectraOverlapError(
            f"Qtilde_inf is not well defined: {exc}"
        ) from exc
    # D X + X A = -C̃^T C, transposed to A^T Y + Y D = -C^T C̃ with Y = X^T,
    # then solved columnwise against the diagonal D
    Y = linalg.solve_shifted_columns(full.A.T, lam, full.C.T @ Ct)
    return InfiniteGramians(Qtilde_inf=Q_inf, Qtilde2_inf=Y.T)
