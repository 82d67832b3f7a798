"""First-order optimality diagnostics for finite-horizon reduction.

A reduced system minimizing the finite-horizon error norm satisfies three
stationarity conditions, one per parameter block of its spectral form
(output rows, input columns, eigenvalues). Each condition can be evaluated
in two encodings: as Gramian residual matrices, or as paired left/right
condition vectors assembled from shifted linear solves. This module
evaluates both, the normalized residual metrics built on the paired
encoding, the closed-form deviation terms attached to a projection run,
and a finite-difference cross-check of the analytic gradient.

Everything is evaluated in a canonical spectral form (unit-norm
eigenvector columns, first significant entry positive real), so reported
values do not depend on the eigendecomposition the caller happened to
carry; the normalized metrics are invariant under that freedom anyway.
"""

from dataclasses import dataclass

import numpy as np

from . import gramians, linalg
from ._validation import check_horizon
from .exceptions import SizeCapError
from .system import LtiSystem, ReducedSystem, check_pair

__all__ = [
    "EXPLICIT_SIZE_CAP",
    "SectionMetrics",
    "ProjectionDeviations",
    "DerivativeCheckReport",
    "OptimalityReport",
    "wilson_residuals",
    "kronecker_conditions",
    "condition_metrics",
    "projection_deviations",
    "derivative_check",
    "optimality_report",
]

# explicit condition assembly builds dense (n*r) x (n*r) operators
EXPLICIT_SIZE_CAP = 4096

# denominators below this report the metric as undefined rather than inf
METRIC_DENOMINATOR_FLOOR = 1e-300


@dataclass(frozen=True)
class SectionMetrics:
    """Normalized condition residuals.

    e_c and e_b are ||lhs - rhs|| / ||lhs|| over the paired condition
    vectors; e_lambda is the worst per-eigenvalue ratio |lhs_i - rhs_i| /
    |lhs_i|. A metric whose denominator underflows is None.
    """

    e_c: float | None
    e_b: float | None
    e_lambda: float | None


@dataclass(frozen=True)
class ProjectionDeviations:
    """Closed-form deviation of a projection run from exact stationarity.

    Each term equals the signed difference lhs - rhs of the corresponding
    condition pair; e_lambda splits into a reduced-operator part and a
    mixed full/reduced part whose sum is the per-eigenvalue difference.
    """

    e_c: np.ndarray
    e_b: np.ndarray
    e_lambda1: np.ndarray
    e_lambda2: np.ndarray

    @property
    def e_lambda(self):
        return self.e_lambda1 + self.e_lambda2


@dataclass(frozen=True)
class DerivativeCheckReport:
    """Analytic gradient of the reduced error functional against central
    finite differences, blockwise (eigenvalues, input rows, output columns)."""

    analytic_lambda: np.ndarray
    numeric_lambda: np.ndarray
    analytic_b: np.ndarray
    numeric_b: np.ndarray
    analytic_c: np.ndarray
    numeric_c: np.ndarray
    max_relative_discrepancy: float


@dataclass(frozen=True)
class OptimalityReport:
    """All condition encodings for one (full, reduced, horizon) triple.

    wilson_* hold the Gramian-form residuals (zero at a local optimum);
    kron_* hold (lhs, rhs) pairs of the vectorized conditions; metrics are
    the normalized residuals; deviations are present when a reduction run
    supplied its projection bases.
    """

    wilson_c: np.ndarray
    wilson_b: np.ndarray
    wilson_lambda: np.ndarray
    kron_c: tuple
    kron_b: tuple
    kron_lambda: tuple
    metrics: SectionMetrics
    deviations: ProjectionDeviations | None

    @property
    def wilson_c_norm(self):
        return float(np.linalg.norm(self.wilson_c))

    @property
    def wilson_b_norm(self):
        return float(np.linalg.norm(self.wilson_b))


def _canonical_reduced(red):
    """Rebuild ``red`` on unit-norm, phase-anchored eigenvector columns.

    The eigenvalue order is kept; only the per-column scaling freedom is
    removed, so condition vectors become convention-independent.
    """
    R = linalg._canonicalize_columns(red.spectral.S_inv)
    S = np.linalg.inv(R)
    dec = linalg.SpectralDecomposition(
        eigenvalues=red.spectral.eigenvalues,
        S=S,
        S_inv=R,
        condition_number=float(np.linalg.cond(R)),
    )
    return ReducedSystem(
        base=red.base,
        spectral=dec,
        Btilde=S @ red.Bhat,
        Ctilde=red.Chat @ R,
    )


@dataclass(frozen=True)
class _Conditions:
    """Shared intermediates behind the Gramian-form evaluations."""

    red: ReducedSystem
    eAT: np.ndarray
    eDT: np.ndarray
    tset: gramians.TransformedGramians
    inf: gramians.InfiniteGramians
    # bracketed factors of the eigenvalue condition:
    # NP  = P̃  - T e^{DT} B̃ B̃^T e^{DT}   (r x r)
    # NP2 = P̃2 - T e^{AT} B B̃^T e^{DT}   (n x r)
    NP: np.ndarray
    NP2: np.ndarray


def _conditions(full, red, horizon):
    check_pair(full, red)
    T = check_horizon(horizon)
    red = _canonical_reduced(red)
    gset = gramians.compute_gramian_set(full, red, T)
    tset = gramians.transformed_gramians(red, gset)
    inf = gramians.compute_infinite_gramians(red, full)
    eDT = np.exp(red.eigenvalues * T)
    eAT = linalg.expm(full.A * T)
    EB = eDT[:, None] * red.Btilde
    NP = tset.Ptilde_T - T * (EB @ EB.T)
    NP2 = tset.Ptilde2_T - T * ((eAT @ full.B) @ EB.T)
    return _Conditions(red=red, eAT=eAT, eDT=eDT, tset=tset, inf=inf, NP=NP, NP2=NP2)


def _wilson_from(ctx, full):
    red, tset = ctx.red, ctx.tset
    wilson_c = red.Ctilde @ tset.Ptilde_T - full.C @ tset.Ptilde2_T
    wilson_b = tset.Qtilde_T @ red.Btilde - tset.Qtilde2_T @ full.B
    wilson_lambda = np.einsum(
        "ij,ji->i", ctx.inf.Qtilde2_inf, ctx.NP2
    ) - np.einsum("ij,ji->i", ctx.inf.Qtilde_inf, ctx.NP)
    return wilson_c, wilson_b, wilson_lambda


def wilson_residuals(full, red, horizon):
    """Gramian-form stationarity residuals of ``red`` against ``full``.

    Returns (output residual p x r, input residual r x m, per-eigenvalue
    residuals length r), each zero exactly when the corresponding
    first-order condition holds. The eigenvalue residual is the
    cross-Gramian side minus the reduced-Gramian side.
    """
    return _wilson_from(_conditions(full, red, horizon), full)


def _kron_direct(ctx, full):
    red, tset = ctx.red, ctx.tset
    kron_c = (
        linalg.vec(red.Ctilde @ tset.Ptilde_T),
        linalg.vec(full.C @ tset.Ptilde2_T),
    )
    kron_b = (
        linalg.vec(tset.Qtilde_T @ red.Btilde),
        linalg.vec(tset.Qtilde2_T @ full.B),
    )
    kron_lambda = (
        -np.einsum("ij,ji->i", ctx.inf.Qtilde_inf, ctx.NP),
        -np.einsum("ij,ji->i", ctx.inf.Qtilde2_inf, ctx.NP2),
    )
    return kron_c, kron_b, kron_lambda


def _kron_explicit(full, red, horizon):
    n, r, m, p = full.n, red.order, full.m, full.p
    if n * r > EXPLICIT_SIZE_CAP:
        raise SizeCapError(
            f"explicit condition assembly needs a {n * r}x{n * r} operator; "
            f"cap is {EXPLICIT_SIZE_CAP} rows"
        )
    T = check_horizon(horizon)
    red = _canonical_reduced(red)
    # the shifted operators are singular exactly on spectra collisions, so
    # fail the same way the solver-based path does
    linalg._check_spectra_separation(red.D, red.D)
    linalg._check_spectra_separation(full.A.astype(complex), red.D)

    A, B, C = full.A, full.B, full.C
    Ah, Bh, Ch = red.Ahat, red.Bhat, red.Chat
    D = red.D
    Bt, Ct = red.Btilde, red.Ctilde
    eAT = linalg.expm(A * T)
    eAhT = linalg.expm(Ah * T)
    eDTB = np.exp(red.eigenvalues * T)[:, None] * Bt
    eDTCt = np.exp(red.eigenvalues * T)[:, None] * Ct.T
    Ir, In = np.eye(r), np.eye(n)
    vec_m = linalg.vec(np.eye(m))
    vec_p = linalg.vec(np.eye(p))

    K_hat = linalg.kron(Ir, Ah.astype(complex)) + linalg.kron(D, Ir)
    K_full = linalg.kron(Ir, A.astype(complex)) + linalg.kron(D, In)
    kron_c = (
        linalg.kron(Ir, Ch)
        @ np.linalg.solve(
            K_hat,
            (linalg.kron(eDTB, eAhT @ Bh) - linalg.kron(Bt, Bh)) @ vec_m,
        ),
        linalg.kron(Ir, C)
        @ np.linalg.solve(
            K_full,
            (linalg.kron(eDTB, eAT @ B) - linalg.kron(Bt, B)) @ vec_m,
        ),
    )

    K2_hat = linalg.kron(Ir, D) + linalg.kron(Ah.T.astype(complex), Ir)
    K2_full = linalg.kron(In, D) + linalg.kron(A.T.astype(complex), Ir)
    kron_b = (
        linalg.kron(Bh.T, Ir)
        @ np.linalg.solve(
            K2_hat,
            (linalg.kron(eAhT.T @ Ch.T, eDTCt) - linalg.kron(Ch.T, Ct.T)) @ vec_p,
        ),
        linalg.kron(B.T, Ir)
        @ np.linalg.solve(
            K2_full,
            (linalg.kron(eAT.T @ C.T, eDTCt) - linalg.kron(C.T, Ct.T)) @ vec_p,
        ),
    )

    K3_hat = linalg.kron(Ir, D) + linalg.kron(Ah.astype(complex), Ir)
    K3_full = linalg.kron(In, D) + linalg.kron(A.astype(complex), Ir)
    grow_hat = linalg.kron(eAhT @ Bh, eDTB)
    grow_full = linalg.kron(eAT @ B, eDTB)
    inner_hat = (
        np.linalg.solve(K3_hat, (grow_hat - linalg.kron(Bh, Bt)) @ vec_m)
        - T * grow_hat @ vec_m
    )
    inner_full = (
        np.linalg.solve(K3_full, (grow_full - linalg.kron(B, Bt)) @ vec_m)
        - T * grow_full @ vec_m
    )
    row_hat = np.linalg.solve(K3_hat.T, linalg.kron(Ch, Ct).T @ vec_p)
    row_full = np.linalg.solve(K3_full.T, linalg.kron(C, Ct).T @ vec_p)
    # (I x e_i e_i^T) keeps row i of the underlying r x k matrix, so the
    # per-eigenvalue contraction is a row sum of the elementwise product
    kron_lambda = (
        np.sum((row_hat * inner_hat).reshape((r, r), order="F"), axis=1),
        np.sum((row_full * inner_full).reshape((r, n), order="F"), axis=1),
    )
    return kron_c, kron_b, kron_lambda


def kronecker_conditions(full, red, horizon, mode="direct"):
    """Paired (lhs, rhs) vectors of the three stationarity conditions.

    ``direct`` evaluates every side through Sylvester/shifted solves;
    ``explicit`` assembles the vectorized operators literally, which is a
    test oracle and refuses problems with n*r above EXPLICIT_SIZE_CAP. The
    two modes agree to solver precision.

    Returns (kron_c, kron_b, kron_lambda); the first two pair vectors of
    length p*r and r*m, the third pairs length-r arrays indexed like the
    reduced eigenvalues.
    """
    if mode == "direct":
        return _kron_direct(_conditions(full, red, horizon), full)
    if mode == "explicit":
        check_pair(full, red)
        return _kron_explicit(full, red, horizon)
    raise ValueError(f"unknown mode {mode!r}; expected 'direct' or 'explicit'")


def _ratio(num, den):
    if den < METRIC_DENOMINATOR_FLOOR:
        return None
    return float(num / den)


def condition_metrics(kron_c, kron_b, kron_lambda):
    """Normalized residual metrics over paired condition vectors."""
    e_c = _ratio(
        np.linalg.norm(kron_c[0] - kron_c[1]), np.linalg.norm(kron_c[0])
    )
    e_b = _ratio(
        np.linalg.norm(kron_b[0] - kron_b[1]), np.linalg.norm(kron_b[0])
    )
    lhs, rhs = np.asarray(kron_lambda[0]), np.asarray(kron_lambda[1])
    per_eig = [_ratio(abs(l - r), abs(l)) for l, r in zip(lhs, rhs)]
    e_lambda = None if any(v is None for v in per_eig) else (
        max(per_eig) if per_eig else None
    )
    return SectionMetrics(e_c=e_c, e_b=e_b, e_lambda=e_lambda)


def projection_deviations(full, red, run, horizon):
    """Deviation terms of a converged projection run.

    Uses the run's projection bases V, W and the closed-form factor
    (WᵀV)⁻¹Wᵀ(e^{A·Pr·T} - e^{AT})B with Pr = V(WᵀV)⁻¹Wᵀ; the returned
    e_c, e_b, e_lambda1 + e_lambda2 equal the signed lhs - rhs differences
    of the corresponding condition pairs at the run's fixed point.
    """
    V, W = run.projection.V, run.projection.W
    if V.shape != (full.n, red.order):
        raise ValueError(
            f"projection basis is {V.shape}, expected ({full.n}, {red.order})"
        )
    ctx = _conditions(full, red, horizon)
    red = ctx.red
    T = ctx.tset.horizon
    lam = red.eigenvalues
    A, B, C = full.A, full.B, full.C
    Ah, Bh, Ch = red.Ahat, red.Bhat, red.Chat
    eAT, eDT = ctx.eAT, ctx.eDT
    EB = eDT[:, None] * red.Btilde
    EC = eDT[:, None] * red.Ctilde.T

    M = W.T @ V
    lift = np.linalg.solve(M, W.T)
    Pr = V @ lift
    Gc = lift @ ((linalg.expm(A @ Pr * T) - eAT) @ B)
    Gb = (C @ (linalg.expm(Pr @ A * T) - eAT) @ V).T

    # Â Yc + Yc D = Gc B̃^T e^{DT}
    Yc = linalg.solve_shifted_columns(Ah, lam, -(Gc @ EB.T))
    e_c = linalg.vec(Ch @ Yc)

    # D Yb + Yb Â = e^{DT} C̃^T Gb^T, solved transposed against diag shifts
    Yb = linalg.solve_shifted_columns(Ah.T, lam, -(EC @ Gb.T).T).T
    e_b = linalg.vec(Yb @ Bh)

    # D Z1 + Z1 Â^T = e^{DT} B̃ Gc^T
    F1 = EB @ Gc.T
    Z1 = linalg.solve_shifted_columns(Ah, lam, -F1.T).T
    Z2 = Z1 - T * F1
    # D Yw + Yw Â = C̃^T Ĉ
    Yw = linalg.solve_shifted_columns(Ah.T, lam, -(Ch.T @ red.Ctilde)).T
    e_lambda1 = np.einsum("ij,ij->i", Yw, Z2)

    # mixed part: pairs P̃2^T - T e^{DT} B̃ B^T e^{A^T T} against
    # Y6 (W^T V)^{-1} W^T - Y7
    M2 = ctx.tset.Ptilde2_T.T - T * (EB @ (eAT @ B).T)
    F7 = EC @ (C @ eAT)
    Y7 = linalg.solve_shifted_columns(A.T, lam, -F7.T).T
    Y6 = linalg.solve_shifted_columns(Ah.T, lam, -(F7 @ V).T).T
    Na = Y6 @ lift - Y7
    e_lambda2 = np.einsum("ij,ij->i", M2, Na)

    return ProjectionDeviations(
        e_c=e_c, e_b=e_b, e_lambda1=e_lambda1, e_lambda2=e_lambda2
    )


def _reduced_error_value(full, lam, Btilde, Ctilde, horizon, eAT):
    """Reduced-dependent part of the squared error norm,
    tr(C̃ P̃ C̃^T) - 2 tr(C P̃2 C̃^T), as a holomorphic function of the
    spectral parameters (no conjugations), so real-step differences
    approximate its complex derivatives."""
    eDT = np.exp(lam * horizon)
    EB = eDT[:, None] * Btilde
    denom = lam[:, None] + lam[None, :]
    Pt = (EB @ EB.T - Btilde @ Btilde.T) / denom
    Pt2 = linalg.solve_shifted_columns(
        full.A, lam, full.B @ Btilde.T - (eAT @ full.B) @ EB.T
    )
    return np.trace(Ctilde @ Pt @ Ctilde.T) - 2.0 * np.trace(
        full.C @ Pt2 @ Ctilde.T
    )


def derivative_check(full, red, horizon, step_scale=1e-6):
    """Analytic gradient of the reduced error functional against central
    finite differences.

    The analytic blocks come from the Gramian-form residuals (factor 2;
    the eigenvalue block with the sign of decreasing error). Steps are
    step_scale*max(1, |x|) per parameter. The reported discrepancy is the
    worst |analytic - numeric| over max(|analytic|, |numeric|, floor),
    where the floor guards parameters whose derivative vanishes.
    """
    ctx = _conditions(full, red, horizon)
    red = ctx.red
    T = check_horizon(horizon)
    wilson_c, wilson_b, wilson_lambda = _wilson_from(ctx, full)
    analytic_c = 2.0 * wilson_c
    analytic_b = 2.0 * wilson_b
    analytic_lambda = -2.0 * wilson_lambda

    lam0 = red.eigenvalues.astype(complex)
    B0 = red.Btilde.astype(complex)
    C0 = red.Ctilde.astype(complex)
    eAT = ctx.eAT

    def value(lam, Bt, Ct):
        return _reduced_error_value(full, lam, Bt, Ct, T, eAT)

    def central(apply_step):
        def at(h):
            lam, Bt, Ct = lam0.copy(), B0.copy(), C0.copy()
            apply_step(lam, Bt, Ct, h)
            return value(lam, Bt, Ct)

        return at

    # the difference quotients carry imaginary dust even when the analytic
    # block is real, so accumulate in complex and match dtypes at the end
    numeric_lambda = np.zeros(lam0.size, dtype=complex)
    for i in range(lam0.size):
        h = step_scale * max(1.0, abs(lam0[i]))

        def bump(lam, Bt, Ct, s, i=i):
            lam[i] += s

        f = central(bump)
        numeric_lambda[i] = (f(h) - f(-h)) / (2.0 * h)

    numeric_b = np.zeros(B0.shape, dtype=complex)
    for i in range(B0.shape[0]):
        for j in range(B0.shape[1]):
            h = step_scale * max(1.0, abs(B0[i, j]))

            def bump(lam, Bt, Ct, s, i=i, j=j):
                Bt[i, j] += s

            f = central(bump)
            numeric_b[i, j] = (f(h) - f(-h)) / (2.0 * h)

    numeric_c = np.zeros(C0.shape, dtype=complex)
    for k in range(C0.shape[0]):
        for i in range(C0.shape[1]):
            h = step_scale * max(1.0, abs(C0[k, i]))

            def bump(lam, Bt, Ct, s, k=k, i=i):
                Ct[k, i] += s

            f = central(bump)
            numeric_c[k, i] = (f(h) - f(-h)) / (2.0 * h)

    if np.isrealobj(analytic_lambda):
        numeric_lambda = numeric_lambda.real
        numeric_b = numeric_b.real
        numeric_c = numeric_c.real

    pairs = np.concatenate(
        [
            analytic_lambda.ravel(),
            analytic_b.ravel(),
            analytic_c.ravel(),
        ]
    ), np.concatenate(
        [
            numeric_lambda.ravel(),
            numeric_b.ravel(),
            numeric_c.ravel(),
        ]
    )
    mags = np.maximum(np.abs(pairs[0]), np.abs(pairs[1]))
    scale = float(mags.max()) if mags.size else 0.0
    if scale == 0.0:
        worst = 0.0
    else:
        floor = 1e-9 * scale
        worst = float(
            (np.abs(pairs[0] - pairs[1]) / np.maximum(mags, floor)).max()
        )
    return DerivativeCheckReport(
        analytic_lambda=analytic_lambda,
        numeric_lambda=numeric_lambda,
        analytic_b=analytic_b,
        numeric_b=numeric_b,
        analytic_c=analytic_c,
        numeric_c=numeric_c,
        max_relative_discrepancy=worst,
    )


def optimality_report(full, red, horizon, run=None, mode="direct"):
    """Evaluate every optimality encoding at once.

    ``run`` (a ReductionRun) adds the projection deviation terms; without
    it the deviations field is None. ``mode`` selects the condition
    evaluation path as in kronecker_conditions.
    """
    if mode == "explicit":
        check_pair(full, red)
        kron_c, kron_b, kron_lambda = _kron_explicit(full, red, horizon)
        ctx = _conditions(full, red, horizon)
    else:
        ctx = _conditions(full, red, horizon)
        kron_c, kron_b, kron_lambda = _kron_direct(ctx, full)
    wilson_c, wilson_b, wilson_lambda = _wilson_from(ctx, full)
    metrics = condition_metrics(kron_c, kron_b, kron_lambda)
    deviations = (
        projection_deviations(full, red, run, horizon) if run is not None else None
    )
    return OptimalityReport(
        wilson_c=wilson_c,
        wilson_b=wilson_b,
        wilson_lambda=wilson_lambda,
        kron_c=kron_c,
        kron_b=kron_b,
        kron_lambda=kron_lambda,
        metrics=metrics,
        deviations=deviations,
    )
