"""Stationarity diagnostics tests: Gramian-form residuals, the paired
vectorized conditions in both evaluation modes, normalized metrics,
projection-run deviation terms, and the gradient check."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_system_matrices
from oracles import central_difference, h2t_error_sq_simpson, order_one_minimizer

from tlmor import linalg, optimality, reduction
from tlmor.exceptions import SizeCapError
from tlmor.system import LtiSystem, ReducedSystem

E3 = np.exp(-3.0)
E4 = np.exp(-4.0)
# closed forms for full (-1, 1, 1), reduced (-2, 1, 1), horizon 1:
# lhs/rhs of the output and eigenvalue condition pairs
SCALAR_KC = ((1.0 - E4) / 4.0, (1.0 - E3) / 3.0)
SCALAR_KL = (-(1.0 - 5.0 * E4) / 16.0, -(1.0 - 4.0 * E3) / 9.0)


def scalar_pair():
    full = LtiSystem(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]))
    red = ReducedSystem.from_matrices(
        np.array([[-2.0]]), np.array([[1.0]]), np.array([[1.0]])
    )
    return full, red


def full_system(seed, n=5, m=1, p=1):
    rng = np.random.default_rng(seed)
    return LtiSystem(*random_system_matrices(rng, n, m, p))


def rescale_columns(red, factors):
    """Same reduced system expressed on rescaled eigenvector columns."""
    R = red.spectral.S_inv @ np.diag(factors)
    S = np.linalg.inv(R)
    dec = linalg.SpectralDecomposition(
        eigenvalues=red.spectral.eigenvalues,
        S=S,
        S_inv=R,
        condition_number=float(np.linalg.cond(R)),
    )
    return ReducedSystem(
        base=red.base, spectral=dec, Btilde=S @ red.Bhat, Ctilde=red.Chat @ R
    )


def rel(got, ref):
    return float(np.linalg.norm(got - ref) / np.linalg.norm(ref))


def converged_run(seed, tol=1e-13, order=2, horizon=1.0):
    """Tightly converged finite-horizon run on a seeded random full system.

    The deviation terms reproduce the condition differences only as well as
    the iteration has actually reached its fixed point, so these runs use a
    much smaller tolerance than the solver default.
    """
    full = full_system(seed)
    init = reduction.random_initial_reduced(order, 1, 1, seed=3)
    run = reduction.tl_irka(
        full, order, horizon, init=init, tol=tol, max_iter=400
    )
    assert run.converged
    return full, run


class TestWilsonResiduals:
    def test_scalar_closed_form(self):
        full, red = scalar_pair()
        wc, wb, wl = optimality.wilson_residuals(full, red, 1.0)
        assert wc[0, 0] == pytest.approx(SCALAR_KC[0] - SCALAR_KC[1], rel=1e-12)
        assert wb[0, 0] == pytest.approx(SCALAR_KC[0] - SCALAR_KC[1], rel=1e-12)
        assert wl[0] == pytest.approx(SCALAR_KL[0] - SCALAR_KL[1], rel=1e-12)

    def test_self_reduction_residuals_vanish(self):
        full = full_system(3, n=4, m=2, p=2)
        red = ReducedSystem.from_matrices(full.A, full.B, full.C)
        wc, wb, wl = optimality.wilson_residuals(full, red, 2.0)
        kc, kb, kl = optimality.kronecker_conditions(full, red, 2.0)
        assert np.linalg.norm(wc) <= 1e-10 * np.linalg.norm(kc[0])
        assert np.linalg.norm(wb) <= 1e-10 * np.linalg.norm(kb[0])
        assert np.linalg.norm(wl) <= 1e-10 * np.linalg.norm(kl[0])

    @pytest.mark.parametrize("seed,horizon", [(40, 1.2), (41, 0.7), (42, 2.0)])
    def test_grid_minimizer_is_stationary(self, seed, horizon):
        # the order-1 optimum found by scalar profile search must satisfy
        # all three conditions to the accuracy of the search itself
        full = full_system(seed, n=2)
        lam, w = order_one_minimizer(full.A, full.B, full.C, horizon)
        assert -60.0 < lam < -1e-3
        red = ReducedSystem.from_matrices(
            np.array([[lam]]), np.array([[w]]), np.array([[1.0]])
        )
        rep = optimality.optimality_report(full, red, horizon)
        assert rep.metrics.e_c is not None and rep.metrics.e_c <= 1e-6
        assert rep.metrics.e_b is not None and rep.metrics.e_b <= 1e-6
        assert rep.metrics.e_lambda is not None and rep.metrics.e_lambda <= 1e-6

    def test_iterative_fixed_point_leaves_residuals(self):
        # the finite-horizon iteration is not a stationarity solver; its
        # fixed points carry nonzero residuals in every block
        full, run = converged_run(2)
        rep = optimality.optimality_report(full, run.final_reduced, run.horizon)
        assert rep.wilson_c_norm > 0.0
        assert rep.wilson_b_norm > 0.0
        assert np.linalg.norm(rep.wilson_lambda) > 0.0
        assert rep.metrics.e_lambda is not None and rep.metrics.e_lambda > 1e-12


class TestKroneckerConditions:
    @pytest.mark.parametrize("mode", ["direct", "explicit"])
    def test_scalar_closed_form(self, mode):
        full, red = scalar_pair()
        kc, kb, kl = optimality.kronecker_conditions(full, red, 1.0, mode=mode)
        assert kc[0][0] == pytest.approx(SCALAR_KC[0], rel=1e-12)
        assert kc[1][0] == pytest.approx(SCALAR_KC[1], rel=1e-12)
        # B = C for this pair, so the input-side values coincide
        assert kb[0][0] == pytest.approx(SCALAR_KC[0], rel=1e-12)
        assert kb[1][0] == pytest.approx(SCALAR_KC[1], rel=1e-12)
        assert kl[0][0] == pytest.approx(SCALAR_KL[0], rel=1e-12)
        assert kl[1][0] == pytest.approx(SCALAR_KL[1], rel=1e-12)

    def test_sides_match_at_full_order(self):
        full = full_system(5, n=4, m=2, p=3)
        red = ReducedSystem.from_matrices(full.A, full.B, full.C)
        kc, kb, kl = optimality.kronecker_conditions(full, red, 1.5)
        assert rel(kc[0], kc[1]) <= 1e-8
        assert rel(kb[0], kb[1]) <= 1e-8
        assert rel(kl[0], kl[1]) <= 1e-8

    def test_direct_matches_explicit(self):
        full = full_system(11, n=5, m=2, p=2)
        red = reduction.random_initial_reduced(2, 2, 2, seed=7)
        direct = optimality.kronecker_conditions(full, red, 1.3, mode="direct")
        explicit = optimality.kronecker_conditions(
            full, red, 1.3, mode="explicit"
        )
        for d_pair, e_pair in zip(direct, explicit):
            assert rel(e_pair[0], d_pair[0]) <= 1e-10
            assert rel(e_pair[1], d_pair[1]) <= 1e-10

    def test_wilson_is_difference_of_sides(self):
        full, run = converged_run(4, tol=1e-8)
        red = run.final_reduced
        rep = optimality.optimality_report(full, red, run.horizon)
        assert linalg.vec(rep.wilson_c) == pytest.approx(
            rep.kron_c[0] - rep.kron_c[1], rel=1e-13, abs=0.0
        )
        assert linalg.vec(rep.wilson_b) == pytest.approx(
            rep.kron_b[0] - rep.kron_b[1], rel=1e-13, abs=0.0
        )
        assert rep.wilson_lambda == pytest.approx(
            rep.kron_lambda[0] - rep.kron_lambda[1], rel=1e-13, abs=0.0
        )

    def test_explicit_mode_size_cap(self):
        full = full_system(13, n=70)
        red = reduction.random_initial_reduced(60, 1, 1, seed=1)
        with pytest.raises(SizeCapError):
            optimality.kronecker_conditions(full, red, 1.0, mode="explicit")

    def test_unknown_mode_rejected(self):
        full, red = scalar_pair()
        with pytest.raises(ValueError, match="mode"):
            optimality.kronecker_conditions(full, red, 1.0, mode="kron")


@pytest.fixture(scope="module")
def invariance_base():
    full = full_system(21, n=4)
    red = reduction.random_initial_reduced(2, 1, 1, seed=2)
    rep = optimality.optimality_report(full, red, 1.5)
    return full, red, rep.metrics


class TestConventionInvariance:
    @settings(max_examples=20, deadline=None)
    @given(
        st.floats(min_value=0.05, max_value=20.0),
        st.floats(min_value=0.0, max_value=2.0 * np.pi),
        st.floats(min_value=0.05, max_value=20.0),
    )
    def test_metrics_survive_column_rescaling(
        self, invariance_base, mag0, phase0, mag1
    ):
        # eigenvector columns carry arbitrary nonzero scale and phase; the
        # reported metrics must not depend on that choice
        full, red, base = invariance_base
        red2 = rescale_columns(red, [mag0 * np.exp(1j * phase0), mag1])
        rep2 = optimality.optimality_report(full, red2, 1.5)
        assert rep2.metrics.e_c == pytest.approx(base.e_c, rel=1e-8)
        assert rep2.metrics.e_b == pytest.approx(base.e_b, rel=1e-8)
        assert rep2.metrics.e_lambda == pytest.approx(base.e_lambda, rel=1e-8)

    def test_raw_vectors_are_canonical(self, invariance_base):
        full, red, _ = invariance_base
        rep = optimality.optimality_report(full, red, 1.5)
        red2 = rescale_columns(red, [3.0, -0.25])
        rep2 = optimality.optimality_report(full, red2, 1.5)
        assert rep2.wilson_c == pytest.approx(rep.wilson_c, rel=1e-9)
        assert rep2.wilson_b == pytest.approx(rep.wilson_b, rel=1e-9)
        assert rep2.wilson_lambda == pytest.approx(rep.wilson_lambda, rel=1e-9)


class TestSectionFourMetrics:
    def test_exact_pairs_give_zero(self):
        v = np.array([1.0, -2.0, 0.5])
        m = optimality.condition_metrics((v, v.copy()), (v, v.copy()), (v, v.copy()))
        assert m.e_c == 0.0 and m.e_b == 0.0 and m.e_lambda == 0.0

    def test_ratio_values(self):
        kc = (np.array([3.0, 4.0]), np.zeros(2))
        kb = (np.array([2.0]), np.array([1.0]))
        kl = (np.array([1.0, 2.0]), np.array([1.1, 2.4]))
        m = optimality.condition_metrics(kc, kb, kl)
        assert m.e_c == pytest.approx(1.0)
        assert m.e_b == pytest.approx(0.5)
        # worst per-eigenvalue ratio, not a norm ratio
        assert m.e_lambda == pytest.approx(0.2)

    def test_vanishing_denominators_reported_as_none(self):
        zero = np.zeros(2)
        some = np.array([1.0, 1.0])
        m = optimality.condition_metrics(
            (zero, some), (some, some), (np.array([1.0, 0.0]), some)
        )
        assert m.e_c is None
        assert m.e_b == 0.0
        # one vanishing lhs entry poisons the eigenvalue metric
        assert m.e_lambda is None


class TestProjectionDeviations:
    def test_full_order_run_has_no_deviation(self):
        full = full_system(17, n=4)
        init = ReducedSystem.from_matrices(full.A, full.B, full.C, label="init")
        run = reduction.tl_irka(full, 4, 1.0, init=init, tol=1e-10, max_iter=50)
        assert run.converged
        dev = optimality.projection_deviations(full, run.final_reduced, run, 1.0)
        for term in (dev.e_c, dev.e_b, dev.e_lambda1, dev.e_lambda2, dev.e_lambda):
            assert np.linalg.norm(term) <= 1e-7

    @pytest.mark.parametrize("seed", [2, 4])
    def test_deviations_equal_condition_differences(self, seed):
        full, run = converged_run(seed)
        red = run.final_reduced
        kc, kb, kl = optimality.kronecker_conditions(full, red, run.horizon)
        dev = optimality.projection_deviations(full, red, run, run.horizon)
        assert rel(dev.e_c, kc[0] - kc[1]) <= 1e-8
        assert rel(dev.e_b, kb[0] - kb[1]) <= 1e-8
        assert rel(dev.e_lambda, kl[0] - kl[1]) <= 1e-8

    def test_identity_holds_at_unstable_fixed_point(self):
        # fixed points with right-half-plane eigenvalues are flagged but
        # still satisfy the deviation identity
        full, run = converged_run(0)
        assert run.degraded
        red = run.final_reduced
        kc, kb, kl = optimality.kronecker_conditions(full, red, run.horizon)
        dev = optimality.projection_deviations(full, red, run, run.horizon)
        assert rel(dev.e_c, kc[0] - kc[1]) <= 1e-8
        assert rel(dev.e_b, kb[0] - kb[1]) <= 1e-8
        assert rel(dev.e_lambda, kl[0] - kl[1]) <= 1e-8

    def test_basis_shape_mismatch_rejected(self):
        full, run = converged_run(2, tol=1e-8)
        other = reduction.random_initial_reduced(3, 1, 1, seed=0)
        with pytest.raises(ValueError, match="projection basis"):
            optimality.projection_deviations(full, other, run, run.horizon)


class TestDerivativeCheck:
    def test_generic_point_agreement(self):
        full = full_system(23, n=5, m=2, p=2)
        red = reduction.random_initial_reduced(2, 2, 2, seed=5)
        rep = optimality.derivative_check(full, red, 1.5)
        assert rep.max_relative_discrepancy <= 1e-5

    def test_scalar_eigenvalue_derivative_symbolic(self):
        full, red = scalar_pair()
        rep = optimality.derivative_check(full, red, 1.0)
        lam, T = -2.0, 1.0
        dg = T * np.exp(2 * lam * T) / lam - np.expm1(2 * lam * T) / (2 * lam**2)
        mu = lam - 1.0  # shifted pole of the cross term
        dh = (T * np.exp(mu * T) * mu - np.expm1(mu * T)) / mu**2
        assert rep.analytic_lambda[0] == pytest.approx(dg - 2.0 * dh, rel=1e-10)
        assert rep.numeric_lambda[0] == pytest.approx(dg - 2.0 * dh, rel=1e-6)

    def test_matches_quadrature_derivative(self):
        # independent route: differentiate the Simpson value of the squared
        # error in the input coefficient and compare with the analytic block
        full = full_system(31, n=4)
        red = reduction.random_initial_reduced(1, 1, 1, seed=9)
        rep = optimality.derivative_check(full, red, 1.0)

        def sq_error(x):
            return h2t_error_sq_simpson(
                full.A, full.B, full.C,
                red.Ahat, np.array([[x]]), red.Chat,
                1.0, panels=1500,
            )

        num = central_difference(sq_error, red.Btilde[0, 0].real, 1e-5)
        assert rep.analytic_b[0, 0] == pytest.approx(num, rel=1e-6)

    def test_zero_system_reports_zero_discrepancy(self):
        full, _ = scalar_pair()
        red = ReducedSystem.from_matrices(
            np.array([[-1.5]]), np.array([[0.0]]), np.array([[0.0]])
        )
        rep = optimality.derivative_check(full, red, 1.0)
        assert rep.max_relative_discrepancy == 0.0


class TestOptimalityReport:
    def test_assembly(self):
        full, run = converged_run(2, tol=1e-8)
        red = run.final_reduced
        rep = optimality.optimality_report(full, red, run.horizon, run=run)
        again = optimality.condition_metrics(
            rep.kron_c, rep.kron_b, rep.kron_lambda
        )
        assert rep.metrics == again
        assert rep.deviations is not None
        assert rep.wilson_c_norm == pytest.approx(np.linalg.norm(rep.wilson_c))
        assert rep.wilson_b_norm == pytest.approx(np.linalg.norm(rep.wilson_b))

    def test_without_run_no_deviations(self):
        full, red = scalar_pair()
        rep = optimality.optimality_report(full, red, 1.0)
        assert rep.deviations is None

    def test_explicit_mode_assembly(self):
        full, red = scalar_pair()
        rep = optimality.optimality_report(full, red, 1.0, mode="explicit")
        assert rep.kron_c[0][0] == pytest.approx(SCALAR_KC[0], rel=1e-12)
        assert rep.metrics.e_c == pytest.approx(
            abs(SCALAR_KC[0] - SCALAR_KC[1]) / SCALAR_KC[0], rel=1e-10
        )
