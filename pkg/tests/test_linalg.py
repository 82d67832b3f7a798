"""Kernel tests: exponential, eigendecomposition contract, Sylvester solvers,
Kronecker utilities. Expected values come from closed forms or the oracles
module, never from the code under test."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    expm_taylor,
    kron_solve_sylvester,
    simpson_time_limited_integral,
)
from conftest import random_hurwitz

from tlmor import linalg
from tlmor.exceptions import (
    NonDiagonalizableError,
    SingularShiftError,
    SpectraOverlapError,
    ValidationError,
)


class TestExpm:
    def test_zero_matrix_gives_identity(self):
        assert np.array_equal(linalg.expm(np.zeros((2, 2))), np.eye(2))

    def test_diagonal_case(self):
        E = linalg.expm(np.diag([-1.0, np.log(2.0)]))
        assert E == pytest.approx(np.diag([np.exp(-1.0), 2.0]), rel=1e-14)

    def test_nilpotent_series_terminates(self):
        M = np.array([[0.0, 1.0], [0.0, 0.0]])
        expected = np.array([[1.0, 1.0], [0.0, 1.0]])
        assert linalg.expm(M) == pytest.approx(expected, abs=1e-15)
        assert expm_taylor(M) == pytest.approx(expected, abs=1e-15)

    def test_matches_taylor_oracle_on_random_matrices(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            M = rng.standard_normal((5, 5))
            E = linalg.expm(M)
            assert E == pytest.approx(expm_taylor(M), rel=1e-12)

    def test_large_norm_backward_error(self):
        # symmetric negative-definite with ||M|| = 1e3; the orthogonal
        # eigendecomposition gives an exact reference
        rng = np.random.default_rng(8)
        Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        lam = -np.linspace(1.0, 1e3, 6)
        M = Q @ np.diag(lam) @ Q.T
        ref = Q @ np.diag(np.exp(lam)) @ Q.T
        assert np.linalg.norm(linalg.expm(M) - ref) <= 1e-12 * np.linalg.norm(ref)

    @settings(max_examples=25, deadline=None)
    @given(
        t=st.floats(min_value=0.0, max_value=5.0),
        s=st.floats(min_value=0.0, max_value=5.0),
    )
    def test_semigroup_property(self, t, s):
        M = np.array([[-1.0, 2.0, 0.0], [0.0, -2.0, 1.0], [0.5, 0.0, -3.0]])
        left = linalg.expm(M * t) @ linalg.expm(M * s)
        right = linalg.expm(M * (t + s))
        assert left == pytest.approx(right, rel=1e-10, abs=1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError):
            linalg.expm(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            linalg.expm(np.array([[np.nan, 0.0], [0.0, 0.0]]))


class TestEig:
    def test_already_diagonal(self):
        dec = linalg.eig(np.diag([-2.0, -1.0]))
        assert dec.eigenvalues == pytest.approx(np.array([-2.0, -1.0]))
        assert dec.S == pytest.approx(np.eye(2))
        assert dec.D == pytest.approx(np.diag([-2.0, -1.0]))

    def test_rotation_matrix_conjugate_pair_order(self):
        # eigenvalues +-i; the +imaginary member leads within the pair
        dec = linalg.eig(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert dec.eigenvalues == pytest.approx(np.array([1j, -1j]))

    def test_similarity_invariance(self):
        rng = np.random.default_rng(3)
        S = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
        M = np.linalg.solve(S, np.diag([-3.0, -5.0])) @ S
        dec = linalg.eig(M)
        assert dec.eigenvalues == pytest.approx(np.array([-5.0, -3.0]), rel=1e-10)

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            M = random_hurwitz(rng, 6)
            dec = linalg.eig(M)
            assert dec.reconstruction_residual(M) <= 1e-10

    def test_deterministic(self):
        M = np.array([[0.0, 2.0, 1.0], [-2.0, -1.0, 0.0], [0.0, 1.0, -4.0]])
        d1 = linalg.eig(M)
        d2 = linalg.eig(M)
        assert np.array_equal(d1.eigenvalues, d2.eigenvalues)
        assert np.array_equal(d1.S, d2.S)
        assert np.array_equal(d1.S_inv, d2.S_inv)

    def test_multiple_conjugate_pairs_adjacent(self):
        # block diagonal with rotations of speed 1 and 2: eigenvalues
        # {+-i, +-2i}, all real parts zero
        J1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
        M = np.block([[J1, np.zeros((2, 2))], [np.zeros((2, 2)), 2.0 * J1]])
        w = linalg.eig(M).eigenvalues
        for k in (0, 2):
            assert w[k].imag > 0
            assert w[k + 1] == pytest.approx(np.conj(w[k]), rel=1e-12)

    def test_conjugate_pair_vectors_are_conjugate(self):
        M = np.array([[0.0, 2.0], [-3.0, -1.0]])
        dec = linalg.eig(M)
        v_plus, v_minus = dec.S_inv[:, 0], dec.S_inv[:, 1]
        assert v_minus == pytest.approx(np.conj(v_plus), rel=1e-12)
        assert np.linalg.norm(v_plus) == pytest.approx(1.0, rel=1e-12)

    def test_jordan_block_rejected(self):
        with pytest.raises(NonDiagonalizableError):
            linalg.eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSolveSylvester:
    def test_scalar(self):
        X = linalg.solve_sylvester([[-1.0]], [[-1.0]], [[-1.0]])
        assert X == pytest.approx(np.array([[0.5]]))

    def test_decoupled_diagonal(self):
        X = linalg.solve_sylvester(np.diag([-1.0, -2.0]), [[-3.0]], [[-1.0], [-1.0]])
        assert X == pytest.approx(np.array([[0.25], [0.2]]))

    def test_matches_kronecker_oracle(self, rng):
        for _ in range(5):
            A1 = random_hurwitz(rng, 5)
            A2 = random_hurwitz(rng, 5)
            RHS = rng.standard_normal((5, 5))
            X = linalg.solve_sylvester(A1, A2, RHS)
            assert X == pytest.approx(kron_solve_sylvester(A1, A2, RHS), rel=1e-10)

    def test_residual_small(self, rng):
        A1 = random_hurwitz(rng, 6)
        A2 = random_hurwitz(rng, 4)
        RHS = rng.standard_normal((6, 4))
        X = linalg.solve_sylvester(A1, A2, RHS)
        res = np.linalg.norm(A1 @ X + X @ A2.T - RHS)
        scale = (
            np.linalg.norm(A1) * np.linalg.norm(X)
            + np.linalg.norm(X) * np.linalg.norm(A2)
            + np.linalg.norm(RHS)
        )
        assert res <= 1e-10 * scale

    def test_complex_inputs(self, rng):
        A1 = np.diag([-1.0 + 2j, -2.0 - 1j])
        A2 = random_hurwitz(rng, 3)
        RHS = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        X = linalg.solve_sylvester(A1, A2, RHS)
        assert X == pytest.approx(kron_solve_sylvester(A1, A2, RHS), rel=1e-10)

    def test_spectra_overlap_rejected(self):
        with pytest.raises(SpectraOverlapError):
            linalg.solve_sylvester([[1.0]], [[-1.0]], [[1.0]])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            linalg.solve_sylvester(np.eye(2) * -1, np.eye(3) * -2, np.eye(2))


class TestSolveTimeLimitedSylvester:
    def test_zero_horizon(self):
        X = linalg.solve_time_limited_sylvester(
            np.diag([-1.0, -2.0]), np.diag([-1.0, -2.0]), np.ones((2, 1)),
            np.ones((2, 1)), 0.0,
        )
        assert np.array_equal(X, np.zeros((2, 2)))

    def test_scalar_closed_form(self):
        # integral of e^{-2s} over [0, ln 2] is (1 - e^{-2 ln 2}) / 2 = 0.375
        X = linalg.solve_time_limited_sylvester(
            [[-1.0]], [[-1.0]], [[1.0]], [[1.0]], np.log(2.0)
        )
        assert X == pytest.approx(np.array([[0.375]]), rel=1e-13)

    def test_matches_simpson_oracle(self, rng):
        A1 = random_hurwitz(rng, 6)
        A2 = random_hurwitz(rng, 6)
        K1 = rng.standard_normal((6, 2))
        K2 = rng.standard_normal((6, 2))
        X = linalg.solve_time_limited_sylvester(A1, A2, K1, K2, 1.0)
        ref = simpson_time_limited_integral(A1, K1, K2, A2, 1.0)
        assert X == pytest.approx(ref, rel=1e-8)

    def test_converges_to_infinite_horizon(self, rng):
        import scipy.linalg as sla

        for _ in range(3):
            A1 = random_hurwitz(rng, 5)
            A2 = random_hurwitz(rng, 5)
            K1 = rng.standard_normal((5, 1))
            K2 = rng.standard_normal((5, 1))
            X_inf = sla.solve_sylvester(A1, A2.T, -K1 @ K2.T)
            decay = abs(
                max(np.linalg.eigvals(A1).real.max(), np.linalg.eigvals(A2).real.max())
            )
            T = 50.0 / decay
            X = linalg.solve_time_limited_sylvester(A1, A2, K1, K2, T)
            assert np.linalg.norm(X - X_inf) <= 1e-6 * np.linalg.norm(X_inf)

    def test_trace_nondecreasing_in_horizon(self, rng):
        A = random_hurwitz(rng, 4)
        K = rng.standard_normal((4, 2))
        traces = [
            np.trace(linalg.solve_time_limited_sylvester(A, A, K, K, T))
            for T in (0.5, 1.0, 2.0, 4.0)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(traces, traces[1:]))

    def test_negative_horizon_rejected(self):
        with pytest.raises(ValidationError):
            linalg.solve_time_limited_sylvester(
                [[-1.0]], [[-1.0]], [[1.0]], [[1.0]], -1.0
            )


class TestSolveShiftedColumns:
    def test_diagonal_scalar_solves(self):
        # (-A - dI) x = rhs with A = diag(-1,-2), d = -3 gives diag(4, 5)
        X = linalg.solve_shifted_columns(
            np.diag([-1.0, -2.0]), np.array([-3.0]), np.ones((2, 1))
        )
        assert X == pytest.approx(np.array([[0.25], [0.2]]))

    def test_zero_rhs(self):
        X = linalg.solve_shifted_columns(np.diag([-1.0, -2.0]), [[-3.0]], np.zeros((2, 1)))
        assert np.array_equal(X, np.zeros((2, 1)))

    def test_agrees_with_generic_solver(self, rng):
        A = random_hurwitz(rng, 8)
        d = np.array([-1.0 + 2j, -1.0 - 2j, -4.0])
        RHS = rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3))
        X = linalg.solve_shifted_columns(A, d, RHS)
        ref = linalg.solve_sylvester(-A, -np.diag(d).T, RHS)
        assert X == pytest.approx(ref, rel=1e-10)
        res = np.linalg.norm(-X @ np.diag(d) - A @ X - RHS)
        assert res <= 1e-10 * (np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(RHS))

    def test_shift_collision_named(self):
        with pytest.raises(SingularShiftError, match=r"d\[0\]"):
            linalg.solve_shifted_columns(np.diag([-1.0, -2.0]), [1.0], np.ones((2, 1)))

    def test_non_diagonal_D_rejected(self):
        with pytest.raises(ValidationError):
            linalg.solve_shifted_columns(np.eye(2) * -1, np.ones((2, 2)), np.ones((2, 2)))


class TestKronVecUtilities:
    def test_vec_column_stacking(self):
        assert np.array_equal(
            linalg.vec(np.array([[1.0, 3.0], [2.0, 4.0]])), np.array([1.0, 2.0, 3.0, 4.0])
        )

    def test_unvec_inverts_vec(self, rng):
        X = rng.standard_normal((3, 5))
        assert np.array_equal(linalg.unvec(linalg.vec(X), 3, 5), X)

    def test_kron_identity_factor(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        K = linalg.kron(np.eye(2), M)
        expected = np.block([[M, np.zeros((2, 2))], [np.zeros((2, 2)), M]])
        assert np.array_equal(K, expected)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 4), st.integers(2, 4), st.integers(2, 4), st.integers(0, 10**6))
    def test_vec_of_triple_product_identity(self, a, b, c, seed):
        rng = np.random.default_rng(seed)
        X, Y, Z = rng.standard_normal((a, b)), rng.standard_normal((b, c)), rng.standard_normal((c, a))
        lhs = linalg.vec(X @ Y @ Z)
        rhs = linalg.kron(Z.T, X) @ linalg.vec(Y)
        assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)

    def test_trace_product_identity(self, rng):
        X, Y, Z = rng.standard_normal((3, 3)), rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        assert linalg.trace_product(X, Y, Z) == pytest.approx(np.trace(X @ Y @ Z), rel=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            linalg.trace_product(np.eye(2), np.eye(3), np.eye(2))
