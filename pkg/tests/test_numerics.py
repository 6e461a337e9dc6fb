import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ndcoreset.numerics import (
    LewisConvergenceError,
    leverage_scores,
    lewis_residual,
    lewis_weights,
    orthonormal_basis,
)


def hat_diag(A):
    # textbook route: diag(A (A^T A)^+ A^T)
    return np.diag(A @ np.linalg.pinv(A.T @ A) @ A.T)


class TestLeverage:
    def test_identity(self):
        np.testing.assert_allclose(leverage_scores(np.eye(3)), np.ones(3), atol=1e-12)

    def test_duplicated_rows(self):
        A = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        tau = leverage_scores(A)
        np.testing.assert_allclose(tau, [0.5] * 4, atol=1e-12)
        np.testing.assert_allclose(tau, hat_diag(A), atol=1e-12)

    def test_rank_one(self):
        A = np.outer([1.0, 2.0, 3.0, 4.0], [1.0, -1.0])
        tau = leverage_scores(A)
        assert tau.sum() == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(tau, np.array([1, 4, 9, 16]) / 30.0, atol=1e-12)

    def test_zero_matrix(self):
        np.testing.assert_array_equal(leverage_scores(np.zeros((4, 2))), np.zeros(4))

    def test_wide_matrix(self):
        A = np.random.default_rng(0).standard_normal((3, 6))
        np.testing.assert_allclose(leverage_scores(A), np.ones(3), atol=1e-10)

    def test_bad_input(self):
        with pytest.raises(ValueError):
            leverage_scores(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            leverage_scores(np.array([[np.nan, 1.0]]))

    def test_matches_hat_matrix(self, rng):
        for _ in range(10):
            A = rng.standard_normal((30, 4))
            np.testing.assert_allclose(leverage_scores(A), hat_diag(A), atol=1e-10)

    def test_invariant_under_column_transform(self, rng):
        A = rng.standard_normal((50, 5))
        M = rng.standard_normal((5, 5)) + 3 * np.eye(5)
        np.testing.assert_allclose(leverage_scores(A @ M), leverage_scores(A), atol=1e-8)

    def test_basis_orthonormal(self, rng):
        U = orthonormal_basis(rng.standard_normal((40, 6)))
        np.testing.assert_allclose(U.T @ U, np.eye(6), atol=1e-12)


@given(arrays(np.float64, (12, 3), elements=st.floats(-10, 10)))
@settings(max_examples=100, deadline=None)
def test_leverage_bounds_and_rank(A):
    tau = leverage_scores(A)
    assert np.all(tau >= 0) and np.all(tau <= 1)
    rank = orthonormal_basis(A).shape[1]
    assert tau.sum() == pytest.approx(rank, abs=1e-8)


class TestLewis:
    def test_orthogonal_columns(self):
        # rows e_1, e_2, e_3: each row is its own column space, w = 1
        np.testing.assert_allclose(lewis_weights(np.eye(3)), np.ones(3), atol=1e-8)

    def test_repeated_blocks(self):
        # k copies of each basis row: w = 1/k, so the weights still sum to d
        A = np.repeat(np.eye(2), 4, axis=0)
        w = lewis_weights(A)
        np.testing.assert_allclose(w, np.full(8, 0.25), rtol=1e-6)

    def test_fixed_point_residual(self, rng):
        A = rng.standard_normal((20, 3))
        w = lewis_weights(A)
        assert lewis_residual(A, w) <= 1e-6

    def test_sum_near_rank(self, rng):
        for _ in range(5):
            A = rng.standard_normal((60, 4)) * rng.exponential(size=(60, 1))
            s = lewis_weights(A).sum()
            assert 4 / 2 <= s <= 4 * 2

    def test_permutation_equivariance(self, rng):
        A = rng.standard_normal((25, 3))
        perm = rng.permutation(25)
        np.testing.assert_allclose(lewis_weights(A[perm]), lewis_weights(A)[perm], rtol=1e-6)

    def test_row_scaling(self, rng):
        # shrinking a row shrinks its weight
        A = rng.standard_normal((30, 3))
        B = A.copy()
        B[0] *= 1e-3
        w_a, w_b = lewis_weights(A), lewis_weights(B)
        assert w_b[0] < w_a[0]

    def test_rank_zero(self):
        with pytest.raises(LewisConvergenceError):
            lewis_weights(np.zeros((5, 2)))

    def test_no_convergence(self, rng):
        with pytest.raises(LewisConvergenceError):
            lewis_weights(rng.standard_normal((40, 4)), max_iter=1, tol=1e-15)

    def test_only_p1(self):
        with pytest.raises(ValueError):
            lewis_weights(np.eye(2), p=2)
