"""Leverage scores and l1 Lewis weights of tall dense matrices."""

import numpy as np

RANK_TOL = 1e-10


class LewisConvergenceError(RuntimeError):
    pass


def orthonormal_basis(A: np.ndarray, rtol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``A``.

    Thin QR followed by an SVD of the small triangular factor; directions with
    singular value at most ``rtol * sigma_max`` are dropped.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    if A.shape[0] >= A.shape[1]:
        Q, R = np.linalg.qr(A)
        U, s, _ = np.linalg.svd(R)
        U = Q @ U
    else:
        U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    rank = int(np.count_nonzero(s > rtol * s[0]))
    return U[:, :rank]


def leverage_scores(A: np.ndarray, rtol: float = RANK_TOL) -> np.ndarray:
    """Diagonal of the hat matrix of ``A``; the scores sum to ``rank(A)``."""
    U = orthonormal_basis(A, rtol)
    tau = np.einsum("ij,ij->i", U, U)
    return np.clip(tau, 0.0, 1.0)


def lewis_fixed_point_map(A: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``a_i^T (A^T W^{-1} A)^+ a_i`` for every row, via leverage of ``W^{-1/2} A``."""
    B = A / np.sqrt(w)[:, None]
    return w * leverage_scores(B)


def lewis_weights(A, p=1, tol=1e-8, max_iter=100, floor=1e-12):
    """l1 Lewis weights by fixed-point iteration ``w <- sqrt(a_i^T (A^T W^-1 A)^-1 a_i)``.

    Starts from the leverage scores and stops once the largest relative change
    falls to ``tol``.  Raises ``LewisConvergenceError`` if that does not happen
    within ``max_iter`` iterations.
    """
    if p != 1:
        raise ValueError("only p = 1 Lewis weights are supported")
    A = np.asarray(A, dtype=np.float64)
    w = np.maximum(leverage_scores(A), floor)
    if not np.any(w > floor):
        raise LewisConvergenceError("matrix has rank 0; weighted Gram matrix is singular")
    for _ in range(max_iter):
        w_new = np.maximum(np.sqrt(lewis_fixed_point_map(A, w)), floor)
        change = np.max(np.abs(w_new - w) / w)
        w = w_new
        if change <= tol:
            return w
    raise LewisConvergenceError(
        f"Lewis iteration did not converge in {max_iter} iterations (last change {change:.3g})"
    )


def lewis_residual(A, w) -> float:
    """Relative fixed-point residual ``max|w_i^2 - a_i^T (A^T W^-1 A)^-1 a_i| / max w_i^2``."""
    A = np.asarray(A, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    G = A.T @ (A / w[:, None])
    quad = np.einsum("ij,ij->i", A @ np.linalg.pinv(G), A)
    return float(np.max(np.abs(w**2 - quad)) / np.max(w**2))
