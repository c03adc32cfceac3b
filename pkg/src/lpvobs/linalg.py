"""Small dense linear-algebra helpers: SVD-based rank, pseudoinverse and
induced 2-norms that stay total on empty (0-row/0-column) matrices."""

from __future__ import annotations

import numpy as np

DEFAULT_RANK_TOL = 1e-10


def spectral_norm(M: np.ndarray) -> float:
    """Induced 2-norm (largest singular value); 0.0 for empty matrices."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if min(M.shape) == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def svd_rank(M: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank: singular values above rank_tol * largest singular value."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if min(M.shape) == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def pinv_tol(M: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with the same relative cutoff as
    svd_rank, so rank decisions and inverse construction agree."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if min(M.shape) == 0:
        return np.zeros((M.shape[1], M.shape[0]))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = rank_tol * s[0] if s[0] > 0.0 else np.inf
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return Vt.T @ (inv[:, None] * U.T)


def spectral_radius(M: np.ndarray) -> float:
    """Largest eigenvalue magnitude; 0.0 for the 0x0 matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def sym_min_eig(M: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetrized matrix."""
    M = np.asarray(M, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())


def cond_2(M: np.ndarray) -> float:
    """2-norm condition number; inf when singular, 1.0 for empty matrices."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if min(M.shape) == 0:
        return 1.0
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])
