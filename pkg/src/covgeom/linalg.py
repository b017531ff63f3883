"""Symmetric eigendecomposition, truncated and regularized inverses.

Local covariance matrices are small (``p x p``) and handled densely. The
``n x n`` spectral problems of the embedding step go through
:func:`smallest_eigenpairs`, which switches from a dense solver to ARPACK
above :data:`DENSE_LIMIT`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import InvalidInput, NoConvergence, RankExceeded

DENSE_LIMIT = 3000
_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class SymEig:
    """Eigen-decomposition of a symmetric matrix, eigenvalues descending.

    Attributes
    ----------
    eigenvalues : ndarray, shape (p,)
        ``lambda_1 >= ... >= lambda_p``.
    eigenvectors : ndarray, shape (p, p)
        Column ``i`` is the unit eigenvector for ``eigenvalues[i]``; each
        column's largest-magnitude entry is positive.
    rank : int
        Number of eigenvalues above the rank threshold.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.T


def as_symmetric(A) -> np.ndarray:
    """Validate a square finite matrix and return ``(A + A^T) / 2``."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (A + A.T)


def fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    if U.size == 0:
        return U
    rows = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[rows, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def rank_threshold(eigenvalues, rank_tol=None) -> float:
    scale = float(np.max(np.abs(eigenvalues))) if len(eigenvalues) else 0.0
    if rank_tol is None:
        rank_tol = len(eigenvalues) * _EPS
    return rank_tol * scale


def sym_eig(A, rank_tol: float | None = None) -> SymEig:
    """Sorted eigendecomposition of a symmetric matrix.

    ``rank_tol`` is relative to the largest eigenvalue magnitude; the default
    ``dim * eps`` is the usual numerical-rank rule.
    """
    A = as_symmetric(A)
    if rank_tol is not None and rank_tol < 0:
        raise InvalidInput("rank_tol must be nonnegative")
    w, U = np.linalg.eigh(A)
    w = w[::-1].copy()
    U = fix_signs(U[:, ::-1])
    rank = int(np.count_nonzero(w > rank_threshold(w, rank_tol)))
    return SymEig(w, U, rank)


def _spectral(A_or_eig) -> SymEig:
    return A_or_eig if isinstance(A_or_eig, SymEig) else sym_eig(A_or_eig)


def truncated_inverse(A, alpha: int) -> np.ndarray:
    """Inverse restricted to the top ``alpha`` eigenpairs.

    ``sum_{i <= alpha} u_i u_i^T / lambda_i``. At ``alpha == rank`` this is the
    Moore-Penrose pseudo-inverse. ``A`` may be a matrix or a :class:`SymEig`.
    """
    if int(alpha) != alpha or alpha < 1:
        raise InvalidInput(f"alpha must be a positive integer, got {alpha!r}")
    alpha = int(alpha)
    eig = _spectral(A)
    if alpha > eig.rank:
        raise RankExceeded(alpha, eig.rank)
    U = eig.eigenvectors[:, :alpha]
    out = (U / eig.eigenvalues[:alpha]) @ U.T
    return 0.5 * (out + out.T)


def regularized_inverse(A, c: float) -> np.ndarray:
    """``sum_{i <= rank} u_i u_i^T / (lambda_i + c)``; null directions dropped."""
    if not np.isfinite(c) or c <= 0:
        raise InvalidInput(f"regularizer c must be positive, got {c!r}")
    eig = _spectral(A)
    r = eig.rank
    U = eig.eigenvectors[:, :r]
    out = (U / (eig.eigenvalues[:r] + c)) @ U.T
    return 0.5 * (out + out.T)


def _operator_norm_estimate(op, n, rng) -> float:
    v = rng.standard_normal(n)
    for _ in range(20):
        w = op @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
    return float(np.linalg.norm(op @ v))


def smallest_eigenpairs(op, k: int, seed: int = 0, *, tol: float = 1e-8,
                        maxiter: int | None = None, dense_limit: int = DENSE_LIMIT):
    """The ``k`` smallest eigenpairs of a symmetric operator.

    Parameters
    ----------
    op : ndarray, sparse matrix or LinearOperator
        Symmetric ``n x n`` operator.
    k : int
        Number of eigenpairs, ``k <= n``.
    seed : int
        Seeds the start vector of the iterative path.
    tol : float
        Residual target ``||A v - lambda v|| <= tol * ||A||``.

    Returns
    -------
    eigenvalues : ndarray, shape (k,), ascending
    eigenvectors : ndarray, shape (n, k), unit columns
    """
    n = op.shape[0]
    if op.shape != (n, n):
        raise InvalidInput(f"operator must be square, got {op.shape}")
    if int(k) != k or k < 1 or k > n:
        raise InvalidInput(f"k must be in [1, {n}], got {k!r}")
    k = int(k)
    rng = np.random.default_rng(seed)

    if n <= dense_limit:
        if isinstance(op, splinalg.LinearOperator):
            A = op @ np.eye(n)
        elif sparse.issparse(op):
            A = op.toarray()
        else:
            A = np.asarray(op, dtype=np.float64)
        A = as_symmetric(A)
        w_all, V_all = np.linalg.eigh(A)
        w, V = w_all[:k], fix_signs(V_all[:, :k])
        norm = float(np.max(np.abs(w_all)))
        op = A
    else:
        v0 = rng.standard_normal(n)
        norm = _operator_norm_estimate(op, n, rng)
        # ARPACK's internal tolerance is relative to each Ritz value, which is
        # far stricter than needed near zero; the residual is checked below.
        try:
            if sparse.issparse(op):
                shift = -1e-6 * max(norm, 1.0)
                w, V = splinalg.eigsh(op.tocsc(), k=k, sigma=shift, which="LM",
                                      v0=v0, maxiter=maxiter, tol=0)
            else:
                w, V = splinalg.eigsh(op, k=k, which="SA", v0=v0,
                                      maxiter=maxiter, tol=0)
        except splinalg.ArpackNoConvergence as exc:
            res = _max_residual(op, exc.eigenvalues, exc.eigenvectors) if len(
                exc.eigenvalues) else float("inf")
            raise NoConvergence("eigsh did not converge", res) from exc
        order = np.argsort(w)
        w, V = w[order], fix_signs(V[:, order])

    res = _max_residual(op, w, V)
    if res > tol * max(norm, 1.0):
        raise NoConvergence(f"{k} smallest eigenpairs not resolved", res)
    return w, V


def _max_residual(op, w, V) -> float:
    R = op @ V - V * w
    return float(np.max(np.linalg.norm(R, axis=0))) if len(w) else 0.0
