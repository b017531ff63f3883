"""Numpy implementations of the neighbor-loop kernels (import fallback)."""
import numpy as np
from scipy import sparse


def _row_owner(indptr):
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def local_moments(X, centers, indptr, indices):
    m, p = len(centers), X.shape[1]
    nnz = len(indices)
    owner = _row_owner(indptr)
    G = X[indices] - X[centers[owner]]
    S = sparse.csr_matrix((np.ones(nnz), np.arange(nnz), indptr), shape=(m, nnz))
    sums = np.asarray(S @ G).reshape(m, p)
    outer = (G[:, :, None] * G[:, None, :]).reshape(nnz, p * p)
    second = np.asarray(S @ outer).reshape(m, p, p)
    return sums, second


def affine_weights(X, centers, indptr, indices, T):
    owner = _row_owner(indptr)
    G = X[indices] - X[centers[owner]]
    dots = np.einsum("ka,ka->k", T[owner], G)
    counts = np.diff(indptr)
    den = counts - np.bincount(owner, weights=dots, minlength=len(centers))
    safe = np.where(den != 0.0, den, 1.0)
    w = (1.0 - dots) / safe[owner]
    return w, den


def pair_quadratic_forms(X, rows, cols, M):
    D = X[cols] - X[rows]
    return np.einsum("ea,eab,eb->e", D, M[rows], D)
