# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled neighbor-loop kernels.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature and semantics; ``_backend`` picks one at import time.

Neighbor lists are CSR encoded: row ``r`` belongs to point ``centers[r]`` and
its neighbors are ``indices[indptr[r]:indptr[r + 1]]``.
"""
import numpy as np


def local_moments(const double[:, ::1] X, const Py_ssize_t[::1] centers,
                  const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] indices):
    """Offset sums and second moments for each neighbor list.

    Returns ``(sums, second)`` of shapes ``(m, p)`` and ``(m, p, p)`` with
    ``sums[r] = sum_j g_j`` and ``second[r] = sum_j g_j g_j^T`` where
    ``g_j = X[j] - X[centers[r]]``.
    """
    cdef Py_ssize_t m = centers.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    sums_arr = np.zeros((m, p), dtype=np.float64)
    second_arr = np.zeros((m, p, p), dtype=np.float64)
    g_arr = np.empty(p, dtype=np.float64)
    cdef double[:, ::1] S = sums_arr
    cdef double[:, :, ::1] M = second_arr
    cdef double[::1] g = g_arr
    cdef Py_ssize_t r, k, j, c, a, b
    with nogil:
        for r in range(m):
            c = centers[r]
            for k in range(indptr[r], indptr[r + 1]):
                j = indices[k]
                for a in range(p):
                    g[a] = X[j, a] - X[c, a]
                    S[r, a] += g[a]
                for a in range(p):
                    for b in range(a, p):
                        M[r, a, b] += g[a] * g[b]
            for a in range(p):
                for b in range(a + 1, p):
                    M[r, b, a] = M[r, a, b]
    return sums_arr, second_arr


def affine_weights(const double[:, ::1] X, const Py_ssize_t[::1] centers,
                   const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] indices,
                   const double[:, ::1] T):
    """Barycentric weights ``(1 - T_r.g_j) / (N_r - sum_j T_r.g_j)``.

    Returns ``(weights, denominators)``; ``weights`` is aligned with
    ``indices``.
    """
    cdef Py_ssize_t m = centers.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t nnz = indices.shape[0]
    w_arr = np.empty(nnz, dtype=np.float64)
    den_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef double[::1] den = den_arr
    cdef Py_ssize_t r, k, j, c, a
    cdef double dot, total
    with nogil:
        for r in range(m):
            c = centers[r]
            total = 0.0
            for k in range(indptr[r], indptr[r + 1]):
                j = indices[k]
                dot = 0.0
                for a in range(p):
                    dot = dot + T[r, a] * (X[j, a] - X[c, a])
                w[k] = 1.0 - dot
                total = total + dot
            total = (indptr[r + 1] - indptr[r]) - total
            den[r] = total
            if total != 0.0:
                for k in range(indptr[r], indptr[r + 1]):
                    w[k] = w[k] / total
    return w_arr, den_arr


def pair_quadratic_forms(const double[:, ::1] X, const Py_ssize_t[::1] rows,
                         const Py_ssize_t[::1] cols, const double[:, :, ::1] M):
    """``q[e] = d^T M[rows[e]] d`` with ``d = X[cols[e]] - X[rows[e]]``."""
    cdef Py_ssize_t ne = rows.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    q_arr = np.empty(ne, dtype=np.float64)
    d_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] q = q_arr
    cdef double[::1] d = d_arr
    cdef Py_ssize_t e, i, j, a, b
    cdef double acc, inner
    with nogil:
        for e in range(ne):
            i = rows[e]
            j = cols[e]
            for a in range(p):
                d[a] = X[j, a] - X[i, a]
            acc = 0.0
            for a in range(p):
                inner = 0.0
                for b in range(p):
                    inner = inner + M[i, a, b] * d[b]
                acc = acc + d[a] * inner
            q[e] = acc
    return q_arr
