"""LLE and LDR-LLE weights, the LLE matrix, embeddings and spectra.

Both weight variants share one formula. With ``G`` the local data matrix,
``C = G G^T`` and ``T = F(C) G 1``::

    w = (1 - G^T T) / (N - 1^T G^T T)

Classic LLE takes ``F`` = regularized inverse with constant ``c``; LDR-LLE
takes ``F`` = truncated inverse of order ``d``, which drops the curvature
directions and yields the Laplace-Beltrami operator without density
correction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg
from scipy.spatial.distance import cdist

from ._backend import kernels
from .covariance import LocalDataMatrix, local_moments, stacked_eigh, stacked_ranks
from .errors import InvalidInput, IsolatedPoint, NoConvergence, RankExceeded, SingularWeights
from .linalg import (DENSE_LIMIT, regularized_inverse, smallest_eigenpairs, sym_eig,
                     truncated_inverse)
from .pointcloud import as_cloud, knn_neighbor_lists, radius_neighbor_lists

SINGULAR_TOL = 1e-12
REG_FACTOR = 1e-3


@dataclass(frozen=True, eq=False)
class WeightRow:
    center: int
    neighbors: np.ndarray
    weights: np.ndarray


def default_regularizer(trace: float, count: int) -> float:
    """``1e-3 * trace(G G^T) / N``."""
    return REG_FACTOR * trace / count


def _weights_from_T(G: LocalDataMatrix, T: np.ndarray) -> WeightRow:
    if G.count == 1:
        # the sum-to-one constraint alone fixes a lone neighbor's weight
        return WeightRow(G.center, G.neighborhood.indices.copy(), np.ones(1))
    a = G.columns.T @ T
    den = G.count - a.sum()
    if abs(den) < SINGULAR_TOL * G.count:
        raise SingularWeights(G.center, den)
    return WeightRow(G.center, G.neighborhood.indices.copy(), (1.0 - a) / den)


def lle_weights(G: LocalDataMatrix, c: float | None = None) -> WeightRow:
    """Regularized barycentric weights through the covariance form.

    ``c=None`` uses :func:`default_regularizer`.
    """
    C = G.columns @ G.columns.T
    if c is None:
        c = default_regularizer(np.trace(C), G.count)
    if c == 0:
        # every neighbor coincides with the center
        T = np.zeros(G.p)
    else:
        T = regularized_inverse(C, c) @ G.columns.sum(axis=1)
    return _weights_from_T(G, T)


def lle_weights_gram(G: LocalDataMatrix, c: float) -> WeightRow:
    """Same weights from the ``N x N`` regularized Gram system (cross-check)."""
    K = G.columns.T @ G.columns + c * np.eye(G.count)
    y = np.linalg.solve(K, np.ones(G.count))
    return WeightRow(G.center, G.neighborhood.indices.copy(), y / y.sum())


def ldr_lle_weights(G: LocalDataMatrix, d: int) -> WeightRow:
    """Truncated-inverse (LDR-LLE) barycentric weights of order ``d``."""
    C = G.columns @ G.columns.T
    eig = sym_eig(C)
    if d > eig.rank:
        raise RankExceeded(d, eig.rank, G.center)
    T = truncated_inverse(eig, d) @ G.columns.sum(axis=1)
    return _weights_from_T(G, T)


@dataclass(frozen=True, eq=False)
class LLEMatrix:
    """Row-stochastic-in-sum (rows sum to one, entries may be negative) matrix."""

    matrix: sparse.csr_matrix
    variant: str

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def identity_minus(self) -> sparse.csr_matrix:
        return (sparse.identity(self.n, format="csr") - self.matrix).tocsr()


def _batch_T(sums, covs, centers, variant: str, d: int | None, c: float | None, counts):
    w, U = stacked_eigh(covs)
    ranks = stacked_ranks(w)
    if variant == "truncated":
        bad = np.flatnonzero(ranks < d)
        if len(bad):
            r = bad[0]
            raise RankExceeded(d, int(ranks[r]), int(centers[r]))
        Ud, wd = U[:, :, :d], w[:, :d]
        coef = np.einsum("nik,ni->nk", Ud, sums) / wd
        return np.einsum("nik,nk->ni", Ud, coef)
    if c is None:
        cs = REG_FACTOR * np.trace(covs, axis1=1, axis2=2) / counts
    else:
        cs = np.full(len(centers), float(c))
    p = covs.shape[1]
    keep = np.arange(p)[None, :] < ranks[:, None]
    with np.errstate(divide="ignore"):
        inv = np.where(keep, 1.0 / (w + cs[:, None]), 0.0)
    coef = np.einsum("nik,ni->nk", U, sums) * inv
    return np.einsum("nik,nk->ni", U, coef)


def assemble_lle_matrix(cloud, *, h: float | None = None, k: int | None = None,
                        variant: str = "truncated", d: int | None = None,
                        c: float | None = None) -> LLEMatrix:
    """Assemble ``W`` row by row from radius (``h``) or k-NN (``k``) neighborhoods.

    ``variant="truncated"`` (LDR-LLE) needs ``d``; ``variant="regularized"``
    uses ``c`` or the scale-aware default per row.
    """
    cloud = as_cloud(cloud)
    if (h is None) == (k is None):
        raise InvalidInput("give exactly one of h (radius) or k (nearest neighbors)")
    if variant not in ("truncated", "regularized"):
        raise InvalidInput(f"unknown variant {variant!r}")
    if variant == "truncated" and (d is None or int(d) != d or d < 1):
        raise InvalidInput("truncated variant needs a positive intrinsic dimension d")
    if c is not None and not c > 0:
        raise InvalidInput("regularizer c must be positive")
    nbrs = radius_neighbor_lists(cloud, h) if h is not None else knn_neighbor_lists(cloud, k)
    counts = nbrs.counts
    if np.any(counts == 0):
        raise IsolatedPoint(int(nbrs.centers[np.argmax(counts == 0)]))
    sums, covs = local_moments(cloud, nbrs)
    T = _batch_T(sums, covs, nbrs.centers, variant, None if d is None else int(d), c, counts)
    wts, den = kernels.affine_weights(cloud.coords, nbrs.centers, nbrs.indptr, nbrs.indices,
                                      np.ascontiguousarray(T))
    lone = counts == 1
    wts[nbrs.indptr[:-1][lone]] = 1.0
    bad = np.flatnonzero((np.abs(den) < SINGULAR_TOL * counts) & ~lone)
    if len(bad):
        raise SingularWeights(int(nbrs.centers[bad[0]]), float(den[bad[0]]))
    W = sparse.csr_matrix((wts, nbrs.indices, nbrs.indptr), shape=(cloud.n, cloud.n))
    return LLEMatrix(W, variant)


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    """``coordinates[:, i]`` is the eigenvector for ``spectrum[i]``.

    ``trivial_index`` points at the near-constant eigenvector, if present.
    """

    coordinates: np.ndarray
    spectrum: np.ndarray
    trivial_index: int | None


def embed(W: LLEMatrix, ell: int, seed: int = 0) -> EmbeddingResult:
    """Eigenvectors of ``(I - W)^T (I - W)`` for the ``ell`` smallest eigenvalues."""
    n = W.n
    if int(ell) != ell or ell < 1 or ell >= n:
        raise InvalidInput(f"ell must satisfy 1 <= ell < n = {n}, got {ell!r}")
    A = W.identity_minus()
    if n <= DENSE_LIMIT:
        Ad = A.toarray()
        op = Ad.T @ Ad
    else:
        op = (A.T @ A).tocsr()
    vals, vecs = smallest_eigenpairs(op, int(ell), seed=seed)
    ones = np.ones(n) / np.sqrt(n)
    overlap = np.abs(ones @ vecs)
    trivial = int(np.argmax(overlap)) if overlap.max() > 0.99 else None
    return EmbeddingResult(vecs, vals, trivial)


def laplacian_eigenvalues(W: LLEMatrix, h: float, d: int, k: int, *, seed: int = 0,
                          operator: str = "direct", return_imag: bool = False):
    """Smallest ``k`` eigenvalues of ``(2 (d + 2) / h^2) (I - W)``, ascending.

    ``operator="direct"`` takes real parts of the non-symmetric spectrum;
    ``operator="singular"`` uses the singular values of the same matrix (the
    square roots of the ``(I - W)^T (I - W)`` spectrum) for comparison.
    With ``return_imag`` the imaginary parts of the returned eigenvalues are
    also given.
    """
    if not h > 0:
        raise InvalidInput("h must be positive")
    n = W.n
    if int(k) != k or k < 1 or k > n:
        raise InvalidInput(f"k must be in [1, {n}]")
    k = int(k)
    scale = 2.0 * (d + 2) / (h * h)
    A = W.identity_minus() * scale
    if operator == "singular":
        if n <= DENSE_LIMIT:
            s = np.linalg.svd(A.toarray(), compute_uv=False)[::-1][:k]
        else:
            vals, _ = smallest_eigenpairs((A.T @ A).tocsr(), k, seed=seed)
            s = np.sqrt(np.clip(vals, 0, None))
        return (s, np.zeros(k)) if return_imag else s
    if operator != "direct":
        raise InvalidInput(f"unknown operator {operator!r}")
    if n <= DENSE_LIMIT:
        ev = np.linalg.eigvals(A.toarray())
    else:
        rng = np.random.default_rng(seed)
        try:
            ev = splinalg.eigs(A.tocsc(), k=k, sigma=-1e-3, which="LM",
                               v0=rng.standard_normal(n), return_eigenvectors=False)
        except splinalg.ArpackNoConvergence as exc:
            raise NoConvergence("eigs did not converge") from exc
    order = np.lexsort((ev.imag, ev.real))[:k]
    ev = ev[order]
    return (ev.real.copy(), ev.imag.copy()) if return_imag else ev.real.copy()


def diffusion_maps_eigenvalues(cloud, h: float, normalization_alpha: float = 1.0,
                               k: int = 7, *, cutoff: float = 6.0, seed: int = 0) -> np.ndarray:
    """Laplacian estimates ``(1 - mu) 4 / h^2`` from alpha-normalized diffusion maps.

    Kernel ``exp(-||x_i - x_j||^2 / h^2)`` truncated at ``cutoff * h``,
    density normalization ``K <- D^-a K D^-a`` and Markov normalization; the
    Markov eigenvalues come from the symmetric conjugate.
    """
    cloud = as_cloud(cloud)
    if not h > 0:
        raise InvalidInput("h must be positive")
    if not 0.0 <= normalization_alpha <= 1.0:
        raise InvalidInput("normalization_alpha must lie in [0, 1]")
    n = cloud.n
    if int(k) != k or k < 1 or k > n:
        raise InvalidInput(f"k must be in [1, {n}]")
    k = int(k)
    X = cloud.coords
    if n <= DENSE_LIMIT:
        D2 = cdist(X, X, "sqeuclidean")
        K = np.exp(-D2 / (h * h))
        K[D2 > (cutoff * h) ** 2] = 0.0
    else:
        nbrs = radius_neighbor_lists(cloud, cutoff * h)
        owner = np.repeat(np.arange(n), nbrs.counts)
        diff = X[nbrs.indices] - X[owner]
        vals = np.exp(-np.sum(diff * diff, axis=1) / (h * h))
        K = sparse.csr_matrix((vals, nbrs.indices, nbrs.indptr), shape=(n, n))
        K = K + sparse.identity(n, format="csr")
    q = np.asarray(K.sum(axis=1)).ravel()
    qa = q ** -normalization_alpha
    if sparse.issparse(K):
        Ka = sparse.diags(qa) @ K @ sparse.diags(qa)
    else:
        Ka = K * np.outer(qa, qa)
    deg = np.asarray(Ka.sum(axis=1)).ravel()
    s = 1.0 / np.sqrt(deg)
    if sparse.issparse(Ka):
        S = (sparse.diags(s) @ Ka @ sparse.diags(s)).tocsr()
        L = (sparse.identity(n, format="csr") - S) * (4.0 / (h * h))
        mu, _ = smallest_eigenpairs(L.tocsr(), k, seed=seed)
        return np.sort(mu)
    S = Ka * np.outer(s, s)
    mu = np.linalg.eigvalsh(0.5 * (S + S.T))[::-1][:k]
    return np.sort((1.0 - mu) * 4.0 / (h * h))

