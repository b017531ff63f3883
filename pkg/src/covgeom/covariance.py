"""Local data matrices, local covariances and tangent/normal frames.

Two scale conventions coexist and are kept apart by
``LocalCovariance.normalized``:

* sample covariance ``G G^T`` (a sum over neighbors, no division), the form
  the LLE weight formulas expect;
* normalized covariance ``G G^T / (eps^2 N)``, the empirical version of the
  density-free covariance used by EIG distances.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._backend import kernels
from .errors import DegenerateFrameWarning, EmptyNeighborhood, InvalidInput
from .linalg import SymEig, as_symmetric, sym_eig
from .pointcloud import NeighborLists, NeighborSet, as_cloud


@dataclass(frozen=True, eq=False)
class LocalDataMatrix:
    """``p x N`` matrix whose column ``j`` is ``x_{k,j} - x_k``."""

    center: int
    columns: np.ndarray
    neighborhood: NeighborSet

    @property
    def count(self) -> int:
        return self.columns.shape[1]

    @property
    def p(self) -> int:
        return self.columns.shape[0]


@dataclass(frozen=True, eq=False)
class LocalCovariance:
    matrix: np.ndarray
    center: int
    scale: float
    count: int
    normalized: bool

    @cached_property
    def eig(self) -> SymEig:
        return sym_eig(self.matrix)

    @property
    def rank(self) -> int:
        return self.eig.rank


@dataclass(frozen=True, eq=False)
class TangentFrame:
    """Split of ``R^p`` into estimated tangent and normal subspaces at a point.

    ``spectral_gap`` is ``lambda_d / lambda_{d+1}`` (``inf`` when the
    ``(d+1)``-th eigenvalue vanishes, ``None`` when ``d == p``).
    ``degenerate`` marks a covariance whose rank is below ``d``.
    """

    center: int
    intrinsic_dim: int
    tangent_basis: np.ndarray
    normal_basis: np.ndarray
    eigenvalues: np.ndarray
    scale: float
    spectral_gap: float | None
    degenerate: bool = False

    @property
    def p(self) -> int:
        return self.tangent_basis.shape[0]

    def normal_projector(self) -> np.ndarray:
        N = self.normal_basis
        return N @ N.T


def local_data_matrix(cloud, nbrs: NeighborSet) -> LocalDataMatrix:
    cloud = as_cloud(cloud)
    idx = np.sort(np.asarray(nbrs.indices, dtype=np.intp))
    if len(idx) == 0:
        raise EmptyNeighborhood(nbrs.center)
    X = cloud.coords
    columns = (X[idx] - X[nbrs.center]).T.copy()
    nbrs = NeighborSet(nbrs.center, idx, nbrs.mode, nbrs.scale)
    return LocalDataMatrix(int(nbrs.center), columns, nbrs)


def sample_covariance(G: LocalDataMatrix) -> LocalCovariance:
    """``G G^T``, summed over neighbors."""
    M = as_symmetric(G.columns @ G.columns.T)
    return LocalCovariance(M, G.center, G.neighborhood.scale, G.count, normalized=False)


def normalized_covariance(G: LocalDataMatrix, eps: float) -> LocalCovariance:
    """``G G^T / (eps^2 N)``.

    The empirical covariance ``(1/n) sum d d^T`` and the neighborhood mass
    ``N/n`` share the factor ``1/n``, which cancels.
    """
    if not eps > 0:
        raise InvalidInput(f"eps must be positive, got {eps!r}")
    if G.count == 0:
        raise EmptyNeighborhood(G.center)
    M = as_symmetric(G.columns @ G.columns.T) / (eps * eps * G.count)
    return LocalCovariance(M, G.center, float(eps), G.count, normalized=True)


def gap_dimension(eigenvalues) -> int:
    """Diagnostic intrinsic-dimension guess: argmax of ``lambda_i / lambda_{i+1}``."""
    lam = np.asarray(eigenvalues, dtype=float)
    if len(lam) < 2:
        return len(lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = lam[:-1] / lam[1:]
    ratios[~np.isfinite(ratios) & (lam[:-1] > 0)] = np.inf
    ratios[np.isnan(ratios)] = 0.0
    return int(np.argmax(ratios)) + 1


def tangent_frame(C: LocalCovariance, d: int) -> TangentFrame:
    """Top ``d`` eigenvectors span the tangent estimate, the rest the normal one.

    A covariance of rank below ``d`` still yields a frame, flagged
    ``degenerate`` and accompanied by a :class:`DegenerateFrameWarning`.
    """
    p = C.matrix.shape[0]
    if int(d) != d or d < 1 or d > p:
        raise InvalidInput(f"intrinsic dimension must be in [1, {p}], got {d!r}")
    d = int(d)
    eig = C.eig
    lam = eig.eigenvalues
    degenerate = eig.rank < d
    if degenerate:
        warnings.warn(
            f"covariance at point {C.center} has rank {eig.rank} < d = {d}; "
            "tangent estimate is unreliable",
            DegenerateFrameWarning,
            stacklevel=2,
        )
    if d == p:
        gap = None
    elif lam[d] <= 0:
        gap = float("inf")
    else:
        gap = float(lam[d - 1] / lam[d])
    return TangentFrame(
        center=C.center,
        intrinsic_dim=d,
        tangent_basis=eig.eigenvectors[:, :d].copy(),
        normal_basis=eig.eigenvectors[:, d:].copy(),
        eigenvalues=lam.copy(),
        scale=C.scale,
        spectral_gap=gap,
        degenerate=degenerate,
    )


def project_normal(frame: TangentFrame, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (frame.p,):
        raise InvalidInput(f"expected a vector of length {frame.p}, got shape {v.shape}")
    N = frame.normal_basis
    return N @ (N.T @ v)


# --- batch versions -------------------------------------------------------


def local_moments(cloud, nbrs: NeighborLists):
    """Offset sums ``G 1`` and sample covariances ``G G^T`` for every row."""
    X = as_cloud(cloud).coords
    return kernels.local_moments(X, nbrs.centers, nbrs.indptr, nbrs.indices)


def local_covariances(cloud, nbrs: NeighborLists, eps: float | None = None) -> np.ndarray:
    """Stacked ``(m, p, p)`` covariances; normalized when ``eps`` is given."""
    _, second = local_moments(cloud, nbrs)
    if eps is not None:
        counts = nbrs.counts
        if np.any(counts == 0):
            raise EmptyNeighborhood(int(nbrs.centers[np.argmax(counts == 0)]))
        second = second / (eps * eps * counts)[:, None, None]
    return second


def stacked_eigh(covs: np.ndarray):
    """Batched eigendecomposition with eigenvalues descending."""
    w, U = np.linalg.eigh(covs)
    return w[:, ::-1], U[:, :, ::-1]


def stacked_ranks(w_desc: np.ndarray, rank_tol: float | None = None) -> np.ndarray:
    p = w_desc.shape[1]
    tol = p * np.finfo(np.float64).eps if rank_tol is None else rank_tol
    thresh = tol * np.max(np.abs(w_desc), axis=1)
    return np.count_nonzero(w_desc > thresh[:, None], axis=1)


def normal_projectors(covs: np.ndarray, d: int):
    """Projectors onto the span of eigenvectors ``d+1..p`` of each covariance.

    Returns ``(projectors, ranks)``.
    """
    w, U = stacked_eigh(covs)
    N = U[:, :, d:]
    return np.einsum("nik,njk->nij", N, N), stacked_ranks(w)
