"""EIG distances between observations of a deformed latent manifold.

Observations are ``y = Phi(x)`` for latent points ``x`` on a manifold ``M``.
The neighborhood of ``y`` is the ellipsoid ``Phi(B_eps(x))``; here it is read
off the latent geodesic oracle, i.e. the ellipsoid is assumed known. With
``Cbar(y)`` the normalized covariance over that ellipsoid::

    EIG_alpha(y, z)^2 = (y - z)^T [(T_alpha(Cbar(y)) + T_alpha(Cbar(z))) / 2] (y - z)

and ``EIG_d`` approximates ``sqrt(d + 2)`` times the latent geodesic distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._backend import kernels
from .covariance import (LocalCovariance, local_covariances, local_data_matrix,
                         normalized_covariance, stacked_eigh, stacked_ranks)
from .errors import CovGeomError, EmptyNeighborhood, InvalidInput, RankExceeded
from .linalg import truncated_inverse
from .manifolds import ManifoldSample
from .pointcloud import NeighborLists, NeighborSet, PointCloud, as_cloud, radius_neighbors

# --- deformations -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Deformation:
    """Named smooth map applied row-wise to latent coordinates."""

    name: str
    params: dict
    fn: object = field(repr=False)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.fn(np.asarray(X, dtype=float))


def identity() -> Deformation:
    return Deformation("identity", {}, lambda X: X.copy())


def linear_scaling(scales) -> Deformation:
    """Anisotropic scaling ``x -> diag(scales) x``."""
    s = np.asarray(scales, dtype=float)
    if s.ndim != 1 or np.any(s == 0):
        raise InvalidInput("scales must be a vector of nonzero factors")

    def fn(X):
        if X.shape[1] != len(s):
            raise InvalidInput(f"deformation expects dimension {len(s)}, got {X.shape[1]}")
        return X * s

    return Deformation("linear", {"scales": tuple(s.tolist())}, fn)


def monotone_warp(a: float = 0.1, b: float = 5.0) -> Deformation:
    """Coordinatewise ``x -> x + a sin(b x)``; needs ``|a b| < 1``."""
    if not abs(a * b) < 1:
        raise InvalidInput("monotone warp needs |a * b| < 1")
    return Deformation("warp", {"a": a, "b": b}, lambda X: X + a * np.sin(b * X))


def sphere_bend(b: float = 0.5, stretch: float = 1.0) -> Deformation:
    """Embed ``S^2`` into ``R^4``: ``(x, y, z) -> (stretch x, y, z, b (x^2 - y^2))``."""

    def fn(X):
        if X.shape[1] != 3:
            raise InvalidInput("sphere bending expects points in R^3")
        return np.c_[stretch * X[:, 0], X[:, 1], X[:, 2], b * (X[:, 0] ** 2 - X[:, 1] ** 2)]

    return Deformation("bend", {"b": b, "stretch": stretch}, fn)


DEFORMATIONS = {
    "identity": identity,
    "linear": linear_scaling,
    "warp": monotone_warp,
    "bend": sphere_bend,
}


def make_deformation(name: str, **params) -> Deformation:
    if name not in DEFORMATIONS:
        raise InvalidInput(f"unknown deformation {name!r}; choose from {sorted(DEFORMATIONS)}")
    return DEFORMATIONS[name](**params)


@dataclass(frozen=True, eq=False)
class DeformedDataset:
    """Latent sample paired row by row with its observed image."""

    latent: ManifoldSample
    observed: PointCloud
    deformation: Deformation

    def __post_init__(self):
        if self.latent.n != self.observed.n:
            raise InvalidInput("latent and observed point counts differ")

    @property
    def n(self) -> int:
        return self.latent.n

    @property
    def intrinsic_dim(self) -> int:
        return self.latent.intrinsic_dim


def deform(sample: ManifoldSample, deformation: Deformation) -> DeformedDataset:
    return DeformedDataset(sample, PointCloud(deformation(sample.cloud.coords)), deformation)


@dataclass(frozen=True)
class EigParams:
    alpha: int
    eps: float

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 1:
            raise InvalidInput(f"alpha must be a positive integer, got {self.alpha!r}")
        if not self.eps > 0:
            raise InvalidInput(f"eps must be positive, got {self.eps!r}")


# --- neighborhoods ----------------------------------------------------------


def _check_index(data, i):
    if int(i) != i or not 0 <= i < data.n:
        raise IndexError(f"index {i!r} out of range for {data.n} points")
    return int(i)


def ellipsoid_neighbors(data: DeformedDataset, i: int, eps: float) -> NeighborSet:
    """Points whose latent geodesic distance to point ``i`` is at most ``eps``."""
    i = _check_index(data, i)
    if not eps > 0:
        raise InvalidInput("eps must be positive")
    g = data.latent.geodesic_from(i)
    mask = g <= eps
    mask[i] = False
    idx = np.flatnonzero(mask).astype(np.intp)
    if len(idx) == 0:
        raise EmptyNeighborhood(i)
    return NeighborSet(i, idx, "ellipsoid", float(eps))


def ellipsoid_neighbor_lists(data: DeformedDataset, eps: float, centers=None) -> NeighborLists:
    """:func:`ellipsoid_neighbors` for many centers; empty rows are kept."""
    chart = data.latent.latent_chart()
    centers = (np.arange(data.n, dtype=np.intp) if centers is None
               else np.asarray(centers, dtype=np.intp))
    tree = cKDTree(chart)
    # chord <= geodesic, so the eps chord ball contains every candidate
    cand = tree.query_ball_point(chart[centers], eps * (1 + 1e-9))
    rows = []
    for c, js in zip(centers, cand):
        js = np.asarray(js, dtype=np.intp)
        js = np.sort(js[js != c])
        g = data.latent.geodesic_pairs(np.full(len(js), c), js)
        rows.append(js[g <= eps])
    return NeighborLists.from_rows(centers, rows, "ellipsoid", float(eps))


def observed_ball_neighbors(data: DeformedDataset, i: int, eps: float) -> NeighborSet:
    """Ablation only: a Euclidean ball in observation space instead of the ellipsoid."""
    nb = radius_neighbors(data.observed, i, eps)
    if len(nb) == 0:
        raise EmptyNeighborhood(i)
    return nb


def ellipsoid_covariance(data: DeformedDataset, i: int, eps: float) -> LocalCovariance:
    G = local_data_matrix(data.observed, ellipsoid_neighbors(data, i, eps))
    return normalized_covariance(G, eps)


# --- distances --------------------------------------------------------------


def _quadratic(delta, Ti, Tj) -> float:
    q = 0.5 * (delta @ Ti @ delta + delta @ Tj @ delta)
    return math.sqrt(max(q, 0.0))


def eig_distance(data: DeformedDataset, i: int, j: int, params: EigParams) -> float:
    """EIG distance of order ``params.alpha`` between observations ``i`` and ``j``."""
    i = _check_index(data, i)
    j = _check_index(data, j)
    if i == j:
        return 0.0
    Ti = _truncated_at(data, i, params)
    Tj = _truncated_at(data, j, params)
    X = data.observed.coords
    return _quadratic(X[j] - X[i], Ti, Tj)


def _truncated_at(data, i, params):
    C = ellipsoid_covariance(data, i, params.eps)
    try:
        return truncated_inverse(C.eig, params.alpha)
    except RankExceeded as exc:
        raise RankExceeded(exc.alpha, exc.rank, i) from None


@dataclass
class EigDistanceBatch:
    """Per-pair EIG results; failed pairs carry ``nan`` and appear in ``errors``."""

    results: list
    errors: dict

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)


def eig_distance_matrix(data: DeformedDataset, pairs, params: EigParams) -> EigDistanceBatch:
    """EIG distances for a list of index pairs.

    Each point's truncated inverse is computed once. Errors (empty
    ellipsoid, rank below alpha) are collected per pair.
    """
    pairs = [(int(a), int(b)) for a, b in pairs]
    cache: dict[int, object] = {}

    def get(i):
        if i not in cache:
            try:
                cache[i] = _truncated_at(data, _check_index(data, i), params)
            except CovGeomError as exc:
                cache[i] = exc
        return cache[i]

    X = data.observed.coords
    results, errors = [], {}
    for a, b in pairs:
        if a == b:
            _check_index(data, a)
            results.append(((a, b), 0.0))
            continue
        Ta, Tb = get(a), get(b)
        bad = Ta if isinstance(Ta, Exception) else Tb if isinstance(Tb, Exception) else None
        if bad is not None:
            errors[(a, b)] = bad
            results.append(((a, b), math.nan))
            continue
        results.append(((a, b), _quadratic(X[b] - X[a], Ta, Tb)))
    return EigDistanceBatch(results, errors)


@dataclass(frozen=True, eq=False)
class EllipsoidSpectra:
    """Eigen-decompositions of every normalized ellipsoid covariance."""

    eigenvalues: np.ndarray   # (n, q), descending
    eigenvectors: np.ndarray  # (n, q, q)
    ranks: np.ndarray
    counts: np.ndarray
    eps: float

    def truncated_inverses(self, alpha: int, unnormalized_counts=None):
        """Stacked ``T_alpha`` and a mask of points whose rank admits ``alpha``.

        Rank-deficient and empty-neighborhood points get a zero matrix.
        """
        ok = (self.ranks >= alpha) & (self.counts > 0)
        U = self.eigenvectors[:, :, :alpha]
        lam = self.eigenvalues[:, :alpha]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(ok[:, None], 1.0 / lam, 0.0)
        T = np.einsum("nik,nk,njk->nij", U, inv, U)
        return np.ascontiguousarray(T), ok


def ellipsoid_spectra(data: DeformedDataset, eps: float, normalized: bool = True,
                      nbrs: NeighborLists | None = None) -> EllipsoidSpectra:
    """Batch spectra of the ellipsoid covariances.

    ``normalized=False`` uses the raw empirical covariance ``G G^T / n``
    (no mass normalization), for comparisons only.
    """
    nbrs = nbrs if nbrs is not None else ellipsoid_neighbor_lists(data, eps)
    counts = nbrs.counts
    covs = local_covariances(data.observed, nbrs)
    if normalized:
        covs = covs / (eps * eps * np.maximum(counts, 1))[:, None, None]
    else:
        covs = covs / data.n
    w, U = stacked_eigh(covs)
    return EllipsoidSpectra(w, U, stacked_ranks(w), counts, float(eps))


def eig_distances_vectorized(data: DeformedDataset, rows, cols, alpha: int,
                             spectra: EllipsoidSpectra):
    """EIG distances for aligned index arrays; returns ``(distances, valid)``.

    Pairs touching a point whose rank is below ``alpha`` are invalid
    (distance ``nan``) rather than raising.
    """
    rows = np.ascontiguousarray(rows, dtype=np.intp)
    cols = np.ascontiguousarray(cols, dtype=np.intp)
    T, ok = spectra.truncated_inverses(alpha)
    X = data.observed.coords
    qa = kernels.pair_quadratic_forms(X, rows, cols, T)
    qb = kernels.pair_quadratic_forms(X, cols, rows, T)
    dist = np.sqrt(np.maximum(0.5 * (qa + qb), 0.0))
    valid = ok[rows] & ok[cols]
    dist[~valid] = np.nan
    return dist, valid


def close_pairs(data: DeformedDataset, t_max: float):
    """Latent pairs ``i < j`` with geodesic distance ``<= t_max`` and their distances."""
    chart = data.latent.latent_chart()
    P = cKDTree(chart).query_pairs(t_max * (1 + 1e-9), output_type="ndarray").astype(np.intp)
    if len(P) == 0:
        return P.reshape(0, 2), np.empty(0)
    P.sort(axis=1)
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    t = data.latent.geodesic_pairs(P[:, 0], P[:, 1])
    keep = (t <= t_max) & (t > 0)
    return P[keep], t[keep]


# --- alpha sensitivity -------------------------------------------------------


@dataclass
class ScanRow:
    alpha: int
    t: float
    mean_rel_error: float
    n_pairs: int

    @property
    def empty(self) -> bool:
        return self.n_pairs == 0


@dataclass
class AlphaScan:
    rows: list
    skipped_points: dict   # alpha -> number of points with rank < alpha
    d: int
    rel_width: float

    def for_alpha(self, alpha: int) -> list:
        return [r for r in self.rows if r.alpha == alpha]

    def exponent(self, alpha: int, t_min=None, t_max=None) -> float:
        """Least-squares slope of log(mean relative error) against log(t)."""
        pts = [(r.t, r.mean_rel_error) for r in self.for_alpha(alpha)
               if not r.empty and r.mean_rel_error > 0
               and (t_min is None or r.t >= t_min) and (t_max is None or r.t <= t_max)]
        if len(pts) < 2:
            return math.nan
        t, e = np.log(np.array(pts)).T
        return float(np.polyfit(t, e, 1)[0])

    def error_at(self, alpha: int, t: float) -> float:
        for r in self.for_alpha(alpha):
            if np.isclose(r.t, t):
                return r.mean_rel_error
        raise KeyError((alpha, t))


def alpha_sensitivity_scan(data: DeformedDataset, alphas, params: EigParams, t_values,
                           rel_width: float = 0.1, max_pairs_per_bucket: int | None = None,
                           seed: int = 0) -> AlphaScan:
    """Mean relative error ``|EIG_alpha / (sqrt(d + 2) t) - 1|`` per (alpha, t) bucket.

    A bucket collects pairs whose latent geodesic distance is within
    ``rel_width * t`` of ``t``. Empty buckets are reported with ``nan``.
    ``params.alpha`` is ignored; ``params.eps`` sets the ellipsoid scale.
    """
    t_values = np.asarray(sorted(t_values), dtype=float)
    if np.any(t_values <= 0):
        raise InvalidInput("t values must be positive")
    d = data.intrinsic_dim
    spectra = ellipsoid_spectra(data, params.eps)
    P, t = close_pairs(data, t_values.max() * (1 + rel_width))
    rng = np.random.default_rng(seed)
    buckets = []
    for tv in t_values:
        sel = np.flatnonzero(np.abs(t - tv) <= rel_width * tv)
        if max_pairs_per_bucket is not None and len(sel) > max_pairs_per_bucket:
            sel = np.sort(rng.choice(sel, max_pairs_per_bucket, replace=False))
        buckets.append(sel)
    rows, skipped = [], {}
    norm = math.sqrt(d + 2)
    for alpha in alphas:
        alpha = int(alpha)
        _, ok = spectra.truncated_inverses(alpha)
        skipped[alpha] = int(np.count_nonzero(~ok))
        for tv, sel in zip(t_values, buckets):
            if len(sel) == 0:
                rows.append(ScanRow(alpha, float(tv), math.nan, 0))
                continue
            dist, valid = eig_distances_vectorized(data, P[sel, 0], P[sel, 1], alpha, spectra)
            rel = np.abs(dist[valid] / (norm * t[sel][valid]) - 1.0)
            rows.append(ScanRow(alpha, float(tv),
                                float(rel.mean()) if len(rel) else math.nan, int(len(rel))))
    return AlphaScan(rows, skipped, d, rel_width)


def as_dataset(cloud, latent: ManifoldSample | None = None) -> DeformedDataset:
    """Wrap an observed cloud with its latent sample (identity deformation if absent)."""
    cloud = as_cloud(cloud)
    if latent is None:
        raise InvalidInput("a latent sample is required for ellipsoid neighborhoods")
    return DeformedDataset(latent, cloud, identity())
