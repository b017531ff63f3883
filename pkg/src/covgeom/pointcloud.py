"""Point clouds, CSV ingestion and exact neighbor search.

Neighborhoods use the closed ball ``||x_j - x_c|| <= h``. Batch queries go
through a k-d tree but every candidate is re-checked with the same distance
formula as the single-point brute-force scan, so both paths agree exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import FormatError, InvalidInput, ParseError

# k-d tree radius inflation; candidates are filtered exactly afterwards
_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Immutable ``n x p`` set of finite points."""

    coords: np.ndarray

    def __post_init__(self):
        X = np.array(self.coords, dtype=np.float64, copy=True, order="C")
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInput(f"point cloud must be a non-empty n x p array, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidInput("point cloud has non-finite coordinates")
        X.setflags(write=False)
        object.__setattr__(self, "coords", X)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def p(self) -> int:
        return self.coords.shape[1]

    def __len__(self):
        return self.n

    def transformed(self, R=None, shift=None) -> "PointCloud":
        """Apply ``x -> R x + shift`` to every point."""
        X = self.coords if R is None else self.coords @ np.asarray(R, dtype=float).T
        if shift is not None:
            X = X + np.asarray(shift, dtype=float)
        return PointCloud(X)

    def padded(self, p: int) -> "PointCloud":
        """Zero-pad the coordinates to ambient dimension ``p``."""
        if p < self.p:
            raise InvalidInput("cannot pad to a smaller dimension")
        return PointCloud(np.hstack([self.coords, np.zeros((self.n, p - self.p))]))


def as_cloud(data) -> PointCloud:
    return data if isinstance(data, PointCloud) else PointCloud(data)


def load_csv(path) -> PointCloud:
    """Read a headerless comma-separated file, one point per row.

    Raises
    ------
    FormatError
        Empty file or rows with differing column counts.
    ParseError
        A cell that is not a finite decimal number (1-based line/column).
    """
    text = Path(path).read_bytes().decode("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty file", line=1)
    rows = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        if line.strip() == "":
            raise FormatError("blank line", line=lineno)
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"expected {width} columns, found {len(cells)}", line=lineno)
        row = []
        for col, cell in enumerate(cells, start=1):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(lineno, col, cell) from None
            if not np.isfinite(value):
                raise ParseError(lineno, col, cell)
            row.append(value)
        rows.append(row)
    return PointCloud(np.array(rows))


def format_float(x) -> str:
    return format(float(x), ".17g")


def save_csv(data, path) -> None:
    """Write points (or any 2-d array) in the ingestion format."""
    X = data.coords if isinstance(data, PointCloud) else np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    with open(path, "w", newline="\n") as fh:
        for row in X:
            fh.write(",".join(format_float(v) for v in row) + "\n")


@dataclass(frozen=True, eq=False)
class NeighborSet:
    """Neighbors of one center, sorted by index, center excluded.

    ``mode`` is ``"radius"`` (``scale`` = h), ``"knn"`` (``scale`` = k) or
    ``"ellipsoid"`` (``scale`` = latent radius eps).
    """

    center: int
    indices: np.ndarray
    mode: str
    scale: float

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class NeighborLists:
    """CSR-encoded neighborhoods for many centers.

    Row ``r`` holds the sorted neighbors of point ``centers[r]``.
    """

    centers: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    mode: str
    scale: float

    def __len__(self):
        return len(self.centers)

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    def row(self, r: int) -> np.ndarray:
        return self.indices[self.indptr[r]:self.indptr[r + 1]]

    def neighbor_set(self, r: int) -> NeighborSet:
        return NeighborSet(int(self.centers[r]), self.row(r), self.mode, self.scale)

    @classmethod
    def from_rows(cls, centers, rows, mode, scale) -> "NeighborLists":
        counts = np.fromiter((len(r) for r in rows), dtype=np.intp, count=len(rows))
        indptr = np.zeros(len(rows) + 1, dtype=np.intp)
        np.cumsum(counts, out=indptr[1:])
        indices = (np.concatenate(rows).astype(np.intp) if len(rows)
                   else np.empty(0, dtype=np.intp))
        return cls(np.asarray(centers, dtype=np.intp), indptr, indices, mode, scale)


def distances_from(X: np.ndarray, center: int, idx=None) -> np.ndarray:
    """Euclidean distances from ``X[center]``; the one formula used everywhere."""
    Y = X if idx is None else X[idx]
    D = Y - X[center]
    return np.sqrt(np.sum(D * D, axis=1))


def _check_center(cloud: PointCloud, center) -> int:
    if int(center) != center or not 0 <= center < cloud.n:
        raise IndexError(f"center {center!r} out of range for {cloud.n} points")
    return int(center)


def radius_neighbors(cloud, center: int, h: float) -> NeighborSet:
    """Points within closed Euclidean distance ``h`` of ``center``."""
    cloud = as_cloud(cloud)
    center = _check_center(cloud, center)
    if not h > 0:
        raise InvalidInput(f"radius must be positive, got {h!r}")
    dist = distances_from(cloud.coords, center)
    mask = dist <= h
    mask[center] = False
    return NeighborSet(center, np.flatnonzero(mask).astype(np.intp), "radius", float(h))


def _knn_order(dist: np.ndarray, idx: np.ndarray, k: int) -> np.ndarray:
    order = np.lexsort((idx, dist))
    return np.sort(idx[order[:k]])


def knn_neighbors(cloud, center: int, k: int) -> NeighborSet:
    """The ``k`` nearest points; ties at equal distance go to the smaller index."""
    cloud = as_cloud(cloud)
    center = _check_center(cloud, center)
    if int(k) != k or k < 1 or k >= cloud.n:
        raise InvalidInput(f"k must satisfy 1 <= k <= n - 1 = {cloud.n - 1}, got {k!r}")
    idx = np.delete(np.arange(cloud.n, dtype=np.intp), center)
    dist = distances_from(cloud.coords, center, idx)
    return NeighborSet(center, _knn_order(dist, idx, int(k)), "knn", int(k))


def _centers(cloud, centers):
    if centers is None:
        return np.arange(cloud.n, dtype=np.intp)
    centers = np.asarray(centers, dtype=np.intp)
    if centers.size and (centers.min() < 0 or centers.max() >= cloud.n):
        raise IndexError("center index out of range")
    return centers


def radius_neighbor_lists(cloud, h: float, centers=None, tree=None) -> NeighborLists:
    """:func:`radius_neighbors` for many centers at once."""
    cloud = as_cloud(cloud)
    if not h > 0:
        raise InvalidInput(f"radius must be positive, got {h!r}")
    centers = _centers(cloud, centers)
    X = cloud.coords
    tree = tree if tree is not None else cKDTree(X)
    cand = tree.query_ball_point(X[centers], h * (1 + _SLACK) + 1e-300)
    rows = []
    for c, js in zip(centers, cand):
        js = np.asarray(js, dtype=np.intp)
        js = js[js != c]
        js.sort()
        rows.append(js[distances_from(X, c, js) <= h])
    return NeighborLists.from_rows(centers, rows, "radius", float(h))


def knn_neighbor_lists(cloud, k: int, centers=None, tree=None) -> NeighborLists:
    """:func:`knn_neighbors` for many centers at once, same tie-break."""
    cloud = as_cloud(cloud)
    if int(k) != k or k < 1 or k >= cloud.n:
        raise InvalidInput(f"k must satisfy 1 <= k <= n - 1 = {cloud.n - 1}, got {k!r}")
    k = int(k)
    centers = _centers(cloud, centers)
    X = cloud.coords
    tree = tree if tree is not None else cKDTree(X)
    dk, _ = tree.query(X[centers], k=k + 1)
    dk = np.atleast_2d(dk)[:, -1]
    cand = tree.query_ball_point(X[centers], dk * (1 + _SLACK) + 1e-300)
    rows = []
    for c, js in zip(centers, cand):
        js = np.asarray(js, dtype=np.intp)
        js = js[js != c]
        rows.append(_knn_order(distances_from(X, c, js), js, k))
    return NeighborLists.from_rows(centers, rows, "knn", k)


def pairs_within(cloud, h: float, tree=None):
    """All index pairs ``i < j`` with ``||x_i - x_j|| <= h`` and their distances."""
    cloud = as_cloud(cloud)
    X = cloud.coords
    tree = tree if tree is not None else cKDTree(X)
    P = tree.query_pairs(h * (1 + _SLACK) + 1e-300, output_type="ndarray").astype(np.intp)
    if len(P) == 0:
        return P.reshape(0, 2), np.empty(0)
    P.sort(axis=1)
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    D = X[P[:, 1]] - X[P[:, 0]]
    dist = np.sqrt(np.sum(D * D, axis=1))
    keep = dist <= h
    return P[keep], dist[keep]
