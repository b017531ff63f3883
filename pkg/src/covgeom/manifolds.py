"""Synthetic manifold samplers with analytic geodesic oracles.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``; PCG64 is
a documented, platform-independent generator, so a seed fixes the sample.

Two sampling designs are available for the one-dimensional manifolds:

``"iid"``
    independent uniform draws of the latent parameter;
``"stratified"``
    one uniform draw inside each of ``n`` equal-width strata (each point is
    still uniformly distributed, the sample has much lower discrepancy);
``"grid"``
    stratum midpoints, no randomness.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .pointcloud import PointCloud, save_csv

MANIFOLD_IDS = ("spiral", "circle_uniform", "circle_nonuniform", "circle_warped",
                "sphere", "segment")
DESIGNS = ("iid", "stratified", "grid")
TWO_PI = 2.0 * np.pi


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def unit_draws(n: int, seed: int, design: str = "iid") -> np.ndarray:
    """``n`` values in ``[0, 1)`` under the chosen design (not sorted for iid)."""
    if design not in DESIGNS:
        raise InvalidInput(f"unknown sampling design {design!r}; choose from {DESIGNS}")
    if design == "grid":
        return (np.arange(n) + 0.5) / n
    rng = make_rng(seed)
    if design == "stratified":
        return (np.arange(n) + rng.uniform(0.0, 1.0, n)) / n
    return rng.uniform(0.0, 1.0, n)


def _line_geodesic(a, b):
    return np.abs(a - b)


def _angle_geodesic(a, b):
    d = np.mod(np.abs(a - b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def _sphere_geodesic(a, b):
    # equals arccos(<a, b>) for unit vectors, without its loss of accuracy near 0 and pi
    return 2.0 * np.arctan2(np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1))


_ORACLES = {
    "line": _line_geodesic,
    "angle": _angle_geodesic,
    "sphere": _sphere_geodesic,
}


@dataclass(frozen=True, eq=False)
class ManifoldSample:
    """A point cloud with its latent parameters and geodesic oracle.

    ``latent`` is arc length (``geodesic_kind == "line"``), an angle on the
    unit circle (``"angle"``) or a unit vector (``"sphere"``).
    """

    cloud: PointCloud
    latent: np.ndarray
    manifold_id: str
    seed: int
    intrinsic_dim: int
    geodesic_kind: str
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.cloud.n

    def geodesic(self, i: int, j: int) -> float:
        return float(self.geodesic_pairs([i], [j])[0])

    def geodesic_pairs(self, I, J) -> np.ndarray:
        I = np.asarray(I, dtype=np.intp)
        J = np.asarray(J, dtype=np.intp)
        return _ORACLES[self.geodesic_kind](self.latent[I], self.latent[J])

    def geodesic_from(self, i: int) -> np.ndarray:
        return _ORACLES[self.geodesic_kind](self.latent, self.latent[i])

    def latent_chart(self) -> np.ndarray:
        """Coordinates in which the chord never exceeds the geodesic distance.

        Used to pre-filter candidate neighbors with a k-d tree.
        """
        if self.geodesic_kind == "line":
            return self.latent.reshape(-1, 1)
        if self.geodesic_kind == "angle":
            return np.c_[np.cos(self.latent), np.sin(self.latent)]
        return self.latent

    def save(self, cloud_path, latent_path) -> None:
        """Export the cloud and a one-row-per-point latent sidecar CSV."""
        save_csv(self.cloud, cloud_path)
        save_csv(self.latent, latent_path)


def _check_n(n, minimum=2):
    if int(n) != n or n < minimum:
        raise InvalidInput(f"need at least {minimum} points, got {n!r}")
    return int(n)


def spiral_point(s):
    """Unit-speed logarithmic spiral; ``s = 0`` maps to ``(1, 0)``."""
    r = np.asarray(s, dtype=float) / np.sqrt(2.0) + 1.0
    return np.stack([r * np.cos(np.log(r)), r * np.sin(np.log(r))], axis=-1)


def sample_spiral(n: int, s_range=(0.0, 10.0), seed: int = 0,
                  design: str = "iid") -> ManifoldSample:
    n = _check_n(n)
    a, b = map(float, s_range)
    if not (b > a and a > -np.sqrt(2.0)):
        raise InvalidInput(f"invalid spiral s_range {s_range!r}")
    s = a + (b - a) * unit_draws(n, seed, design)
    return ManifoldSample(PointCloud(spiral_point(s)), s, "spiral", seed, 1, "line",
                          {"s_range": (a, b), "design": design})


def _circle(phi):
    return PointCloud(np.c_[np.cos(phi), np.sin(phi)])


def sample_circle_uniform(n: int, seed: int = 0, design: str = "iid") -> ManifoldSample:
    n = _check_n(n)
    phi = TWO_PI * unit_draws(n, seed, design)
    return ManifoldSample(_circle(phi), phi, "circle_uniform", seed, 1, "angle",
                          {"design": design})


def circle_nonuniform_angle(theta):
    return TWO_PI * (theta + 0.3 * np.sin(theta))


def sample_circle_nonuniform(n: int, seed: int = 0, design: str = "iid") -> ManifoldSample:
    """``phi = 2 pi (theta + 0.3 sin theta)`` with ``theta`` uniform on [0, 1].

    ``phi`` sweeps about 1.25 turns, so part of the circle is covered twice.
    """
    n = _check_n(n)
    theta = unit_draws(n, seed, design)
    phi = circle_nonuniform_angle(theta)
    return ManifoldSample(_circle(phi), phi, "circle_nonuniform", seed, 1, "angle",
                          {"design": design})


def sample_circle_warped(n: int, warp: float = 0.5, seed: int = 0,
                         design: str = "iid") -> ManifoldSample:
    """Smooth periodic non-uniform density: ``phi = 2 pi u + warp sin(2 pi u)``.

    ``|warp| < 1`` keeps the map a diffeomorphism of the circle; the density
    is proportional to ``1 / (1 + warp cos(2 pi u))``.
    """
    n = _check_n(n)
    if not abs(warp) < 1:
        raise InvalidInput("warp must satisfy |warp| < 1")
    u = unit_draws(n, seed, design)
    phi = TWO_PI * u + warp * np.sin(TWO_PI * u)
    return ManifoldSample(_circle(phi), phi, "circle_warped", seed, 1, "angle",
                          {"design": design, "warp": warp})


def sample_sphere(n: int, d: int = 2, seed: int = 0) -> ManifoldSample:
    """Uniform on ``S^d`` in ``R^{d+1}`` via normalized Gaussians."""
    if int(d) != d or d < 1:
        raise InvalidInput(f"sphere dimension must be a positive integer, got {d!r}")
    n = _check_n(n, d + 2)
    rng = make_rng(seed)
    Z = rng.standard_normal((n, int(d) + 1))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    return ManifoldSample(PointCloud(Z), Z, "sphere", seed, int(d), "sphere", {})


def sample_segment(n: int, eps_box=(0.0, 1.0), seed: int = 0, ambient_dim: int = 2,
                   design: str = "iid") -> ManifoldSample:
    """Uniform on a segment along the first axis of ``R^ambient_dim``."""
    n = _check_n(n)
    a, b = map(float, eps_box)
    if not b > a:
        raise InvalidInput(f"invalid segment {eps_box!r}")
    if ambient_dim < 1:
        raise InvalidInput("ambient_dim must be positive")
    s = a + (b - a) * unit_draws(n, seed, design)
    X = np.zeros((n, ambient_dim))
    X[:, 0] = s
    return ManifoldSample(PointCloud(X), s, "segment", seed, 1, "line",
                          {"eps_box": (a, b), "design": design})


def sample_manifold(manifold_id: str, n: int, seed: int = 0, **params) -> ManifoldSample:
    samplers = {
        "spiral": sample_spiral,
        "circle_uniform": sample_circle_uniform,
        "circle_nonuniform": sample_circle_nonuniform,
        "circle_warped": sample_circle_warped,
        "sphere": sample_sphere,
        "segment": sample_segment,
    }
    if manifold_id not in samplers:
        raise InvalidInput(f"unknown manifold {manifold_id!r}; choose from {MANIFOLD_IDS}")
    return samplers[manifold_id](n, seed=seed, **params)
