"""Experiment configuration, orchestration and result tables.

Every run is a pure function of its configuration: the same config produces
byte-identical CSV files. Wall-clock time is reported by the CLI on stderr
and never written into a table.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .covariance import local_data_matrix, sample_covariance, tangent_frame
from .eig import (EigParams, alpha_sensitivity_scan, close_pairs, deform, eig_distance_matrix,
                  make_deformation, DeformedDataset, identity)
from .embedding import (assemble_lle_matrix, diffusion_maps_eigenvalues, embed,
                        laplacian_eigenvalues)
from .errors import ConfigError, FormatError, InvalidInput
from .geodesic import (MIN_DISTANCE, build_local_graph, corrected_distance,
                       one_sided_corrections, shortest_paths)
from .manifolds import DESIGNS, MANIFOLD_IDS, ManifoldSample, make_rng, sample_manifold
from .pointcloud import PointCloud, format_float, load_csv, pairs_within, radius_neighbors

EXPERIMENTS = ("spiral-geodesic", "s1-eigenvalues", "alpha-sensitivity")
ADHOC = ("covgeo", "eig-dist", "lle", "ldr-lle", "dm")
PROFILES = ("desk", "full")
GEODESIC_KINDS = ("line", "angle", "sphere")


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 2000
    h: float | None = None
    h_bar: float | None = None
    eps: float | None = None
    c: float | None = None
    d: int = 1
    alpha: int = 1
    alpha_list: tuple = (1, 2, 3, 4)
    t_list: tuple = ()
    ell: int = 2
    k: int | None = None
    k_eigs: int = 7
    seed: int = 0
    n_pairs: int = 50
    manifold: str = "spiral"
    design: str = "iid"
    s_range: tuple = (0.0, 10.0)
    warp: float = 0.5
    deformation: str = "identity"
    scales: tuple = ()
    warp_a: float = 0.1
    warp_b: float = 5.0
    bend_b: float = 0.5
    normalization_alpha: float = 1.0
    geodesic_kind: str = "line"
    operator: str = "direct"
    output_dir: str = "out"
    input: str | None = None
    latent: str | None = None
    profile: str = "desk"

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in dataclasses.fields(self)]


_DEFAULTS = {
    ("spiral-geodesic", "desk"): dict(manifold="spiral", n=2000, eps=0.2, d=1,
                                      design="stratified"),
    ("spiral-geodesic", "full"): dict(manifold="spiral", n=8000, eps=0.2, d=1,
                                       design="stratified"),
    ("s1-eigenvalues", "desk"): dict(manifold="circle_nonuniform", n=2000, h=0.05, d=1),
    ("s1-eigenvalues", "full"): dict(manifold="circle_nonuniform", n=8000, h=0.03, d=1),
    ("alpha-sensitivity", "desk"): dict(manifold="sphere", n=8000, eps=0.1, d=2,
                                        deformation="bend"),
    ("alpha-sensitivity", "full"): dict(manifold="sphere", n=8000, eps=0.1, d=2,
                                         deformation="bend"),
    ("covgeo", "desk"): dict(h=0.2, d=1),
    ("eig-dist", "desk"): dict(eps=0.1, alpha=1),
    ("lle", "desk"): dict(ell=2),
    ("ldr-lle", "desk"): dict(ell=2, d=1),
    ("dm", "desk"): dict(h=0.05, k_eigs=7),
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(name: str, text: str):
    kind = _FIELD_TYPES[name]
    text = text.strip()
    optional = "None" in kind
    if optional and text.lower() in ("", "none"):
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
        if kind == "tuple":
            if not text:
                return ()
            parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
            conv = int if name == "alpha_list" else float
            return tuple(conv(p) for p in parts)
    except ValueError:
        raise ConfigError(name, f"cannot parse {text!r}") from None
    return text


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown configuration key")
        out[key] = value
    return out


def build_config(experiment: str, file_text: str | None = None, overrides=None,
                 profile: str | None = None) -> ExperimentConfig:
    """Defaults for ``experiment`` and profile, then the file, then overrides."""
    if experiment not in EXPERIMENTS + ADHOC:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}")
    raw = parse_config_text(file_text) if file_text else {}
    for key, value in (overrides or {}).items():
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown configuration key")
        raw[key] = value if isinstance(value, str) else str(value)
    profile = profile or raw.get("profile", "desk")
    if profile not in PROFILES:
        raise ConfigError("profile", f"choose from {PROFILES}")
    values = dict(_DEFAULTS.get((experiment, profile), _DEFAULTS.get((experiment, "desk"), {})))
    for key, text in raw.items():
        values[key] = _parse_value(key, text)
    values["experiment"] = experiment
    values["profile"] = profile
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    for name in ("h", "h_bar", "eps", "c"):
        v = getattr(cfg, name)
        if v is not None and not (math.isfinite(v) and v > 0):
            raise ConfigError(name, f"must be positive, got {v!r}")
    for name in ("n", "d", "alpha", "ell", "k_eigs", "n_pairs"):
        if getattr(cfg, name) < 1:
            raise ConfigError(name, "must be a positive integer")
    if cfg.k is not None and cfg.k < 1:
        raise ConfigError("k", "must be a positive integer")
    if not cfg.alpha_list or any(a < 1 for a in cfg.alpha_list):
        raise ConfigError("alpha_list", "needs positive integers")
    if any(not t > 0 for t in cfg.t_list):
        raise ConfigError("t_list", "values must be positive")
    if cfg.manifold not in MANIFOLD_IDS:
        raise ConfigError("manifold", f"choose from {MANIFOLD_IDS}")
    if cfg.design not in DESIGNS:
        raise ConfigError("design", f"choose from {DESIGNS}")
    if cfg.geodesic_kind not in GEODESIC_KINDS:
        raise ConfigError("geodesic_kind", f"choose from {GEODESIC_KINDS}")
    if cfg.operator not in ("direct", "singular"):
        raise ConfigError("operator", "choose from ('direct', 'singular')")
    if not 0.0 <= cfg.normalization_alpha <= 1.0:
        raise ConfigError("normalization_alpha", "must lie in [0, 1]")
    if not abs(cfg.warp) < 1:
        raise ConfigError("warp", "must satisfy |warp| < 1")
    if len(cfg.s_range) != 2 or not cfg.s_range[1] > cfg.s_range[0]:
        raise ConfigError("s_range", "needs two increasing numbers")
    needs = {
        "spiral-geodesic": ("eps",),
        "s1-eigenvalues": ("h",),
        "alpha-sensitivity": ("eps",),
        "covgeo": ("h",),
        "eig-dist": ("eps",),
        "dm": ("h",),
    }.get(cfg.experiment, ())
    for name in needs:
        if getattr(cfg, name) is None:
            raise ConfigError(name, f"required by {cfg.experiment}")
    if cfg.experiment == "spiral-geodesic" and cfg.manifold != "spiral":
        raise ConfigError("manifold", "spiral-geodesic runs on the spiral")
    if cfg.experiment == "alpha-sensitivity" and cfg.manifold != "sphere":
        raise ConfigError("manifold", "alpha-sensitivity runs on the sphere")
    if cfg.experiment == "s1-eigenvalues" and not cfg.manifold.startswith("circle"):
        raise ConfigError("manifold", "s1-eigenvalues runs on a circle")
    if cfg.experiment in ADHOC and cfg.input is None:
        raise ConfigError("input", f"{cfg.experiment} needs an input point cloud")
    if cfg.experiment == "eig-dist" and cfg.latent is None:
        raise ConfigError("latent", "eig-dist needs the latent coordinates of each point")


# --- result tables -----------------------------------------------------------


@dataclass
class ResultTable:
    name: str
    columns: tuple
    rows: list
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if isinstance(v, (tuple, list)):
        return ";".join(_cell(x) for x in v)
    return "" if v is None else str(v)


def render_table(table: ResultTable) -> str:
    lines = [f"# {k}={_cell(v)}" for k, v in table.metadata.items()]
    lines.append(",".join(table.columns))
    lines.extend(",".join(_cell(v) for v in row) for row in table.rows)
    return "\n".join(lines) + "\n"


def write_table(table: ResultTable, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(render_table(table))
    return path


def write_results(tables, cfg: ExperimentConfig) -> list:
    out = Path(cfg.output_dir)
    return [write_table(t, out / f"{cfg.experiment}_{t.name}.csv") for t in tables]


def _metadata(cfg: ExperimentConfig, table: str, **extra) -> dict:
    meta = {"experiment": cfg.experiment, "table": table,
            "code_version": __version__, "backend": BACKEND}
    meta.update(extra)
    for k, v in cfg.items():
        if k in ("output_dir", "experiment"):
            continue
        meta[f"config.{k}"] = v
    return meta


# --- headline experiments ------------------------------------------------------


def _manifold_params(cfg: ExperimentConfig) -> dict:
    if cfg.manifold == "spiral":
        return {"s_range": cfg.s_range, "design": cfg.design}
    if cfg.manifold == "circle_warped":
        return {"warp": cfg.warp, "design": cfg.design}
    if cfg.manifold in ("circle_uniform", "circle_nonuniform", "segment"):
        return {"design": cfg.design}
    return {"d": cfg.d}


def sample_for(cfg: ExperimentConfig) -> ManifoldSample:
    return sample_manifold(cfg.manifold, cfg.n, seed=cfg.seed, **_manifold_params(cfg))


def run_exp_spiral_geodesic(cfg: ExperimentConfig) -> list:
    """Local estimator errors around a reference point and shortest-path errors.

    The reference point is the sample with the median arc-length parameter;
    every other point within ``eps`` of it is paired with it. Frames use
    ``h_bar = h_bar or eps``.
    """
    sample = sample_for(cfg)
    cloud, s = sample.cloud, sample.latent
    eps = cfg.eps
    h_bar = cfg.h_bar or eps
    ref = int(np.argsort(s, kind="stable")[(cfg.n - 1) // 2])
    nb = radius_neighbors(cloud, ref, h_bar)
    frame = tangent_frame(sample_covariance(local_data_matrix(cloud, nb)), cfg.d)
    local = []
    for j in radius_neighbors(cloud, ref, eps).indices:
        est = corrected_distance(cloud, ref, int(j), frame)
        t = abs(s[j] - s[ref])
        local.append((ref, int(j), int(np.sign(s[j] - s[ref])), t, est.euclidean,
                      abs(est.euclidean - t), est.corrected, abs(est.corrected - t)))
    local.sort(key=lambda r: (r[3], r[1]))
    local_meta = _metadata(cfg, "local", reference_index=ref,
                           reference_s=float(s[ref]), pair_rule="reference to all eps-neighbors",
                           frame_scale=h_bar)

    rng = make_rng(cfg.seed + 1)
    src = rng.integers(0, cfg.n, cfg.n_pairs)
    dst = rng.integers(0, cfg.n - 1, cfg.n_pairs)
    dst = dst + (dst >= src)
    d_e = shortest_paths(build_local_graph(cloud, eps, "euclidean"), src)
    d_c = shortest_paths(build_local_graph(cloud, eps, "corrected", cfg.d), src)
    glob = []
    for r, (a, b) in enumerate(zip(src, dst)):
        glob.append((int(a), int(b), float(d_e[r, b]), float(d_c[r, b]), abs(s[a] - s[b])))
    glob_meta = _metadata(cfg, "global", graph_scale=eps, pair_seed=cfg.seed + 1)
    return [
        ResultTable("local", ("i", "j", "side", "true_t", "euclid_h", "euclid_err",
                              "corrected", "corrected_err"), local, local_meta),
        ResultTable("global", ("source", "target", "dijkstra_euclid", "dijkstra_corrected",
                               "true_t"), glob, glob_meta),
    ]


def estimator_rms_errors(sample: ManifoldSample, scales, d: int, band: float = 0.8):
    """RMS error of both local estimators against the oracle, per frame scale.

    For each ``h_bar`` the pairs with ``band * h_bar <= h <= h_bar`` are used,
    each in both orders, and the corrected estimate is one-sided with the
    frame at the first point. Returns ``(euclidean_rms, corrected_rms, counts)``.
    """
    e_rms, c_rms, counts = [], [], []
    for hb in scales:
        P, h = pairs_within(sample.cloud, hb)
        keep = (h >= band * hb) & (h >= MIN_DISTANCE)
        P, h = P[keep], h[keep]
        rows, cols = P[:, 0].copy(), P[:, 1].copy()
        q_row, q_col = one_sided_corrections(sample.cloud, rows, cols, hb, d)
        t = sample.geodesic_pairs(rows, cols)
        corr = np.r_[h + q_row / (6 * h), h + q_col / (6 * h)]
        e_rms.append(float(np.sqrt(np.mean((h - t) ** 2))))
        c_rms.append(float(np.sqrt(np.mean((corr - np.r_[t, t]) ** 2))))
        counts.append(int(len(h)))
    return np.array(e_rms), np.array(c_rms), np.array(counts)


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def circle_spectrum(k: int) -> np.ndarray:
    """``0, 1, 1, 4, 4, 9, 9, ...`` for the unit circle."""
    return np.array([float(((i + 1) // 2) ** 2) for i in range(k)])


def run_exp_s1_eigenvalues(cfg: ExperimentConfig) -> list:
    """LDR-LLE and density-normalized diffusion-maps spectra on a sampled circle."""
    sample = sample_for(cfg)
    k = cfg.k_eigs
    W = assemble_lle_matrix(sample.cloud, h=cfg.h, variant="truncated", d=cfg.d)
    ldr = laplacian_eigenvalues(W, cfg.h, cfg.d, k, seed=cfg.seed, operator=cfg.operator)
    dm = diffusion_maps_eigenvalues(sample.cloud, cfg.h, cfg.normalization_alpha, k,
                                    seed=cfg.seed)
    true = circle_spectrum(k)
    rows = [(i, true[i], ldr[i], dm[i]) for i in range(k)]
    # the diffusion-maps scale constant is checked on uniform data at the same n, h
    uni = sample_manifold("circle_uniform", cfg.n, seed=cfg.seed, design="stratified")
    calib = diffusion_maps_eigenvalues(uni.cloud, cfg.h, cfg.normalization_alpha, 3,
                                       seed=cfg.seed)
    meta = _metadata(cfg, "spectrum", ldr_scale="2(d+2)/h^2", dm_scale="4/h^2",
                     dm_calibration_uniform=tuple(float(v) for v in calib[1:]))
    return [ResultTable("spectrum", ("index", "true_eig", "ldr_lle_eig", "dm_eig"), rows, meta)]


def default_t_list(eps: float) -> tuple:
    ts = np.geomspace(0.2 * eps, eps, 8)
    return tuple(sorted(set(np.round(np.r_[ts, eps ** 1.5], 12).tolist())))


def deformation_for(cfg: ExperimentConfig):
    if cfg.deformation == "linear":
        return make_deformation("linear", scales=cfg.scales or (1.0,) * (cfg.d + 1))
    if cfg.deformation == "warp":
        return make_deformation("warp", a=cfg.warp_a, b=cfg.warp_b)
    if cfg.deformation == "bend":
        return make_deformation("bend", b=cfg.bend_b)
    try:
        return make_deformation(cfg.deformation)
    except InvalidInput as exc:
        raise ConfigError("deformation", str(exc)) from None


def run_exp_alpha_sensitivity(cfg: ExperimentConfig) -> list:
    """Relative EIG error per truncation order and distance bucket, plus fitted exponents."""
    sample = sample_for(cfg)
    data = deform(sample, deformation_for(cfg))
    ts = cfg.t_list or default_t_list(cfg.eps)
    scan = alpha_sensitivity_scan(data, cfg.alpha_list, EigParams(1, cfg.eps), ts,
                                  seed=cfg.seed)
    rows = [(r.alpha, r.t, r.mean_rel_error, r.n_pairs, r.empty) for r in scan.rows]
    exps = [(a, scan.exponent(a), scan.skipped_points[a]) for a in cfg.alpha_list]
    meta = _metadata(cfg, "scan", bucket_rel_width=scan.rel_width)
    return [
        ResultTable("scan", ("alpha", "t", "mean_rel_error", "n_pairs", "empty"), rows, meta),
        ResultTable("exponents", ("alpha", "exponent", "skipped_points"), exps,
                    _metadata(cfg, "exponents", fit="least squares of log error on log t")),
    ]


# --- ad-hoc runs ---------------------------------------------------------------


def _load_latent(cfg: ExperimentConfig, n: int) -> ManifoldSample:
    raw = load_csv(cfg.latent).coords
    if raw.shape[0] != n:
        raise FormatError(f"latent file has {raw.shape[0]} rows, cloud has {n}")
    if cfg.geodesic_kind in ("line", "angle"):
        if raw.shape[1] != 1:
            raise FormatError(f"{cfg.geodesic_kind} latent file needs one column")
        latent = raw[:, 0].copy()
        dim = 1
    else:
        norms = np.linalg.norm(raw, axis=1)
        if np.any(np.abs(norms - 1) > 1e-8):
            raise FormatError("sphere latent rows must be unit vectors")
        latent = raw
        dim = raw.shape[1] - 1
    return ManifoldSample(PointCloud(raw), latent, "input", cfg.seed, dim, cfg.geodesic_kind, {})


def run_adhoc(cfg: ExperimentConfig) -> list:
    cloud = load_csv(cfg.input)
    kind = cfg.experiment
    meta = _metadata(cfg, kind, n_points=cloud.n, ambient_dim=cloud.p)
    if kind == "covgeo":
        g = build_local_graph(cloud, cfg.h, "corrected", cfg.d)
        e = build_local_graph(cloud, cfg.h, "euclidean")
        rows = list(zip(g.rows.tolist(), g.cols.tolist(), e.weights.tolist(),
                        g.weights.tolist()))
        return [ResultTable(kind, ("i", "j", "euclidean", "corrected"), rows, meta)]
    if kind == "eig-dist":
        data = DeformedDataset(_load_latent(cfg, cloud.n), cloud, identity())
        P, t = close_pairs(data, cfg.eps)
        batch = eig_distance_matrix(data, P.tolist(), EigParams(cfg.alpha, cfg.eps))
        rows = []
        for (pair, dist), tt in zip(batch.results, t):
            err = batch.errors.get(pair)
            rows.append((pair[0], pair[1], float(tt), dist,
                         "" if err is None else type(err).__name__))
        meta["failed_pairs"] = len(batch.errors)
        return [ResultTable(kind, ("i", "j", "latent_t", "eig", "error"), rows, meta)]
    if kind in ("lle", "ldr-lle"):
        if cfg.ell >= cloud.n - 1:
            raise ConfigError("ell", f"must be below n - 1 = {cloud.n - 1}")
        nb = {"h": cfg.h} if cfg.h is not None else {"k": cfg.k or min(10, cloud.n - 1)}
        variant = "regularized" if kind == "lle" else "truncated"
        W = assemble_lle_matrix(cloud, variant=variant, d=cfg.d if variant == "truncated"
                                else None, c=cfg.c, **nb)
        res = embed(W, cfg.ell + 1, seed=cfg.seed)
        drop = res.trivial_index if res.trivial_index is not None else 0
        keep = [i for i in range(cfg.ell + 1) if i != drop][:cfg.ell]
        Y = res.coordinates[:, keep]
        meta["spectrum"] = tuple(float(v) for v in res.spectrum[keep])
        meta["neighbors"] = f"h={nb['h']}" if "h" in nb else f"k={nb['k']}"
        cols = ("index",) + tuple(f"coord_{i + 1}" for i in range(cfg.ell))
        rows = [(i,) + tuple(Y[i]) for i in range(cloud.n)]
        return [ResultTable(kind, cols, rows, meta)]
    if kind == "dm":
        k = min(cfg.k_eigs, cloud.n)
        ev = diffusion_maps_eigenvalues(cloud, cfg.h, cfg.normalization_alpha, k, seed=cfg.seed)
        return [ResultTable(kind, ("index", "eigenvalue"), list(enumerate(ev.tolist())), meta)]
    raise ConfigError("experiment", f"unknown ad-hoc run {kind!r}")


RUNNERS = {
    "spiral-geodesic": run_exp_spiral_geodesic,
    "s1-eigenvalues": run_exp_s1_eigenvalues,
    "alpha-sensitivity": run_exp_alpha_sensitivity,
}


def run(cfg: ExperimentConfig) -> list:
    return RUNNERS.get(cfg.experiment, run_adhoc)(cfg)
