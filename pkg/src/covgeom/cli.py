"""Command-line entry point.

    covgeom <subcommand> [--config FILE] [--profile desk|full] [--key value ...]

Exit status: 0 success, 2 configuration error, 3 input data error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
import time
import warnings

from .errors import (ConfigError, DegenerateDistance, EmptyNeighborhood, FormatError,
                     InvalidInput, NoConvergence, ParseError, RankExceeded, SingularWeights)
from .experiments import ADHOC, EXPERIMENTS, build_config, run, write_results

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

_HELP = {
    "spiral-geodesic": "Euclidean vs covariance-corrected geodesics on a spiral",
    "s1-eigenvalues": "LDR-LLE vs diffusion-maps Laplacian spectrum on a circle",
    "alpha-sensitivity": "EIG error against latent distance for several truncation orders",
    "covgeo": "corrected distances for every pair within h of an input cloud",
    "eig-dist": "EIG distances for latent-close pairs of an input cloud",
    "lle": "classic LLE embedding of an input cloud",
    "ldr-lle": "LDR-LLE embedding of an input cloud",
    "dm": "diffusion-maps Laplacian eigenvalues of an input cloud",
}


def _overrides(extra: list[str]) -> dict:
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(tok, "expected --key value")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(key, "missing value")
            value = extra[i + 1]
            i += 2
        out[key.replace("-", "_")] = value
    return out


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covgeom", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name in EXPERIMENTS + ADHOC:
        p = sub.add_parser(name, help=_HELP[name], allow_abbrev=False)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--profile", choices=("desk", "full"))
        p.add_argument("--output-dir", dest="output_dir")
        if name in ADHOC:
            p.add_argument("--input", help="point cloud CSV")
        if name == "eig-dist":
            p.add_argument("--latent", help="latent coordinate CSV, one row per point")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args, extra = parser.parse_known_args(argv)
    start = time.perf_counter()
    try:
        overrides = _overrides(extra)
        for key in ("output_dir", "input", "latent"):
            if getattr(args, key, None) is not None:
                overrides[key] = getattr(args, key)
        text = None
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError("config", str(exc)) from None
        cfg = build_config(args.command, text, overrides, args.profile)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            tables = run(cfg)
        paths = write_results(tables, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, ParseError, EmptyNeighborhood, InvalidInput, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NoConvergence, SingularWeights, RankExceeded, DegenerateDistance) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        print(p)
    print(f"wall time {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
