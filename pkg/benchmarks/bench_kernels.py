"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from covgeom._backend import compiled_kernels, python_kernels
from covgeom.manifolds import sample_sphere
from covgeom.pointcloud import radius_neighbor_lists


def cases(n, seed):
    X = np.ascontiguousarray(sample_sphere(n, seed=seed).cloud.coords)
    nb = radius_neighbor_lists(X, 0.1)
    p = X.shape[1]
    rng = np.random.default_rng(seed)
    T = np.ascontiguousarray(rng.standard_normal((len(nb.centers), p)))
    M = np.ascontiguousarray(np.broadcast_to(np.eye(p), (n, p, p)))
    rows = np.repeat(nb.centers, nb.counts).astype(np.intp)
    cols = np.ascontiguousarray(nb.indices, dtype=np.intp)
    return {
        "local_moments": lambda k: k.local_moments(X, nb.centers, nb.indptr, nb.indices),
        "affine_weights": lambda k: k.affine_weights(X, nb.centers, nb.indptr, nb.indices, T),
        "pair_quadratic_forms": lambda k: k.pair_quadratic_forms(X, rows, cols, M),
    }, int(nb.counts.sum())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if compiled_kernels is None:
        raise SystemExit("compiled kernels are not built; reinstall with a C compiler")
    fns, nnz = cases(args.n, args.seed)
    print(f"n={args.n} neighbor entries={nnz}")
    print(f"{'kernel':<22}{'cython ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, fn in fns.items():
        tc = min(timeit.repeat(lambda: fn(compiled_kernels), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(python_kernels), number=1, repeat=args.repeat))
        print(f"{name:<22}{tc * 1e3:>12.2f}{tp * 1e3:>12.2f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
