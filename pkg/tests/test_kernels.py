import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covgeom._backend import BACKEND, compiled_kernels, python_kernels
from covgeom.pointcloud import radius_neighbor_lists

needs_compiled = pytest.mark.skipif(compiled_kernels is None, reason="extension not built")


def case(seed, n=120, p=3):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.standard_normal((n, p)))
    nb = radius_neighbor_lists(X, 1.0)
    T = np.ascontiguousarray(rng.standard_normal((len(nb.centers), p)))
    M = rng.standard_normal((n, p, p))
    M = np.ascontiguousarray(M + M.transpose(0, 2, 1))
    rows = np.repeat(nb.centers, nb.counts).astype(np.intp)
    return X, nb, T, M, rows, np.ascontiguousarray(nb.indices, dtype=np.intp)


class TestPythonKernels:
    def test_moments_brute_force(self):
        X, nb, *_ = case(0)
        sums, covs = python_kernels.local_moments(X, nb.centers, nb.indptr, nb.indices)
        for r, c in enumerate(nb.centers):
            D = X[nb.row(r)] - X[c]
            np.testing.assert_allclose(sums[r], D.sum(axis=0), atol=1e-12)
            np.testing.assert_allclose(covs[r], D.T @ D, atol=1e-12)

    def test_quadratic_forms_brute_force(self):
        X, _, _, M, rows, cols = case(1)
        q = python_kernels.pair_quadratic_forms(X, rows, cols, M)
        for k in range(0, len(rows), 50):
            v = X[cols[k]] - X[rows[k]]
            assert q[k] == pytest.approx(v @ M[rows[k]] @ v, abs=1e-10)

    def test_empty_rows(self):
        X = np.array([[0.0], [5.0]])
        nb = radius_neighbor_lists(X, 1.0)
        sums, covs = python_kernels.local_moments(X, nb.centers, nb.indptr, nb.indices)
        assert np.all(sums == 0) and np.all(covs == 0)


@needs_compiled
class TestCompiledMatchesPython:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 5))
    def test_local_moments(self, seed, p):
        X, nb, *_ = case(seed, p=p)
        a = compiled_kernels.local_moments(X, nb.centers, nb.indptr, nb.indices)
        b = python_kernels.local_moments(X, nb.centers, nb.indptr, nb.indices)
        for u, v in zip(a, b):
            np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_affine_weights(self, seed):
        X, nb, T, *_ = case(seed)
        a = compiled_kernels.affine_weights(X, nb.centers, nb.indptr, nb.indices, T)
        b = python_kernels.affine_weights(X, nb.centers, nb.indptr, nb.indices, T)
        for u, v in zip(a, b):
            np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_pair_quadratic_forms(self, seed):
        X, _, _, M, rows, cols = case(seed)
        np.testing.assert_allclose(compiled_kernels.pair_quadratic_forms(X, rows, cols, M),
                                   python_kernels.pair_quadratic_forms(X, rows, cols, M),
                                   rtol=1e-12, atol=1e-12)


def test_backend_override():
    env = dict(os.environ, COVGEOM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import covgeom; print(covgeom.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert BACKEND == ("cython" if compiled_kernels is not None else "python")
