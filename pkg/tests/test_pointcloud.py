import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covgeom.errors import FormatError, InvalidInput, ParseError
from covgeom.pointcloud import (PointCloud, knn_neighbor_lists, knn_neighbors, load_csv,
                                pairs_within, radius_neighbor_lists, radius_neighbors,
                                save_csv)


def brute_radius(X, c, h):
    return [j for j in range(len(X)) if j != c and np.sqrt(np.sum((X[j] - X[c]) ** 2)) <= h]


def brute_knn(X, c, k):
    d = [(float(np.sqrt(np.sum((X[j] - X[c]) ** 2))), j) for j in range(len(X)) if j != c]
    return sorted(j for _, j in sorted(d)[:k])


class TestPointCloud:
    def test_immutable(self):
        pc = PointCloud([[0.0, 1.0]])
        with pytest.raises(ValueError):
            pc.coords[0, 0] = 3.0

    @pytest.mark.parametrize("bad", [[[np.nan, 0.0]], [[np.inf]], [], [1.0, 2.0]])
    def test_rejects(self, bad):
        with pytest.raises(InvalidInput):
            PointCloud(bad)

    def test_duplicates_allowed(self):
        pc = PointCloud([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        assert list(radius_neighbors(pc, 0, 0.5).indices) == [1]


class TestCsv:
    def test_basic(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("0,0\n1,0\n0,1")
        pc = load_csv(f)
        assert (pc.n, pc.p) == (3, 2)

    def test_crlf(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_bytes(b"0,0\r\n1,2.5\r\n")
        np.testing.assert_array_equal(load_csv(f).coords, [[0, 0], [1, 2.5]])

    def test_empty(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("")
        with pytest.raises(FormatError):
            load_csv(f)

    def test_header_rejected(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("x,y\n0,0\n")
        with pytest.raises(ParseError) as exc:
            load_csv(f)
        assert (exc.value.line, exc.value.column) == (1, 1)

    def test_location_of_bad_cell(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("0,0\n1,abc\n")
        with pytest.raises(ParseError) as exc:
            load_csv(f)
        assert (exc.value.line, exc.value.column) == (2, 2)

    def test_ragged(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("0,0\n1\n")
        with pytest.raises(FormatError):
            load_csv(f)

    def test_nan_rejected(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("0,nan\n")
        with pytest.raises(ParseError):
            load_csv(f)

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((50, 3)) * 10.0 ** rng.integers(-8, 8, (50, 3))
        f = tmp_path / "a.csv"
        save_csv(X, f)
        assert np.array_equal(load_csv(f).coords, X)


class TestRadius:
    CLOUD = [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]

    def test_examples(self):
        assert list(radius_neighbors(self.CLOUD, 0, 1.5).indices) == [1]
        assert len(radius_neighbors(self.CLOUD, 0, 0.5)) == 0

    def test_boundary_included(self):
        nb = radius_neighbors([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 2.0]], 0, 1.0)
        assert list(nb.indices) == [1, 2]

    def test_bad_args(self):
        with pytest.raises(IndexError):
            radius_neighbors(self.CLOUD, 3, 1.0)
        with pytest.raises(InvalidInput):
            radius_neighbors(self.CLOUD, 0, 0.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.05, 1.5))
    def test_batch_equals_brute_force(self, seed, h):
        rng = np.random.default_rng(seed)
        # a coarse grid makes exact boundary ties common
        X = rng.integers(0, 5, (60, 2)) * 0.25
        lists = radius_neighbor_lists(X, h)
        for r in range(len(X)):
            assert list(lists.row(r)) == brute_radius(X, r, h)
            assert list(radius_neighbors(X, r, h).indices) == brute_radius(X, r, h)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_symmetric_relation(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.uniform(size=(80, 3))
        lists = radius_neighbor_lists(X, 0.3)
        pairs = {(int(c), int(j)) for c in range(80) for j in lists.row(c)}
        assert all((j, i) in pairs for i, j in pairs)

    def test_pairs_within(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(100, 2))
        P, d = pairs_within(X, 0.2)
        expect = [(i, j) for i in range(100) for j in brute_radius(X, i, 0.2) if i < j]
        assert [tuple(p) for p in P.tolist()] == expect
        np.testing.assert_allclose(d, np.linalg.norm(X[P[:, 0]] - X[P[:, 1]], axis=1))


class TestKnn:
    def test_examples(self):
        assert list(knn_neighbors([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]], 0, 1).indices) == [1]

    def test_tie_break(self):
        assert list(knn_neighbors([[0.0, 0.0], [-1.0, 0.0], [1.0, 0.0]], 0, 1).indices) == [1]
        assert list(knn_neighbors([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]], 0, 1).indices) == [1]

    def test_k_too_large(self):
        with pytest.raises(InvalidInput):
            knn_neighbors([[0.0], [1.0]], 0, 2)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 10))
    def test_batch_equals_brute_force(self, seed, k):
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 4, (50, 2)).astype(float)
        lists = knn_neighbor_lists(X, k)
        for r in range(len(X)):
            assert list(lists.row(r)) == brute_knn(X, r, k)
            assert list(knn_neighbors(X, r, k).indices) == brute_knn(X, r, k)
