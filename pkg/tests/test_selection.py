import numpy as np
import pytest

from qmsvm.data import Dataset, make_blobs
from qmsvm.errors import ConfigError, DataError
from qmsvm.selection import SelectionConfig, kmeans, select_kmeans, select_random


class TestRandom:
    def test_full_draw_is_permutation(self):
        d = make_blobs(20, seed=0)
        s = select_random(d, SelectionConfig(M=20, seed=5))
        assert sorted(map(tuple, s.features)) == sorted(map(tuple, d.features))

    def test_single(self):
        d = Dataset([[1.0, 2.0]], [0], 1)
        s = select_random(d, SelectionConfig(M=1))
        np.testing.assert_array_equal(s.features, [[1.0, 2.0]])

    def test_deterministic(self):
        d = make_blobs(100, seed=0)
        a = select_random(d, SelectionConfig(M=10, seed=3))
        b = select_random(d, SelectionConfig(M=10, seed=3))
        np.testing.assert_array_equal(a.features, b.features)

    def test_rows_come_from_input(self):
        d = make_blobs(100, seed=0)
        s = select_random(d, SelectionConfig(M=15, seed=1))
        rows = {tuple(r) for r in d.features}
        assert all(tuple(r) in rows for r in s.features)
        assert s.n_examples == 15

    def test_too_many(self):
        with pytest.raises(ConfigError):
            select_random(make_blobs(5, seed=0), SelectionConfig(M=6))


class TestKmeans:
    def test_identical_points_collapse(self):
        X = np.tile([[2.0, -1.0]], (4, 1))
        d = Dataset(X, np.zeros(4, dtype=int), 1)
        s = select_kmeans(d, SelectionConfig("kmeans", M=4))
        np.testing.assert_array_equal(s.features, X)

    def test_two_class_means(self):
        rng = np.random.default_rng(0)
        sigma, n = 0.1, 50
        X = np.vstack([rng.normal(0, sigma, (n, 2)), rng.normal(10, sigma, (n, 2))])
        y = np.repeat([0, 1], n)
        s = select_kmeans(Dataset(X, y, 2), SelectionConfig("kmeans", M=2))
        for c, true_mean in ((0, 0.0), (1, 10.0)):
            centroid = s.features[s.labels == c][0]
            # with k=1 the centroid is the sample mean
            np.testing.assert_allclose(centroid, X[y == c].mean(axis=0), rtol=1e-12, atol=1e-12)
            assert np.all(np.abs(centroid - true_mean) < 3 * sigma / np.sqrt(n))

    def test_indivisible(self):
        with pytest.raises(ConfigError, match="not divisible"):
            select_kmeans(make_blobs(30, 2, seed=0), SelectionConfig("kmeans", M=3))

    def test_short_class(self):
        d = Dataset(np.zeros((5, 1)), [0, 0, 0, 0, 1], 2)
        with pytest.raises(DataError, match="class 1"):
            select_kmeans(d, SelectionConfig("kmeans", M=4))

    def test_counts_and_bounding_box(self):
        d = make_blobs(300, 3, seed=2)
        s = select_kmeans(d, SelectionConfig("kmeans", M=12, seed=4))
        np.testing.assert_array_equal(s.class_counts(), [4, 4, 4])
        for c in range(3):
            rows = d.features[d.labels == c]
            cen = s.features[s.labels == c]
            assert np.all(cen >= rows.min(axis=0)) and np.all(cen <= rows.max(axis=0))

    def test_deterministic(self):
        d = make_blobs(90, 3, seed=2)
        a = select_kmeans(d, SelectionConfig("kmeans", M=9, seed=11))
        b = select_kmeans(d, SelectionConfig("kmeans", M=9, seed=11))
        np.testing.assert_array_equal(a.features, b.features)

    @pytest.mark.parametrize("seed", range(8))
    def test_objective_nonincreasing(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((80, 3))
        _, _, history = kmeans(X, 6, np.random.default_rng(seed), max_iter=50, tol=0.0)
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))

    def test_empty_cluster_repair(self):
        # two far-apart groups and duplicate-heavy data force empty clusters
        X = np.array([[0.0, 0.0]] * 10 + [[1.0, 1.0]])
        cen, assign, _ = kmeans(X, 3, np.random.default_rng(0))
        assert np.bincount(assign, minlength=3).sum() == 11
        assert np.all(np.isfinite(cen))
