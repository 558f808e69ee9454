import numpy as np
import pytest

from edgebot import tree as T
from edgebot.errors import (
    CountMismatch,
    EmptyChild,
    EmptyNode,
    FeatureIndexOutOfRange,
    InvalidParams,
)
from oracles import (
    enumerate_best_split_gini,
    enumerate_best_split_gradhess,
    traverse_oracle,
)


class TestGini:
    def test_maximal_binary_impurity(self):
        assert T.gini([4, 4]) == 0.5

    def test_pure_node(self):
        assert T.gini([7, 0]) == 0.0

    def test_hand_computed(self):
        assert T.gini([3, 1]) == pytest.approx(0.375)

    def test_empty_node(self):
        with pytest.raises(EmptyNode):
            T.gini([0, 0])

    def test_bounds(self, rng):
        for _ in range(50):
            counts = rng.integers(0, 20, size=3)
            if counts.sum() == 0:
                continue
            g = T.gini(counts)
            assert 0.0 <= g <= 1.0 - 1.0 / 3.0 + 1e-12


class TestGiniGain:
    def test_perfect_split(self):
        assert T.gini_gain([2, 2], [2, 0], [0, 2]) == pytest.approx(0.5)

    def test_proportional_children_zero_gain(self):
        assert T.gini_gain([4, 2], [2, 1], [2, 1]) == pytest.approx(0.0)

    def test_hand_computed(self):
        assert T.gini_gain([3, 1], [2, 0], [1, 1]) == pytest.approx(0.125)

    def test_empty_child(self):
        with pytest.raises(EmptyChild):
            T.gini_gain([2, 2], [2, 2], [0, 0])

    def test_count_mismatch(self):
        with pytest.raises(CountMismatch):
            T.gini_gain([2, 2], [2, 0], [1, 1])

    def test_nonnegative_on_random_legal_splits(self, rng):
        for _ in range(100):
            left = rng.integers(0, 10, size=2)
            right = rng.integers(0, 10, size=2)
            if left.sum() == 0 or right.sum() == 0:
                continue
            assert T.gini_gain(left + right, left, right) >= -1e-12


class TestBestSplitExhaustive:
    def test_toy_1d(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 0, 1, 1])
        c = T.best_split_exhaustive(X, y, params=T.TreeParams(objective="gini"))
        assert c.feature == 0
        assert c.threshold == 2.5
        assert c.gain == pytest.approx(0.5)
        assert c.left_stats.tolist() == [2, 0]

    def test_all_labels_equal_returns_none(self, rng):
        X = rng.normal(size=(20, 3))
        y = np.ones(20, dtype=int)
        assert T.best_split_exhaustive(X, y, params=T.TreeParams(objective="gini")) is None

    def test_identical_features_tie_to_lower_index(self):
        col = np.array([1.0, 2.0, 3.0, 4.0])
        X = np.column_stack([col, col])
        y = np.array([0, 0, 1, 1])
        c = T.best_split_exhaustive(X, y, params=T.TreeParams(objective="gini"))
        assert c.feature == 0

    def test_matches_enumeration_oracle_gini(self, rng):
        params = T.TreeParams(objective="gini", n_classes=2)
        for _ in range(30):
            n = int(rng.integers(5, 60))
            X = np.round(rng.normal(size=(n, 4)), 1)  # rounding forces ties
            y = rng.integers(0, 2, size=n)
            got = T.best_split_exhaustive(X, y, params=params)
            want = enumerate_best_split_gini(X, y)
            if want is None:
                assert got is None
                continue
            assert (got.feature, got.threshold) == (want[1], want[2])
            assert got.gain == pytest.approx(want[0], abs=1e-12)

    def test_matches_enumeration_oracle_gradhess(self, rng):
        params = T.TreeParams(objective="grad_hess", reg_lambda=1.0, gamma=0.05,
                              reg_alpha=0.5)
        for _ in range(30):
            n = int(rng.integers(5, 60))
            X = np.round(rng.normal(size=(n, 3)), 1)
            g = rng.normal(size=n)
            h = rng.uniform(0.05, 0.3, size=n)
            got = T.best_split_exhaustive(X, g=g, h=h, params=params)
            want = enumerate_best_split_gradhess(X, g, h, reg_lambda=1.0,
                                                 gamma=0.05, reg_alpha=0.5)
            if want is None:
                assert got is None
                continue
            assert (got.feature, got.threshold) == (want[1], want[2])
            assert got.gain == pytest.approx(want[0], rel=1e-12)

    def test_min_samples_leaf_respected(self, rng):
        X = np.arange(10, dtype=float)[:, None]
        y = np.array([0] * 1 + [1] * 9)
        params = T.TreeParams(objective="gini", min_samples_leaf=3)
        c = T.best_split_exhaustive(X, y, params=params)
        assert c is None or min(c.left_stats.sum(), c.right_stats.sum()) >= 3


class TestHistogram:
    def _hist_setup(self, X, g, h, params):
        bins = T.build_bins(X, params.max_bins)
        binned = T.bin_matrix(X, bins)
        feats = np.arange(X.shape[1])
        hist = T.build_histogram(binned, np.arange(X.shape[0]), g, h, feats, bins)
        return bins, binned, hist

    def test_equals_exhaustive_when_bins_value_exact(self, rng):
        params = T.TreeParams(objective="grad_hess", reg_lambda=1.0, gamma=0.0)
        for _ in range(25):
            n = int(rng.integers(8, 150))
            X = np.round(rng.normal(size=(n, 5)), 1)
            g = rng.normal(size=n)
            h = rng.uniform(0.05, 0.3, size=n)
            bins, _, hist = self._hist_setup(X, g, h, params)
            got = T.best_split_histogram(hist, bins, params)
            want = T.best_split_exhaustive(X, g=g, h=h, params=params)
            if want is None:
                assert got is None
                continue
            assert (got.feature, got.threshold) == (want.feature, want.threshold)
            assert got.gain == pytest.approx(want.gain, rel=1e-9)

    def test_single_bin_feature_contributes_nothing(self, rng):
        X = np.column_stack([np.full(30, 2.0), rng.normal(size=30)])
        g = rng.normal(size=30)
        h = np.full(30, 0.25)
        params = T.TreeParams(objective="grad_hess", reg_lambda=1.0)
        bins, _, hist = self._hist_setup(X, g, h, params)
        cand = T.best_split_histogram(hist, bins, params)
        assert cand is None or cand.feature == 1

    def test_sibling_subtraction_conservation(self, rng):
        X = rng.normal(size=(200, 4))
        g = rng.normal(size=200)
        h = rng.uniform(0.1, 0.3, size=200)
        params = T.TreeParams(objective="grad_hess")
        bins = T.build_bins(X, 255)
        binned = T.bin_matrix(X, bins)
        feats = np.arange(4)
        rows = np.arange(200)
        left_rows = rows[X[:, 0] <= 0.0]
        right_rows = rows[X[:, 0] > 0.0]
        parent = T.build_histogram(binned, rows, g, h, feats, bins)
        left = T.build_histogram(binned, left_rows, g, h, feats, bins)
        right = parent.subtract(left)
        assert np.array_equal(right.counts, parent.counts - left.counts)
        direct = T.build_histogram(binned, right_rows, g, h, feats, bins)
        assert np.array_equal(direct.counts, right.counts)
        assert np.allclose(direct.grad, right.grad, atol=1e-9)
        assert np.allclose(direct.hess, right.hess, atol=1e-9)

    def test_binning_caps_at_255(self, rng):
        X = rng.normal(size=(3000, 1))
        bins = T.build_bins(X, 255)
        assert bins.n_bins(0) <= 255
        binned = T.bin_matrix(X, bins)
        assert binned.dtype == np.uint8
        # aggregates over all bins equal totals
        counts = np.bincount(binned[:, 0], minlength=bins.n_bins(0))
        assert counts.sum() == 3000


class TestGrowTree:
    def test_stump_floor_predicts_majority(self, rng):
        X = rng.normal(size=(30, 2))
        y = np.array([0] * 10 + [1] * 20)
        tree = T.grow_tree(X, y, params=T.TreeParams(max_depth=0, objective="gini"))
        assert tree.n_nodes == 1
        assert tree.value[0].tolist() == [10.0, 20.0]

    def test_linearly_separable_depth_2(self, rng):
        n = 100
        X = rng.normal(size=(n, 2))
        y = ((X[:, 0] > 0) & (X[:, 1] > -10)).astype(int)
        tree = T.grow_tree(X, y, params=T.TreeParams(max_depth=2, objective="gini"))
        pred = np.argmax(tree.predict_value(X), axis=1)
        assert np.mean(pred == y) == 1.0

    def test_num_leaves_cap_in_leaf_mode(self, rng):
        n = 3000
        X = rng.normal(size=(n, 6))
        g = rng.normal(size=n)
        h = np.full(n, 0.25)
        params = T.TreeParams(max_depth=25, num_leaves=31, growth="leaf",
                              objective="grad_hess", split_search="hist",
                              reg_lambda=1.0)
        tree = T.grow_tree(X, g=g, h=h, params=params)
        assert tree.n_leaves <= 31

    def test_depth_cap_binds_jointly_with_leaves(self, rng):
        n = 2000
        X = rng.normal(size=(n, 6))
        g = rng.normal(size=n)
        h = np.full(n, 0.25)
        params = T.TreeParams(max_depth=3, num_leaves=31, growth="leaf",
                              objective="grad_hess", split_search="hist",
                              reg_lambda=1.0)
        tree = T.grow_tree(X, g=g, h=h, params=params)
        assert tree.depth <= 3

    def test_invalid_params(self):
        with pytest.raises(InvalidParams):
            T.TreeParams(max_depth=-1).validate()
        with pytest.raises(InvalidParams):
            T.TreeParams(min_samples_leaf=0).validate()
        with pytest.raises(InvalidParams):
            T.TreeParams(num_leaves=0).validate()

    def test_leaf_sample_counts_conserve_root(self, rng):
        X = rng.normal(size=(300, 4))
        y = rng.integers(0, 2, size=300)
        tree = T.grow_tree(X, y, params=T.TreeParams(max_depth=6, objective="gini"))
        leaves = tree.feature < 0
        assert tree.n_samples[leaves].sum() == tree.n_samples[0] == 300

    def test_min_samples_leaf_no_leaf_below(self, rng):
        X = rng.normal(size=(200, 3))
        y = rng.integers(0, 2, size=200)
        params = T.TreeParams(max_depth=8, min_samples_leaf=7, objective="gini")
        tree = T.grow_tree(X, y, params=params)
        leaves = tree.feature < 0
        assert tree.n_samples[leaves].min() >= 7

    def test_depth_never_exceeds_max(self, rng):
        for depth in (0, 1, 3, 6):
            X = rng.normal(size=(200, 3))
            y = rng.integers(0, 2, size=200)
            tree = T.grow_tree(X, y, params=T.TreeParams(max_depth=depth,
                                                         objective="gini"))
            assert tree.depth <= depth


class TestTraverse:
    def _stump(self):
        return T.DecisionTree(
            feature=[0, -1, -1], threshold=[0.0, 0, 0], left=[1, -1, -1],
            right=[2, -1, -1], gain=[1.0, 0, 0], cover=[2, 1, 1],
            n_samples=[2, 1, 1], value=np.array([[0.0], [-5.0], [5.0]]),
            payload="weight",
        )

    def test_negative_goes_left(self):
        assert T.traverse(self._stump(), [-1.0])[0] == -5.0

    def test_boundary_goes_left(self):
        assert T.traverse(self._stump(), [0.0])[0] == -5.0

    def test_feature_index_out_of_range(self):
        with pytest.raises(FeatureIndexOutOfRange):
            T.traverse(self._stump(), np.zeros(0))

    def test_matches_recursive_oracle(self, rng):
        X = rng.normal(size=(400, 5))
        y = rng.integers(0, 2, size=400)
        tree = T.grow_tree(X, y, params=T.TreeParams(max_depth=7, objective="gini"))
        probes = rng.normal(size=(1000, 5))
        batch = tree.predict_value(probes)
        for i in range(0, 1000, 7):
            assert np.array_equal(batch[i], traverse_oracle(tree, probes[i]))
            assert np.array_equal(T.traverse(tree, probes[i]), batch[i])
