import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import audit_index, clustered_points
from sdsearch.core import Dataset, Repository, as_points
from sdsearch.index import (build, knee_threshold, query_tree,
                            refine_bottom_up, split_space)
from sdsearch.io import generate_synthetic


def _leaves(node):
    if node.left is None:
        yield node
    else:
        yield from _leaves(node.left)
        yield from _leaves(node.right)


class TestSplitSpace:
    def test_two_points_go_left_right(self):
        root = split_space(np.array([[0.0, 0.0], [10.0, 0.0]]), 1, 2, None)
        # strictly-above-midpoint points land in the left child
        assert root.left.points.tolist() == [[10.0, 0.0]]
        assert root.right.points.tolist() == [[0.0, 0.0]]

    def test_leaf_when_under_capacity(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        root = split_space(pts, 3, 2, None)
        assert root.left is None and root.right is None

    def test_identical_points_stay_one_leaf(self):
        pts = np.tile([[3.0, 4.0]], (25, 1))
        root = split_space(pts, 4, 2, None)
        assert root.left is None
        assert root.r == 0.0

    def test_ledger_gets_leaf_radii_only(self):
        led = []
        pts = np.random.default_rng(3).uniform(0.0, 50.0, size=(40, 2))
        root = split_space(pts, 5, 2, led)
        want = sorted(leaf.r for leaf in _leaves(root))
        assert sorted(led) == pytest.approx(want)

    def test_capacity_validated(self):
        with pytest.raises(ValueError):
            split_space(np.zeros((2, 2)), 0, 2, None)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 60), st.integers(1, 7))
    def test_leaves_partition_points(self, seed, n, f):
        rng = np.random.default_rng(seed)
        pts = clustered_points(rng, n)
        root = split_space(pts, f, 2, None)
        got = np.concatenate([leaf.points for leaf in _leaves(root)])
        key = lambda a: np.lexsort((a[:, 1], a[:, 0]))
        assert np.array_equal(got[key(got)], pts[key(pts)])


class TestKneeThreshold:
    def test_clear_knee(self):
        assert knee_threshold([10.0, 8.0, 2.0, 1.0, 0.0]) == 2.0

    def test_singleton(self):
        assert knee_threshold([1.0]) == 1.0

    def test_empty_disables_removal(self):
        assert knee_threshold([]) == np.inf

    def test_flat_profile_keeps_max(self):
        assert knee_threshold([4.0, 4.0, 4.0]) == 4.0

    def test_late_drop_picks_the_tail(self):
        assert knee_threshold([10.0, 9.0, 8.0, 0.1, 0.0]) == 0.1

    @given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=100),
           st.randoms(use_true_random=False))
    def test_result_is_a_ledger_value_and_order_free(self, radii, rnd):
        t = knee_threshold(radii)
        assert t in radii
        shuffled = list(radii)
        rnd.shuffle(shuffled)
        assert knee_threshold(shuffled) == t


class TestRefineBottomUp:
    def test_small_radius_leaf_untouched(self):
        root = split_space(np.array([[0.0, 0.0], [0.1, 0.0]]), 4, 2, None)
        removed = refine_bottom_up(root, 1.0)
        assert removed.size == 0
        assert root.points.shape == (2, 2)

    def test_far_point_removed_and_stats_refit(self):
        # one stray at distance ~50 sharing its leaf with a tight disc of
        # a hundred inliers; the leaf center stays near the disc
        rng = np.random.default_rng(5)
        inliers = rng.uniform(-0.5, 0.5, size=(100, 2))
        pts = np.vstack([inliers, [[50.0, 0.0]]])
        root = split_space(pts, 200, 2, None)
        removed = refine_bottom_up(root, 2.0)
        assert removed.tolist() == [100]
        kept = root.points
        assert kept.shape == (100, 2)
        want_o = kept.mean(axis=0)
        want_r = np.sqrt(((kept - want_o) ** 2).sum(axis=1)).max()
        assert root.o == pytest.approx(want_o)
        assert root.r == pytest.approx(want_r)
        assert np.array_equal(root.lo, kept.min(axis=0))
        assert np.array_equal(root.hi, kept.max(axis=0))

    def test_whole_tree_never_emptied(self):
        pts = np.array([[0.0, 0.0], [100.0, 100.0]])
        root = split_space(pts, 8, 2, None)
        removed = refine_bottom_up(root, 1e-9)
        assert removed.size == 0

    def test_negative_radius_rejected(self):
        root = split_space(np.array([[0.0, 0.0], [1.0, 1.0]]), 4, 2, None)
        with pytest.raises(ValueError):
            refine_bottom_up(root, -0.5)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_all_nodes_refit_exactly(self, seed):
        rng = np.random.default_rng(seed)
        pts = clustered_points(rng, int(rng.integers(10, 80)))
        root = split_space(pts, 6, 2, None)
        refine_bottom_up(root, float(rng.uniform(2.0, 8.0)))

        def walk(node):
            sub = node.points if node.left is None else np.concatenate(
                [walk(node.left), walk(node.right)])
            o = sub.mean(axis=0)
            r = np.sqrt(((sub - o) ** 2).sum(axis=1)).max()
            assert node.o == pytest.approx(o, abs=1e-9)
            assert node.r == pytest.approx(r, rel=1e-9)
            assert np.array_equal(node.lo, sub.min(axis=0))
            assert np.array_equal(node.hi, sub.max(axis=0))
            return sub

        walk(root)


class TestBuild:
    def test_single_small_dataset_is_two_single_node_trees(self):
        ds = Dataset(dataset_id=0, name="only",
                     points=as_points([[0.0, 0.0], [1.0, 1.0]]))
        idx = build(Repository(datasets=[ds]), f=10)
        assert idx.repo_tree.left[0] < 0 and idx.repo_tree.o.shape[0] == 1
        t = idx.dataset(0)
        assert t.left[0] < 0 and t.o.shape[0] == 1

    def test_params_and_lookup(self, small_index):
        assert small_index.params == {"f": 8, "theta": 5, "metric_dims": 2}
        assert small_index.dataset_ids == tuple(range(12))
        with pytest.raises(KeyError):
            small_index.dataset(99)

    def test_audit_small(self, small_index, small_repo):
        assert audit_index(small_index, small_repo) == []

    def test_audit_medium_with_outliers(self):
        repo, _ = generate_synthetic(30, 200, "clustered", 0.01, seed=11)
        idx = build(repo, f=10, theta=5)
        assert audit_index(idx, repo) == []
        assert idx.removed_total > 0

    def test_no_outlier_removal_keeps_everything(self):
        repo, _ = generate_synthetic(5, 120, "clustered", 0.01, seed=2)
        idx = build(repo, f=10, theta=5, outlier_removal=False)
        assert idx.removed_total == 0
        assert idx.r_prime == np.inf


class TestQueryTree:
    def test_matches_reference_layout(self):
        pts = np.array([[0.0, 0.0], [10.0, 0.0]])
        qt = query_tree(pts, f=1, metric_dims=2)
        assert qt.points.tolist() == [[10.0, 0.0], [0.0, 0.0]]
        assert qt.ids.tolist() == [1, 0]

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 120), st.integers(1, 9))
    def test_structural_invariants(self, seed, n, f):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0.0, 40.0, size=(n, 2))
        t = query_tree(pts, f=f, metric_dims=2)
        assert np.array_equal(np.sort(t.ids), np.arange(n))
        assert np.array_equal(t.points, pts[t.ids])
        for i in range(t.o.shape[0]):
            a, b = int(t.span_lo[i]), int(t.span_hi[i])
            sub = t.points[a:b]
            d = np.sqrt(((sub - t.o[i]) ** 2).sum(axis=1))
            assert d.max() <= t.r[i] * (1 + 1e-9) + 1e-12
            assert int(t.min_id[i]) == int(t.ids[a:b].min())
            li, ri = int(t.left[i]), int(t.right[i])
            if li >= 0:
                assert t.span_lo[li] == a and t.span_hi[ri] == b
                assert t.span_hi[li] == t.span_lo[ri]
