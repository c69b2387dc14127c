"""Backend equivalence: the compiled and pure kernels must agree bit for
bit, and both must agree with independent brute-force oracles."""

import subprocess
import sys

import numpy as np
import pytest

from conftest import clustered_points, rand_points
from sdsearch import kernels
from sdsearch.index import query_tree, split_space
from sdsearch.kernels import (MODE_HAUS, MODE_HAUS_APPROX, MODE_HAUS_NN,
                              MODE_NN, available_backends, backend_name,
                              build_tree_arrays, get_kernels, tree_traverse)

BACKENDS = available_backends()
needs_compiled = pytest.mark.skipif(
    "compiled" not in BACKENDS, reason="compiled backend unavailable")


def _point_mix(rng, case, n, d):
    if case == 0:
        return rand_points(rng, n, d=d)
    if case == 1:
        return clustered_points(rng, n, d=d)
    if case == 2:  # duplicate-heavy
        base = rand_points(rng, max(2, n // 4), d=d)
        return base[rng.integers(0, len(base), size=n)]
    pts = np.zeros((n, d))  # collinear
    pts[:, 0] = rng.uniform(0.0, 10.0, size=n)
    return pts


class TestBackendSelection:
    def test_current_backend_is_listed(self):
        assert backend_name() in BACKENDS

    def test_pure_always_available(self):
        assert "pure" in BACKENDS
        assert get_kernels("pure") is not None

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            get_kernels("vectorized")

    def test_env_forces_pure(self):
        code = "import sdsearch.kernels as k; print(k.backend_name())"
        out = subprocess.run(
            [sys.executable, "-c", code],
            env={"PATH": "/usr/bin:/bin", "SDSEARCH_PURE_PYTHON": "1"},
            capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "pure"


@needs_compiled
class TestBruteParity:
    def test_hausdorff_matches_numpy(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = rand_points(rng, int(rng.integers(1, 120)))
            d = rand_points(rng, int(rng.integers(1, 120)))
            dd = ((q[:, None, :] - d[None, :, :]) ** 2).sum(axis=2)
            want = float(np.sqrt(dd.min(axis=1).max()))
            vals = [get_kernels(b).brute_hausdorff(q, d) for b in BACKENDS]
            assert vals[0] == vals[1]
            assert vals[0] == pytest.approx(want, rel=1e-12)

    def test_nn_matches_argmin(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            q = rand_points(rng, int(rng.integers(1, 100)))
            d = rand_points(rng, int(rng.integers(1, 100)))
            dd = ((q[:, None, :] - d[None, :, :]) ** 2).sum(axis=2)
            want_idx = dd.argmin(axis=1)
            outs = [get_kernels(b).brute_nn(q, d) for b in BACKENDS]
            for ids, dists in outs:
                assert np.array_equal(ids, want_idx)
                assert np.array_equal(dists, np.sqrt(dd.min(axis=1)))

    def test_nn_tie_prefers_lowest_index(self):
        q = np.array([[0.0, 0.0]])
        d = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        for b in BACKENDS:
            ids, dists = get_kernels(b).brute_nn(q, d)
            assert ids.tolist() == [0] and dists.tolist() == [1.0]


def _ref_flatten(pts, f, md):
    """Independent flattening of the recursive splitter, for comparing
    the iterative array builders against."""
    root = split_space(pts, f, pts.shape[1], None, metric_dims=md)
    out = {k: [] for k in ("o", "r", "lo", "hi", "left", "right",
                           "slo", "shi", "pts", "ids")}

    def emit(node):
        i = len(out["o"])
        out["o"].append(node.o)
        out["r"].append(node.r)
        out["lo"].append(node.lo)
        out["hi"].append(node.hi)
        out["left"].append(-1)
        out["right"].append(-1)
        out["slo"].append(sum(len(p) for p in out["pts"]))
        out["shi"].append(0)
        if node.is_leaf:
            out["pts"].append(node.points)
            out["ids"].append(node.ids)
        else:
            out["left"][i] = emit(node.left)
            out["right"][i] = emit(node.right)
        out["shi"][i] = sum(len(p) for p in out["pts"])
        return i

    emit(root)
    ids = np.concatenate(out["ids"])
    slo = np.asarray(out["slo"], dtype=np.int64)
    shi = np.asarray(out["shi"], dtype=np.int64)
    min_id = np.array([ids[a:b].min() for a, b in zip(slo, shi)], dtype=np.int64)
    return {
        "o": np.stack(out["o"]), "r": np.asarray(out["r"]),
        "lo": np.stack(out["lo"]), "hi": np.stack(out["hi"]),
        "left": np.asarray(out["left"], dtype=np.int32),
        "right": np.asarray(out["right"], dtype=np.int32),
        "span_lo": slo, "span_hi": shi, "min_id": min_id,
        "points": np.concatenate(out["pts"]), "ids": ids,
    }


class TestTreeBuilder:
    @needs_compiled
    def test_backends_byte_identical(self):
        rng = np.random.default_rng(7)
        engines = [get_kernels(b) for b in BACKENDS]
        for trial in range(40):
            n = int(rng.integers(1, 260))
            d = int(rng.integers(2, 5))
            f = int(rng.integers(1, 12))
            pts = _point_mix(rng, trial % 4, n, d)
            rows = np.arange(n, dtype=np.int64)
            results = [e.build_tree_arrays(pts, rows, f, 2) for e in engines]
            for a, b in zip(*results):
                assert a.dtype == b.dtype and a.shape == b.shape
                assert a.tobytes() == b.tobytes()

    def test_structure_matches_recursive_reference(self):
        rng = np.random.default_rng(8)
        for trial in range(25):
            n = int(rng.integers(1, 200))
            f = int(rng.integers(1, 9))
            pts = _point_mix(rng, trial % 4, n, 2)
            rows = np.arange(n, dtype=np.int64)
            got = build_tree_arrays(pts, rows, f, 2)
            (o, r, lo, hi, left, right, slo, shi, min_id, opts, ids) = got
            ref = _ref_flatten(pts, f, 2)
            assert np.array_equal(left, ref["left"])
            assert np.array_equal(right, ref["right"])
            assert np.array_equal(slo, ref["span_lo"])
            assert np.array_equal(shi, ref["span_hi"])
            assert np.array_equal(min_id, ref["min_id"])
            assert np.array_equal(ids, ref["ids"])
            assert np.array_equal(opts, ref["points"])
            assert np.array_equal(lo, ref["lo"])
            assert np.array_equal(hi, ref["hi"])
            # center/radius may differ from numpy's pairwise sums by ulps
            np.testing.assert_allclose(o, ref["o"], atol=1e-9)
            np.testing.assert_allclose(r, ref["r"], rtol=1e-9, atol=1e-12)

    def test_singleton(self):
        pts = np.array([[2.0, 3.0]])
        o, r, lo, hi, left, right, slo, shi, min_id, opts, ids = \
            build_tree_arrays(pts, np.array([0], dtype=np.int64), 4, 2)
        assert o.tolist() == [[2.0, 3.0]] and r.tolist() == [0.0]
        assert left.tolist() == [-1] and shi.tolist() == [1]


def _traverse_all(q, d, mode, eps=0.0, f=6):
    outs = []
    for b in BACKENDS:
        eng = get_kernels(b)
        qt = query_tree(q, f=f)
        dt = query_tree(d, f=f)
        outs.append(tree_traverse(qt, dt, mode, eps=eps, impl=eng))
    return outs


class TestTraverse:
    @needs_compiled
    def test_haus_parity_and_exactness(self):
        rng = np.random.default_rng(21)
        for trial in range(40):
            shape = clustered_points if trial % 2 else rand_points
            q = shape(rng, int(rng.integers(1, 150)))
            d = shape(rng, int(rng.integers(1, 150)))
            outs = _traverse_all(q, d, MODE_HAUS)
            want = get_kernels("pure").brute_hausdorff(q, d)
            (h0, _, _, p0), (h1, _, _, p1) = outs
            assert h0 == h1 and p0 == p1
            assert h0 == pytest.approx(want, rel=1e-9)

    @needs_compiled
    def test_nn_parity_and_exactness(self):
        rng = np.random.default_rng(22)
        for trial in range(40):
            shape = clustered_points if trial % 2 else rand_points
            q = shape(rng, int(rng.integers(1, 150)))
            d = shape(rng, int(rng.integers(1, 150)))
            outs = _traverse_all(q, d, MODE_NN)
            dd = ((q[:, None, :] - d[None, :, :]) ** 2).sum(axis=2)
            want_pos = dd.argmin(axis=1)
            (h0, i0, d0, p0), (h1, i1, d1, p1) = outs
            assert p0 == p1
            assert np.isnan(h0) and np.isnan(h1)
            assert np.array_equal(i0, i1) and d0.tobytes() == d1.tobytes()
            # outputs are aligned to original query rows already
            assert np.array_equal(i0, want_pos)

    @needs_compiled
    def test_haus_nn_returns_both(self):
        rng = np.random.default_rng(23)
        for _ in range(15):
            q = clustered_points(rng, int(rng.integers(1, 120)))
            d = clustered_points(rng, int(rng.integers(1, 120)))
            outs = _traverse_all(q, d, MODE_HAUS_NN)
            want = get_kernels("pure").brute_hausdorff(q, d)
            for h, ids, dists, _pops in outs:
                assert h == pytest.approx(want, rel=1e-9)
                assert dists.max() == h

    def test_nn_ties_resolve_to_lowest_row(self):
        # integer lattices force exact distance ties; the winner must be
        # the lowest original row id, matching the brute oracle
        rng = np.random.default_rng(24)
        for trial in range(60):
            q = rng.integers(0, 7, size=(int(rng.integers(1, 40)), 2)).astype(float)
            d = rng.integers(0, 7, size=(int(rng.integers(1, 40)), 2)).astype(float)
            dd = ((q[:, None, :] - d[None, :, :]) ** 2).sum(axis=2)
            want_pos = dd.argmin(axis=1)
            for b in BACKENDS:
                eng = get_kernels(b)
                qt, dt = query_tree(q, f=3), query_tree(d, f=3)
                _, ids, dists, _ = tree_traverse(qt, dt, MODE_NN, impl=eng)
                assert np.array_equal(ids, want_pos), f"trial {trial} ({b})"

    @needs_compiled
    def test_approx_parity_and_bound(self):
        rng = np.random.default_rng(25)
        for _ in range(30):
            q = clustered_points(rng, int(rng.integers(1, 150)))
            d = clustered_points(rng, int(rng.integers(1, 150)))
            eps = float(rng.uniform(0.05, 5.0))
            outs = _traverse_all(q, d, MODE_HAUS_APPROX, eps=eps)
            want = get_kernels("pure").brute_hausdorff(q, d)
            (h0, _, _, p0), (h1, _, _, p1) = outs
            assert h0 == h1 and p0 == p1
            assert abs(h0 - want) <= 2.0 * eps + 1e-12

    def test_metric_dims_must_agree(self):
        q = query_tree(np.zeros((3, 2)) + np.arange(3)[:, None], f=2)
        d3 = query_tree(np.random.default_rng(0).uniform(size=(4, 3)),
                        f=2, metric_dims=3)
        with pytest.raises(ValueError):
            tree_traverse(q, d3, MODE_HAUS)
