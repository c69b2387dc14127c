import json
import struct

import numpy as np
import pytest

from sdsearch.core import (DatasetError, IndexFormatError, ManifestError,
                           MetricKind)
from sdsearch.index import build
from sdsearch.io import (generate_synthetic, load_dataset, load_index,
                         load_manifest, load_points, load_repository,
                         save_index)
from sdsearch.search import (RangeQuery, exemplar_search, nn_point_search,
                             range_dataset_search, range_point_search)


class TestLoadPoints:
    def test_two_comma_rows(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("0,0\n1,1\n")
        pts, rejected = load_points(p, 2)
        assert pts.tolist() == [[0.0, 0.0], [1.0, 1.0]]
        assert rejected == []

    def test_header_skipped(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("x,y\n0,0\n1,1\n")
        pts, rejected = load_points(p, 2)
        assert len(pts) == 2 and rejected == []

    def test_tab_delimiter_detected(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("0\t0\n1\t2\n")
        pts, _ = load_points(p, 2)
        assert pts.tolist() == [[0.0, 0.0], [1.0, 2.0]]

    def test_bad_rows_rejected_with_line_numbers(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("0,0\nfoo,bar\n2,2\n3,nan\n")
        pts, rejected = load_points(p, 2)
        assert len(pts) == 2
        assert rejected == [2, 4]

    def test_no_valid_rows_is_an_error(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("x,y\nfoo,bar\n")
        with pytest.raises(DatasetError):
            load_points(p, 2)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_points(tmp_path / "nope.csv", 2)

    def test_large_generated_file_count(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = rng.uniform(0.0, 100.0, size=(100_000, 2))
        p = tmp_path / "big.csv"
        p.write_text("\n".join(f"{float(a)!r},{float(b)!r}" for a, b in rows) + "\n")
        pts, rejected = load_points(p, 2)
        assert pts.shape == (100_000, 2) and rejected == []
        assert np.array_equal(pts, rows)

    def test_load_dataset_wraps_points(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2\n3,4\n")
        ds = load_dataset(p, 2, dataset_id=7)
        assert ds.dataset_id == 7
        assert ds.points.shape == (2, 2)


class TestManifest:
    def _write(self, tmp_path, body):
        mp = tmp_path / "repo.json"
        mp.write_text(json.dumps(body))
        return mp

    def _points_file(self, tmp_path, name, text="0,0\n1,1\n2,0\n"):
        p = tmp_path / name
        p.write_text(text)
        return name

    def test_roundtrip(self, tmp_path):
        fa = self._points_file(tmp_path, "a.csv")
        fb = self._points_file(tmp_path, "b.csv", "5,5\n6,6\n")
        mp = self._write(tmp_path, {
            "name": "demo", "theta": 4, "f": 6,
            "datasets": [
                {"id": 0, "name": "alpha", "path": fa},
                {"id": 1, "path": fb},
            ],
        })
        man = load_manifest(mp)
        assert man.name == "demo" and man.theta == 4
        assert man.leaf_capacity == 6
        repo = load_repository(man)
        assert [d.dataset_id for d in repo.datasets] == [0, 1]
        assert repo.by_id(0).name == "alpha"
        assert repo.by_id(0).points.shape == (3, 2)

    def test_defaults(self, tmp_path):
        f = self._points_file(tmp_path, "a.csv")
        man = load_manifest(self._write(tmp_path, {
            "datasets": [{"id": 0, "path": f}]}))
        assert man.theta == 5 and man.metric_dims == 2
        assert man.leaf_capacity == 10

    def test_duplicate_ids_rejected(self, tmp_path):
        f = self._points_file(tmp_path, "a.csv")
        mp = self._write(tmp_path, {
            "datasets": [{"id": 1, "path": f}, {"id": 1, "path": f}]})
        with pytest.raises(ManifestError):
            load_manifest(mp)

    def test_missing_point_file_rejected(self, tmp_path):
        mp = self._write(tmp_path, {
            "datasets": [{"id": 0, "path": "ghost.csv"}]})
        with pytest.raises(ManifestError):
            load_manifest(mp)

    def test_empty_dataset_list_rejected(self, tmp_path):
        with pytest.raises(ManifestError):
            load_manifest(self._write(tmp_path, {"datasets": []}))


class TestGenerateSynthetic:
    def test_small_no_outliers(self):
        repo, labels = generate_synthetic(1, 10, "uniform", 0.0, seed=0)
        assert len(repo.datasets) == 1
        assert repo.datasets[0].points.shape == (10, 2)
        assert not labels[repo.datasets[0].dataset_id].any()

    def test_one_percent_is_exactly_ten_of_a_thousand(self):
        repo, labels = generate_synthetic(3, 1000, "clustered", 0.01, seed=1)
        for ds in repo.datasets:
            assert labels[ds.dataset_id].sum() == 10

    def test_same_seed_identical_bytes(self):
        a, la = generate_synthetic(4, 300, "clustered", 0.02, seed=5)
        b, lb = generate_synthetic(4, 300, "clustered", 0.02, seed=5)
        for da, db in zip(a.datasets, b.datasets):
            assert da.points.tobytes() == db.points.tobytes()
            assert np.array_equal(la[da.dataset_id], lb[db.dataset_id])

    def test_different_seed_differs(self):
        a, _ = generate_synthetic(1, 50, "uniform", 0.0, seed=1)
        b, _ = generate_synthetic(1, 50, "uniform", 0.0, seed=2)
        assert a.datasets[0].points.tobytes() != b.datasets[0].points.tobytes()

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            generate_synthetic(0, 10, "uniform", 0.0, seed=0)
        with pytest.raises(ValueError):
            generate_synthetic(1, 10, "pareto", 0.0, seed=0)
        with pytest.raises(ValueError):
            generate_synthetic(1, 10, "uniform", 1.0, seed=0)
        with pytest.raises(ValueError):
            generate_synthetic(1, 10, "uniform", -0.1, seed=0)

    def test_extra_dims(self):
        repo, _ = generate_synthetic(1, 20, "uniform", 0.0, seed=3, dims=4)
        assert repo.datasets[0].points.shape == (20, 4)


def _query_suite(idx):
    """A small deterministic battery touching all four searches."""
    rng = np.random.default_rng(99)
    out = []
    for _ in range(6):
        c = rng.uniform(0.0, 80.0, size=2)
        out.append(("range", list(range_dataset_search(
            idx, RangeQuery(c, c + rng.uniform(1.0, 40.0, size=2))))))
    q = idx.datasets[0].points[:20]
    for metric in MetricKind:
        hits = exemplar_search(idx, q, metric, 5)
        out.append(("exemplar", [(h.dataset_id, h.score) for h in hits]))
    t = idx.datasets[1]
    pr = range_point_search(idx, t.dataset_id,
                            RangeQuery(t.lo[0][:2], t.hi[0][:2]))
    out.append(("prange", pr.tobytes()))
    res = nn_point_search(idx, q, t.dataset_id, warm_start=True)
    out.append(("nn", (res.nn_ids.tobytes(), res.dists.tobytes(),
                       res.hausdorff)))
    return out


class TestPersistence:
    def test_roundtrip_identical_answers(self, tmp_path, small_index):
        before = _query_suite(small_index)
        path = tmp_path / "snap.idx"
        save_index(small_index, path)
        loaded = load_index(path)
        assert _query_suite(loaded) == before
        assert loaded.params == small_index.params
        assert loaded.r_prime == small_index.r_prime
        for a, b in zip(small_index.datasets, loaded.datasets):
            assert a.points.tobytes() == b.points.tobytes()
            assert a.name == b.name

    def test_truncation_detected(self, tmp_path, small_index):
        path = tmp_path / "snap.idx"
        save_index(small_index, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-40])
        with pytest.raises(IndexFormatError):
            load_index(path)

    def test_bitflip_detected(self, tmp_path, small_index):
        path = tmp_path / "snap.idx"
        save_index(small_index, path)
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(IndexFormatError, match="checksum"):
            load_index(path)

    def test_version_bump_refused(self, tmp_path, small_index):
        path = tmp_path / "snap.idx"
        save_index(small_index, path)
        blob = bytearray(path.read_bytes())
        # bump the little-endian u32 version after the 8-byte magic,
        # then refresh the trailing checksum so only the version differs
        struct.pack_into("<I", blob, 8, 99)
        import hashlib
        blob[-32:] = hashlib.sha256(bytes(blob[:-32])).digest()
        path.write_bytes(bytes(blob))
        with pytest.raises(IndexFormatError, match="version"):
            load_index(path)

    def test_not_a_snapshot(self, tmp_path):
        path = tmp_path / "junk.idx"
        path.write_bytes(b"definitely not an index")
        with pytest.raises(IndexFormatError, match="magic"):
            load_index(path)
