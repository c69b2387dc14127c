import numpy as np
import pytest
from fastapi.testclient import TestClient

from sdsearch.core import MetricKind
from sdsearch.search import (RangeQuery, exemplar_search, nn_point_search,
                             range_dataset_search, range_point_search)
from sdsearch.service import create_app


def _f12(x):
    return float(f"{float(x):.12g}")


@pytest.fixture(scope="module")
def client(small_index):
    return TestClient(create_app(small_index))


class TestDatasetsEndpoint:
    def test_metadata_matches_index(self, client, small_index):
        r = client.get("/datasets")
        assert r.status_code == 200
        body = r.json()
        assert [e["id"] for e in body] == list(small_index.dataset_ids)
        for e in body:
            t = small_index.dataset(e["id"])
            assert e["point_count"] == t.size
            assert e["mbr"]["lo"] == [float(v) for v in t.lo[0]]
            assert e["mbr"]["hi"] == [float(v) for v in t.hi[0]]
            assert e["name"] == t.name

    def test_no_index_is_503(self):
        bare = TestClient(create_app(None))
        assert bare.get("/datasets").status_code == 503
        assert bare.post("/search/datasets/range",
                         json={"lo": [0, 0], "hi": [1, 1]}).status_code == 503


class TestRangeEndpoint:
    def test_parity_with_direct_call(self, client, small_index):
        rng = np.random.default_rng(81)
        for _ in range(15):
            lo = rng.uniform(-10.0, 90.0, size=2)
            hi = lo + rng.uniform(0.0, 50.0, size=2)
            r = client.post("/search/datasets/range",
                            json={"lo": lo.tolist(), "hi": hi.tolist()})
            assert r.status_code == 200
            want = range_dataset_search(small_index, RangeQuery(lo, hi))
            assert r.json()["ids"] == [int(i) for i in want]

    def test_inverted_corners_400(self, client):
        r = client.post("/search/datasets/range",
                        json={"lo": [5, 0], "hi": [0, 5]})
        assert r.status_code == 400

    def test_malformed_body_400(self, client):
        r = client.post("/search/datasets/range", json={"lo": [0, 0]})
        assert r.status_code == 400
        r = client.post("/search/datasets/range",
                        content=b"{not json", headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_repeat_requests_byte_identical(self, client):
        body = {"lo": [0.0, 0.0], "hi": [70.0, 70.0]}
        a = client.post("/search/datasets/range", json=body)
        b = client.post("/search/datasets/range", json=body)
        assert a.content == b.content


class TestExemplarEndpoint:
    def test_self_query_rank_one_zero_score(self, client, small_index):
        t = small_index.datasets[3]
        r = client.post("/search/datasets/exemplar", json={
            "points": t.points.tolist(), "metric": "haus_exact", "k": 1})
        assert r.status_code == 200
        hit = r.json()["hits"][0]
        assert hit == {"id": t.dataset_id, "score": 0.0, "rank": 1}

    def test_unknown_metric_400(self, client):
        r = client.post("/search/datasets/exemplar", json={
            "points": [[0.0, 0.0]], "metric": "cosine", "k": 3})
        assert r.status_code == 400

    def test_bad_k_400(self, client):
        r = client.post("/search/datasets/exemplar", json={
            "points": [[0.0, 0.0]], "metric": "ia", "k": 0})
        assert r.status_code == 400

    def test_empty_points_400(self, client):
        r = client.post("/search/datasets/exemplar", json={
            "points": [], "metric": "ia", "k": 3})
        assert r.status_code == 400

    @pytest.mark.parametrize("metric", [m.value for m in MetricKind])
    def test_parity_with_direct_call(self, client, small_index, metric):
        rng = np.random.default_rng(82)
        q = rng.uniform(10.0, 80.0, size=(25, 2))
        r = client.post("/search/datasets/exemplar", json={
            "points": q.tolist(), "metric": metric, "k": 6})
        assert r.status_code == 200
        want = exemplar_search(small_index, q, MetricKind(metric), 6)
        got = r.json()["hits"]
        assert [h["id"] for h in got] == [h.dataset_id for h in want]
        assert [h["score"] for h in got] == [_f12(h.score) for h in want]
        assert [h["rank"] for h in got] == [h.rank for h in want]

    def test_epsilon_forwarded(self, client, small_index):
        q = [[30.0, 30.0], [40.0, 40.0]]
        r = client.post("/search/datasets/exemplar", json={
            "points": q, "metric": "haus_approx", "k": 4, "epsilon": 2.5})
        want = exemplar_search(small_index, np.asarray(q),
                               MetricKind.HAUS_APPROX, 4, epsilon=2.5)
        assert [h["score"] for h in r.json()["hits"]] == \
            [_f12(h.score) for h in want]

    def test_oversized_payload_413(self, small_index):
        tiny = TestClient(create_app(small_index, max_body=500))
        q = [[float(i), 0.0] for i in range(200)]
        r = tiny.post("/search/datasets/exemplar", json={
            "points": q, "metric": "ia", "k": 1})
        assert r.status_code == 413


class TestPointEndpoints:
    def test_unknown_dataset_404(self, client):
        assert client.post("/datasets/404/points/range", json={
            "lo": [0, 0], "hi": [1, 1]}).status_code == 404
        assert client.post("/datasets/404/points/nn", json={
            "points": [[0.0, 0.0]]}).status_code == 404

    def test_points_range_parity(self, client, small_index):
        rng = np.random.default_rng(83)
        t = small_index.datasets[6]
        for _ in range(10):
            lo = rng.uniform(0.0, 80.0, size=2)
            hi = lo + rng.uniform(0.0, 40.0, size=2)
            r = client.post(f"/datasets/{t.dataset_id}/points/range",
                            json={"lo": lo.tolist(), "hi": hi.tolist()})
            assert r.status_code == 200
            want = range_point_search(small_index, t.dataset_id,
                                      RangeQuery(lo, hi))
            assert r.json()["points"] == [[float(v) for v in row]
                                          for row in want]

    def test_nn_self_query_zero_distances(self, client, small_index):
        t = small_index.datasets[2]
        q = t.points[np.argsort(t.ids)][:30]
        r = client.post(f"/datasets/{t.dataset_id}/points/nn",
                        json={"points": q.tolist()})
        assert r.status_code == 200
        pairs = r.json()["pairs"]
        assert len(pairs) == len(q)
        assert all(p["dist"] == 0.0 for p in pairs)
        assert all(p["query"] == p["nn"] for p in pairs)

    def test_nn_parity(self, client, small_index):
        rng = np.random.default_rng(84)
        t = small_index.datasets[9]
        q = rng.uniform(0.0, 90.0, size=(40, 2))
        r = client.post(f"/datasets/{t.dataset_id}/points/nn",
                        json={"points": q.tolist()})
        want = nn_point_search(small_index, q, t.dataset_id)
        got = r.json()["pairs"]
        assert [p["dist"] for p in got] == [_f12(d) for d in want.dists]
        assert [p["nn"] for p in got] == [[float(v) for v in row]
                                          for row in want.nn_points]

    def test_non_finite_points_400(self, client, small_index):
        t = small_index.datasets[0]
        r = client.post(f"/datasets/{t.dataset_id}/points/nn",
                        content=b'{"points": [[Infinity, 0.0]]}',
                        headers={"content-type": "application/json"})
        assert r.status_code == 400


class TestStaticMount:
    def test_ui_served_when_configured(self, small_index, tmp_path):
        (tmp_path / "index.html").write_text("<h1>search ui</h1>")
        app = create_app(small_index, static_dir=tmp_path)
        c = TestClient(app)
        r = c.get("/")
        assert r.status_code == 200 and "search ui" in r.text
        # API routes registered before the mount keep working
        assert c.get("/datasets").status_code == 200
