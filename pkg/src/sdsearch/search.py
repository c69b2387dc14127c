"""The four searches: dataset range, top-k exemplar, point range, point NN.

Dataset-level searches walk the upper tree depth-first, pruning with
per-metric bounds that are provably no worse than any descendant's true
score; point-level searches run inside one dataset's tree. Pruning is
strict (a node is skipped only when its bound can beat nothing in the
current top-k, ties included) so results match the linear-scan oracles
exactly, including id tie-breaks.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from math import sqrt

import numpy as np

from .core import Dataset, Mbr, MetricKind, as_points, mbr_of
from .grid import signature_intersection_size
from .index import DatasetTree, UnifiedIndex, query_tree
from .kernels import (MODE_HAUS, MODE_HAUS_APPROX, MODE_HAUS_NN, MODE_NN,
                      tree_traverse)
from .metrics import index_epsilon

__all__ = [
    "DatasetHit",
    "RangeQuery",
    "NNResult",
    "range_dataset_search",
    "exemplar_search",
    "range_point_search",
    "nn_point_search",
]


@dataclass(frozen=True)
class DatasetHit:
    dataset_id: int
    score: float
    rank: int


@dataclass(frozen=True)
class RangeQuery:
    """Closed rectangle on the two spatial axes."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).ravel()[:2]
        hi = np.asarray(self.hi, dtype=np.float64).ravel()[:2]
        if lo.shape != (2,) or hi.shape != (2,):
            raise ValueError("range corners need two coordinates each")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("range corners must be finite")
        if (lo > hi).any():
            raise ValueError("range has lo > hi on some axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def of(cls, r) -> "RangeQuery":
        if isinstance(r, RangeQuery):
            return r
        if isinstance(r, Mbr):
            return cls(r.lo[:2], r.hi[:2])
        lo, hi = r
        return cls(lo, hi)


def _disjoint(lo, hi, r: RangeQuery) -> bool:
    for i in range(2):
        if hi[i] < r.lo[i] or r.hi[i] < lo[i]:
            return True
    return False


def _contained(lo, hi, r: RangeQuery) -> bool:
    for i in range(2):
        if lo[i] < r.lo[i] or hi[i] > r.hi[i]:
            return False
    return True


def range_dataset_search(idx: UnifiedIndex, r) -> list[int]:
    """Ids of datasets whose MBR overlaps the closed rectangle, ascending."""
    r = RangeQuery.of(r)
    rt = idx.repo_tree
    out: list[int] = []
    stack = [0]
    while stack:
        i = stack.pop()
        if _disjoint(rt.lo[i], rt.hi[i], r):
            continue
        if rt.left[i] < 0:
            for pos in range(rt.span_lo[i], rt.span_hi[i]):
                did = int(rt.root_ids[pos])
                t = idx.dataset(did)
                if not _disjoint(t.lo[0], t.hi[0], r):
                    out.append(did)
        else:
            stack.append(int(rt.left[i]))
            stack.append(int(rt.right[i]))
    return sorted(out)


def _query_points(q) -> np.ndarray:
    if isinstance(q, Dataset):
        return q.points
    if isinstance(q, DatasetTree):
        return q.points
    return as_points(q)


def _ia_arrays(qlo, qhi, nlo, nhi) -> float:
    area = 1.0
    for i in range(2):
        side = min(float(qhi[i]), float(nhi[i])) - max(float(qlo[i]), float(nlo[i]))
        if side <= 0.0:
            return 0.0
        area *= side
    return area


def exemplar_search(idx: UnifiedIndex, q, metric, k: int, *,
                    epsilon: float | None = None,
                    stats: dict | None = None) -> list[DatasetHit]:
    """Top-k datasets under the chosen measure, best first; score ties
    fall back to ascending dataset id."""
    metric = MetricKind(metric)
    if k < 1:
        raise ValueError("k must be at least 1")
    qpts = _query_points(q)
    md = idx.metric_dims
    rt = idx.repo_tree
    similarity = metric.is_similarity

    qbox = mbr_of(qpts)
    qlo, qhi = qbox.lo, qbox.hi
    zq = qt = None
    eps = 0.0
    if metric is MetricKind.GBO:
        zq = idx.grid.signature_of(qpts)
    if metric in (MetricKind.HAUS_EXACT, MetricKind.HAUS_APPROX):
        qt = query_tree(qpts, f=idx.leaf_capacity, metric_dims=md)
        if metric is MetricKind.HAUS_APPROX:
            eps = float(epsilon) if epsilon is not None else index_epsilon(idx)
            if eps <= 0.0:
                raise ValueError("epsilon must be positive")
    qo = qt.mo[0] if qt is not None else None

    def node_bound(i: int) -> float:
        if metric is MetricKind.IA:
            return _ia_arrays(qlo, qhi, rt.lo[i], rt.hi[i])
        if metric is MetricKind.GBO:
            return float(signature_intersection_size(zq, rt.node_z(i)))
        dd = 0.0
        for a in range(md):
            t = qo[a] - rt.o[i, a]
            dd += t * t
        lb = sqrt(dd) - rt.r[i]
        return lb if lb > 0.0 else 0.0

    # worst current hit sits on top of the heap; entries are keyed so the
    # heap minimum is the hit evicted first under the final ordering
    best: list[tuple[float, int]] = []

    def kth() -> float:
        return best[0][0] if similarity else -best[0][0]

    def full() -> bool:
        return len(best) >= k

    def prunable(bound: float) -> bool:
        if not full():
            return False
        return bound < kth() if similarity else bound > kth()

    def offer(score: float, did: int) -> None:
        item = (score, -did) if similarity else (-score, -did)
        if len(best) < k:
            heapq.heappush(best, item)
        elif item > best[0]:
            heapq.heapreplace(best, item)

    def score_root(t: DatasetTree) -> float:
        mode = MODE_HAUS if metric is MetricKind.HAUS_EXACT else MODE_HAUS_APPROX
        value, _, _, _ = tree_traverse(qt, t, mode, eps=eps)
        return value

    def root_bound(t: DatasetTree) -> float:
        if metric is MetricKind.IA:
            return _ia_arrays(qlo, qhi, t.lo[0], t.hi[0])
        if metric is MetricKind.GBO:
            return float(signature_intersection_size(zq, t.z))
        dd = 0.0
        for a in range(md):
            tt = qo[a] - t.mo[0, a]
            dd += tt * tt
        lb = sqrt(dd) - float(t.r[0])
        return lb if lb > 0.0 else 0.0

    stack: list[tuple[float, int]] = [(node_bound(0), 0)]
    while stack:
        bound, i = stack.pop()
        if prunable(bound):
            if stats is not None:
                stats.setdefault("pruned_spans", []).append(
                    (int(rt.span_lo[i]), int(rt.span_hi[i])))
            continue
        if rt.left[i] < 0:
            for pos in range(rt.span_lo[i], rt.span_hi[i]):
                t = idx.dataset(int(rt.root_ids[pos]))
                rb = root_bound(t)
                if prunable(rb):
                    if stats is not None:
                        stats.setdefault("pruned_spans", []).append((int(pos), int(pos) + 1))
                    continue
                # for IA/GBO the root bound is the exact score already
                offer(rb if similarity else score_root(t), t.dataset_id)
        else:
            lc, rc = int(rt.left[i]), int(rt.right[i])
            lb_, rb_ = node_bound(lc), node_bound(rc)
            # better-bounded child explored first
            first_left = lb_ >= rb_ if similarity else lb_ <= rb_
            if first_left:
                stack.append((rb_, rc))
                stack.append((lb_, lc))
            else:
                stack.append((lb_, lc))
                stack.append((rb_, rc))

    hits = [(s, -nid) for s, nid in best] if similarity else [(-s, -nid) for s, nid in best]
    hits.sort(key=lambda t: (-t[0], t[1]) if similarity else (t[0], t[1]))
    return [DatasetHit(dataset_id=did, score=float(score), rank=pos + 1)
            for pos, (score, did) in enumerate(hits)]


def range_point_search(idx: UnifiedIndex, dataset_id: int, r) -> np.ndarray:
    """All retained points of one dataset inside the closed rectangle,
    ordered by original row."""
    r = RangeQuery.of(r)
    t = idx.dataset(dataset_id)
    hits: list[np.ndarray] = []
    stack = [0]
    while stack:
        i = stack.pop()
        if _disjoint(t.lo[i], t.hi[i], r):
            continue
        if _contained(t.lo[i], t.hi[i], r):
            hits.append(np.arange(t.span_lo[i], t.span_hi[i]))
            continue
        if t.left[i] < 0:
            span = slice(t.span_lo[i], t.span_hi[i])
            pts = t.points[span]
            keep = np.ones(pts.shape[0], dtype=bool)
            for a in range(2):
                keep &= (pts[:, a] >= r.lo[a]) & (pts[:, a] <= r.hi[a])
            hits.append(np.flatnonzero(keep) + t.span_lo[i])
        else:
            stack.append(int(t.left[i]))
            stack.append(int(t.right[i]))
    if not hits:
        return np.empty((0, t.dims), dtype=np.float64)
    pos = np.concatenate(hits)
    pos = pos[np.argsort(t.ids[pos], kind="stable")]
    return t.points[pos]


@dataclass(frozen=True)
class NNResult:
    """Per-query-point nearest neighbors; iterates as
    (query point, nearest point, distance) triples."""

    query_points: np.ndarray
    nn_ids: np.ndarray
    nn_points: np.ndarray
    dists: np.ndarray
    hausdorff: float | None = None

    def __len__(self) -> int:
        return self.query_points.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self.query_points[i], self.nn_points[i], float(self.dists[i])


def nn_point_search(idx: UnifiedIndex, q, dataset_id: int, *,
                    warm_start: bool = False) -> NNResult:
    """Nearest retained point of one dataset for every query point
    (distance ties take the lowest original row id).

    ``warm_start=True`` computes the directed Hausdorff on the way and
    continues NN resolution on the same queues; results are identical
    either way.
    """
    t = idx.dataset(dataset_id)
    qpts = _query_points(q)
    qt = query_tree(qpts, f=idx.leaf_capacity, metric_dims=idx.metric_dims)
    mode = MODE_HAUS_NN if warm_start else MODE_NN
    haus, nn_id, nn_dist, _ = tree_traverse(qt, t, mode)
    order = np.argsort(t.ids)
    rows = order[np.searchsorted(t.ids[order], nn_id)]
    return NNResult(
        query_points=qpts,
        nn_ids=nn_id,
        nn_points=t.points[rows],
        dists=nn_dist,
        hausdorff=haus if warm_start else None,
    )
