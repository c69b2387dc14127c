"""Linear-scan reference implementations.

These are the correctness oracles and the slow side of every benchmark.
They share data types with the engine but none of its pruning or
traversal machinery; keep them boring and obviously right.
"""

from __future__ import annotations

from math import sqrt

import numpy as np

from .core import DEFAULT_METRIC_DIMS, as_points
from .index import UnifiedIndex
from .kernels import brute_hausdorff as _kern_haus
from .kernels import brute_nn as _kern_nn
from .search import DatasetHit

__all__ = [
    "brute_hausdorff",
    "brute_nn",
    "brute_range",
    "scan_ia_topk",
    "scan_gbo_topk",
    "scan_haus_topk",
    "distance_outlier_oracle",
]


def _metric_view(pts, md: int) -> np.ndarray:
    arr = as_points(pts, min_dims=md)
    return np.ascontiguousarray(arr[:, :md])


def brute_hausdorff(q, d, *, metric_dims: int = DEFAULT_METRIC_DIMS) -> float:
    """Exact directed Hausdorff by the O(|q|*|d|) double loop."""
    return _kern_haus(_metric_view(q, metric_dims), _metric_view(d, metric_dims))


def brute_nn(q, d, *, metric_dims: int = DEFAULT_METRIC_DIMS):
    """Nearest row of ``d`` for each row of ``q`` (first index on ties);
    returns (positions, distances)."""
    return _kern_nn(_metric_view(q, metric_dims), _metric_view(d, metric_dims))


def brute_range(points, lo, hi) -> np.ndarray:
    """Row indices of points inside the closed rectangle, ascending."""
    pts = as_points(points)
    lo = np.asarray(lo, dtype=np.float64).ravel()
    hi = np.asarray(hi, dtype=np.float64).ravel()
    keep = np.ones(pts.shape[0], dtype=bool)
    for a in range(2):
        keep &= (pts[:, a] >= lo[a]) & (pts[:, a] <= hi[a])
    return np.flatnonzero(keep)


def _rank(scores: list[tuple[int, float]], k: int, similarity: bool) -> list[DatasetHit]:
    key = (lambda t: (-t[1], t[0])) if similarity else (lambda t: (t[1], t[0]))
    ranked = sorted(scores, key=key)[:k]
    return [DatasetHit(dataset_id=did, score=float(s), rank=i + 1)
            for i, (did, s) in enumerate(ranked)]


def scan_ia_topk(idx: UnifiedIndex, q, k: int) -> list[DatasetHit]:
    """Top-k by MBR intersection area, one dataset at a time."""
    qpts = as_points(q)
    qlo = qpts.min(axis=0)
    qhi = qpts.max(axis=0)
    scores = []
    for t in idx.datasets:
        area = 1.0
        for a in range(2):
            side = min(float(qhi[a]), float(t.hi[0, a])) - max(float(qlo[a]), float(t.lo[0, a]))
            if side <= 0.0:
                area = 0.0
                break
            area *= side
        scores.append((t.dataset_id, area))
    return _rank(scores, k, similarity=True)


def scan_gbo_topk(idx: UnifiedIndex, q, k: int) -> list[DatasetHit]:
    """Top-k by shared grid cells, via plain hash-set intersection."""
    zq = set(int(c) for c in idx.grid.signature_of(as_points(q)))
    scores = []
    for t in idx.datasets:
        scores.append((t.dataset_id, float(len(zq & set(int(c) for c in t.z)))))
    return _rank(scores, k, similarity=True)


def _mbr_face_lb(qlo, qhi, dlo, dhi) -> float:
    """Sound lower bound on H(Q->D) from the two MBRs.

    Every face of Q's box touches at least one query point; that point
    sits at least as far from D's box as the face's own minimum distance,
    so the largest of the four face bounds lower-bounds the Hausdorff.
    """
    worst = 0.0
    for a in range(2):
        b = 1 - a
        gap_b = max(dlo[b] - qhi[b], qlo[b] - dhi[b], 0.0)
        for c in (qlo[a], qhi[a]):
            dx = max(dlo[a] - c, c - dhi[a], 0.0)
            bound = sqrt(dx * dx + gap_b * gap_b)
            if bound > worst:
                worst = bound
    return worst


def scan_haus_topk(idx: UnifiedIndex, q, k: int,
                   *, metric_dims: int | None = None) -> list[DatasetHit]:
    """Top-k by exact directed Hausdorff with an MBR prefilter.

    Datasets are visited in ascending bound order; once k exact distances
    are in hand, a dataset whose bound exceeds the kth distance is
    skipped (ties are still evaluated so ordering stays exact).
    """
    md = idx.metric_dims if metric_dims is None else metric_dims
    qpts = _metric_view(q, md)
    qlo = qpts.min(axis=0)
    qhi = qpts.max(axis=0)
    bounded = []
    for t in idx.datasets:
        lb = _mbr_face_lb(qlo, qhi, t.lo[0], t.hi[0])
        bounded.append((lb, t.dataset_id, t))
    bounded.sort(key=lambda x: (x[0], x[1]))
    scores: list[tuple[int, float]] = []
    kth = float("inf")
    have = 0
    for lb, did, t in bounded:
        if have >= k and lb > kth:
            continue
        dist = _kern_haus(qpts, t.mpts)
        scores.append((did, dist))
        have += 1
        if have >= k:
            kth = sorted(s for _, s in scores)[k - 1]
    return _rank(scores, k, similarity=False)


def distance_outlier_oracle(points, r_thresh: float, min_neighbors: int,
                            *, metric_dims: int = DEFAULT_METRIC_DIMS) -> np.ndarray:
    """Classic distance-based outlier flagging: a point is an outlier when
    fewer than ``min_neighbors`` other points lie within ``r_thresh``.
    Returns a boolean mask."""
    pts = _metric_view(points, metric_dims)
    n = pts.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    r2 = float(r_thresh) * float(r_thresh)
    step = max(1, 2_000_000 // max(n, 1))
    for s in range(0, n, step):
        block = pts[s:s + step]
        d2 = np.zeros((block.shape[0], n), dtype=np.float64)
        for a in range(pts.shape[1]):
            diff = block[:, a, None] - pts[None, :, a]
            d2 += diff * diff
        counts[s:s + step] = (d2 <= r2).sum(axis=1) - 1  # minus self
    return counts < int(min_neighbors)
