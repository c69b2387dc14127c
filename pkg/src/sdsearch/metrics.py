"""Dataset-level measures: intersection area, grid overlap, Hausdorff.

The Hausdorff family is directed (query toward target) and runs on the
ball-tree traversal; the ball bound pair lets whole subtrees resolve
from two center distances. Approximate mode stops a node pair early once
both radii drop under epsilon, trading at most 2*epsilon of error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_METRIC_DIMS, Dataset, Mbr, as_points, euclidean
from .grid import signature_intersection_size
from .index import DatasetTree, UnifiedIndex, query_tree
from .kernels import MODE_HAUS, MODE_HAUS_APPROX, tree_traverse

__all__ = [
    "HausBounds",
    "ia",
    "gbo",
    "haus_bounds",
    "haus_exact",
    "haus_approx",
    "haus_symmetric",
    "default_epsilon",
    "index_epsilon",
]


@dataclass(frozen=True)
class HausBounds:
    """Lower/upper bracket on a directed Hausdorff distance."""

    lb: float
    ub: float

    def __post_init__(self):
        if not (0.0 <= self.lb <= self.ub):
            raise ValueError(f"invalid bounds lb={self.lb} ub={self.ub}")


def ia(a: Mbr, b: Mbr) -> float:
    """Intersection area of two boxes on the two spatial axes."""
    area = 1.0
    for i in range(2):
        side = min(float(a.hi[i]), float(b.hi[i])) - max(float(a.lo[i]), float(b.lo[i]))
        if side <= 0.0:
            return 0.0
        area *= side
    return area


def gbo(zq: np.ndarray, zd: np.ndarray) -> int:
    """Grid-based overlap: shared occupied-cell count of two signatures."""
    return signature_intersection_size(zq, zd)


def haus_bounds(o1, r1: float, o2, r2: float) -> HausBounds:
    """Ball bracket on H(set1 -> set2).

    Sound when o1 and o2 are the arithmetic means of their sets and every
    member lies within its radius; both hold for index nodes. One center
    distance yields both ends.
    """
    if r1 < 0 or r2 < 0:
        raise ValueError("radii must be non-negative")
    d = euclidean(o1, o2, dims=None)
    lb = d - r2
    if lb < 0.0:
        lb = 0.0
    ub = math.sqrt(d * d + r2 * r2) + r1
    return HausBounds(lb, ub)


def _coerce_tree(obj, metric_dims: int | None, f: int) -> DatasetTree:
    if isinstance(obj, DatasetTree):
        return obj
    if isinstance(obj, Dataset):
        pts = obj.points
    else:
        pts = as_points(obj)
    md = DEFAULT_METRIC_DIMS if metric_dims is None else metric_dims
    return query_tree(pts, f=f, metric_dims=md)


def haus_exact(q, d, *, metric_dims: int | None = None, f: int = 10) -> float:
    """Exact directed Hausdorff H(q -> d).

    Either argument may be an already-indexed tree, a Dataset, or a raw
    point array (indexed on the fly).
    """
    qt = _coerce_tree(q, metric_dims, f)
    dt = _coerce_tree(d, metric_dims if metric_dims is not None else qt.metric_dims, f)
    value, _, _, _ = tree_traverse(qt, dt, MODE_HAUS)
    return value


def haus_approx(q, d, epsilon: float | None = None, *,
                theta: int = 5, metric_dims: int | None = None, f: int = 10) -> float:
    """Directed Hausdorff within 2*epsilon of exact.

    When ``epsilon`` is omitted it defaults to the grid-cell width of the
    two sets' joint footprint at resolution ``theta``.
    """
    qt = _coerce_tree(q, metric_dims, f)
    dt = _coerce_tree(d, metric_dims if metric_dims is not None else qt.metric_dims, f)
    if epsilon is None:
        joint = qt.mbr.union(dt.mbr)
        epsilon = default_epsilon(joint, theta)
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    value, _, _, _ = tree_traverse(qt, dt, MODE_HAUS_APPROX, eps=float(epsilon))
    return value


def haus_symmetric(a, b, *, metric_dims: int | None = None, f: int = 10) -> float:
    """max of the two directed distances; a convenience, not used by the
    searches."""
    at = _coerce_tree(a, metric_dims, f)
    bt = _coerce_tree(b, metric_dims if metric_dims is not None else at.metric_dims, f)
    fwd, _, _, _ = tree_traverse(at, bt, MODE_HAUS)
    rev, _, _, _ = tree_traverse(bt, at, MODE_HAUS)
    return max(fwd, rev)


def default_epsilon(box: Mbr, theta: int) -> float:
    """Cell width of ``box`` at resolution ``theta`` (its x-axis span over
    the cell count); the standard error threshold for approximate mode."""
    if theta < 1:
        raise ValueError("theta must be positive")
    width = float(box.hi[0] - box.lo[0])
    eps = width / (1 << theta)
    if eps <= 0.0:
        raise ValueError("footprint has zero width; supply epsilon explicitly")
    return eps


def index_epsilon(idx: UnifiedIndex) -> float:
    """Default epsilon for queries against a built index: its grid's cell
    width on the x axis."""
    width = float(idx.grid.extent[0])
    eps = width / (1 << idx.grid.resolution)
    if eps <= 0.0:
        raise ValueError("index footprint has zero width; supply epsilon explicitly")
    return eps
