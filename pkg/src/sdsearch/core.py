"""Shared domain types for spatial dataset search.

A repository is an ordered collection of point datasets that share a
dimensionality. Coordinates beyond the first ``metric_dims`` axes are
carried through untouched (timestamps, ids, sensor values); every
distance, radius and bounding computation looks only at the metric axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "DEFAULT_METRIC_DIMS",
    "SearchError",
    "DatasetError",
    "ManifestError",
    "IndexFormatError",
    "Mbr",
    "Dataset",
    "Repository",
    "MetricKind",
    "as_points",
    "euclidean",
    "mbr_of",
]

DEFAULT_METRIC_DIMS = 2


class SearchError(Exception):
    """Base class for errors raised by this package."""


class DatasetError(SearchError):
    """A dataset file or point array is unusable."""


class ManifestError(SearchError):
    """A repository manifest is malformed or inconsistent."""


class IndexFormatError(SearchError):
    """A persisted index blob is corrupt, truncated, or incompatible."""


def as_points(data, *, min_dims: int = DEFAULT_METRIC_DIMS) -> np.ndarray:
    """Coerce ``data`` to a read-only, C-contiguous (n, d) float64 array.

    Rejects empty input, fewer than ``min_dims`` coordinates, and any
    non-finite value. A 1-d input is treated as a single point.
    """
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise DatasetError("point set must be a non-empty (n, d) array")
    if pts.shape[1] < min_dims:
        raise DatasetError(
            f"points need at least {min_dims} coordinates, got {pts.shape[1]}"
        )
    if not np.isfinite(pts).all():
        raise DatasetError("points must be finite (no NaN or infinity)")
    pts = np.ascontiguousarray(pts)
    pts.setflags(write=False)
    return pts


def euclidean(p, q, dims: int | None = DEFAULT_METRIC_DIMS) -> float:
    """Euclidean distance between two points over the first ``dims`` axes.

    ``dims=None`` compares every coordinate. The points must agree on
    length over the compared axes.
    """
    a = np.asarray(p, dtype=np.float64).ravel()
    b = np.asarray(q, dtype=np.float64).ravel()
    if dims is None:
        if a.shape[0] != b.shape[0]:
            raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
        dims = a.shape[0]
    if a.shape[0] < dims or b.shape[0] < dims:
        raise ValueError(f"need at least {dims} coordinates on both points")
    acc = 0.0
    for i in range(dims):
        diff = float(a[i]) - float(b[i])
        acc += diff * diff
    return math.sqrt(acc)


@dataclass(frozen=True)
class Mbr:
    """Axis-aligned minimum bounding rectangle, closed on every face."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).ravel()
        hi = np.asarray(self.hi, dtype=np.float64).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lo and hi must be non-empty and congruent")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("mbr corners must be finite")
        if (lo > hi).any():
            raise ValueError("mbr has lo > hi on some axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dims(self) -> int:
        return self.lo.shape[0]

    def width(self, axis: int) -> float:
        return float(self.hi[axis] - self.lo[axis])

    def intersects(self, other: "Mbr", dims: int = DEFAULT_METRIC_DIMS) -> bool:
        """True when the closed boxes share at least one point on the
        first ``dims`` axes (edge contact counts)."""
        for i in range(dims):
            if self.hi[i] < other.lo[i] or other.hi[i] < self.lo[i]:
                return False
        return True

    def contains_point(self, p, dims: int = DEFAULT_METRIC_DIMS) -> bool:
        q = np.asarray(p, dtype=np.float64).ravel()
        for i in range(dims):
            if q[i] < self.lo[i] or q[i] > self.hi[i]:
                return False
        return True

    def contains_box(self, other: "Mbr", dims: int = DEFAULT_METRIC_DIMS) -> bool:
        for i in range(dims):
            if other.lo[i] < self.lo[i] or other.hi[i] > self.hi[i]:
                return False
        return True

    def union(self, other: "Mbr") -> "Mbr":
        if self.dims != other.dims:
            raise ValueError("cannot union boxes of different dimensionality")
        return Mbr(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))


def mbr_of(points) -> Mbr:
    """Componentwise min/max box of a point set (all coordinates)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.size == 0:
        raise DatasetError("cannot bound an empty point set")
    return Mbr(pts.min(axis=0), pts.max(axis=0))


@dataclass(frozen=True)
class Dataset:
    """One named point set. ``points`` is (n, d), row order as ingested."""

    dataset_id: int
    name: str
    points: np.ndarray
    mbr: Mbr = field(init=False, repr=False)

    def __post_init__(self):
        if self.dataset_id < 0:
            raise ValueError("dataset_id must be non-negative")
        pts = as_points(self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mbr", mbr_of(pts))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Repository:
    """An ordered, id-unique collection of datasets of equal dimensionality."""

    datasets: tuple[Dataset, ...]
    metric_dims: int = DEFAULT_METRIC_DIMS

    def __post_init__(self):
        ds = tuple(sorted(self.datasets, key=lambda d: d.dataset_id))
        if not ds:
            raise ValueError("repository must hold at least one dataset")
        ids = [d.dataset_id for d in ds]
        if len(set(ids)) != len(ids):
            raise ValueError("dataset ids must be unique")
        dims = {d.dims for d in ds}
        if len(dims) != 1:
            raise ValueError(f"datasets disagree on dimensionality: {sorted(dims)}")
        d = dims.pop()
        if not (DEFAULT_METRIC_DIMS <= self.metric_dims <= d):
            raise ValueError(
                f"metric_dims must lie in [{DEFAULT_METRIC_DIMS}, {d}], got {self.metric_dims}"
            )
        object.__setattr__(self, "datasets", ds)

    def __iter__(self) -> Iterator[Dataset]:
        return iter(self.datasets)

    def __len__(self) -> int:
        return len(self.datasets)

    @property
    def dims(self) -> int:
        return self.datasets[0].dims

    def by_id(self, dataset_id: int) -> Dataset:
        for d in self.datasets:
            if d.dataset_id == dataset_id:
                return d
        raise KeyError(f"no dataset with id {dataset_id}")

    def global_mbr(self) -> Mbr:
        box = self.datasets[0].mbr
        for d in self.datasets[1:]:
            box = box.union(d.mbr)
        return box


class MetricKind(str, Enum):
    """Dataset-level similarity/distance measures exposed by the engine."""

    IA = "ia"
    GBO = "gbo"
    HAUS_EXACT = "haus_exact"
    HAUS_APPROX = "haus_approx"

    @property
    def is_similarity(self) -> bool:
        # intersection area and grid overlap rank high-is-better;
        # the Hausdorff family ranks low-is-better
        return self in (MetricKind.IA, MetricKind.GBO)
