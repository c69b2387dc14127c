"""Two-level index construction.

Bottom level: one binary ball/box tree per dataset, built by recursive
widest-dimension splits. Leaf radii from every dataset feed one global
ledger; a knee point over the sorted ledger picks the radius threshold
used to strip outliers, after which every affected tree is refit bottom
up. Upper level: the same split procedure applied to the dataset roots,
with grid signatures unioned upward.

Trees are built as linked nodes, then frozen into flat preorder arrays.
All queries run against the flat form; the contained points of any node
occupy one contiguous span of the reordered point table.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .core import DEFAULT_METRIC_DIMS, Dataset, Mbr, Repository, SearchError, as_points
from .grid import Grid

__all__ = [
    "IndexNode",
    "DatasetTree",
    "RepoTree",
    "UnifiedIndex",
    "split_space",
    "knee_threshold",
    "refine_bottom_up",
    "build",
    "query_tree",
]

log = logging.getLogger(__name__)


@dataclass
class IndexNode:
    """Mutable tree node used during construction.

    Bottom-level leaves hold ``points`` (and their original row ``ids``);
    upper-level leaves hold ``roots``. ``o`` and the box corners span all
    coordinates; ``r`` measures only the metric axes.
    """

    o: np.ndarray
    r: float
    lo: np.ndarray
    hi: np.ndarray
    left: "IndexNode | None" = None
    right: "IndexNode | None" = None
    points: np.ndarray | None = None
    ids: np.ndarray | None = None
    roots: list | None = None
    z: np.ndarray | None = None
    dataset_id: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None and self.right is None

    @property
    def kind(self) -> str:
        if self.dataset_id is not None:
            return "dataset_root"
        if self.roots is not None:
            return "repo_leaf"
        if self.points is not None:
            return "dataset_leaf"
        return "dataset_internal"


def _point_stats(pts: np.ndarray, md: int):
    o = pts.mean(axis=0)
    diff = pts[:, :md] - o[:md]
    r = float(np.sqrt((diff * diff).sum(axis=1).max()))
    return o, r, pts.min(axis=0), pts.max(axis=0)


def _root_stats(objs: Sequence, md: int):
    centers = np.stack([ob.o for ob in objs])
    o = centers.mean(axis=0)
    diff = centers[:, :md] - o[:md]
    dist = np.sqrt((diff * diff).sum(axis=1))
    radii = np.array([ob.r for ob in objs])
    r = float((dist + radii).max())
    lo = reduce(np.minimum, (ob.lo for ob in objs))
    hi = reduce(np.maximum, (ob.hi for ob in objs))
    return o, r, lo, hi


def split_space(objects, f: int, d: int, ledger: list[float] | None,
                *, metric_dims: int = DEFAULT_METRIC_DIMS) -> IndexNode:
    """Recursively partition ``objects`` (a point array, or a list of
    dataset-root descriptors) into a binary tree with leaves of at most
    ``f`` members.

    Splits happen on the widest of the ``d`` axes at the box midpoint;
    objects strictly above the midpoint go left. A midpoint that fails to
    separate anything falls back to a median split, and a set of fully
    identical objects becomes a leaf no matter its size. When ``objects``
    are points, each finished leaf appends its radius to ``ledger``.
    """
    if f < 1:
        raise ValueError("leaf capacity must be at least 1")
    if isinstance(objects, np.ndarray):
        if objects.shape[0] == 0:
            raise SearchError("cannot index an empty point set")
        if objects.shape[1] != d:
            raise ValueError(f"points have {objects.shape[1]} dims, expected {d}")
        ids = np.arange(objects.shape[0], dtype=np.int64)
        return _split_points(objects, ids, f, ledger, metric_dims)
    objs = list(objects)
    if not objs:
        raise SearchError("cannot index an empty collection")
    return _split_roots(objs, f, metric_dims)


def _split_points(pts, ids, f, ledger, md) -> IndexNode:
    o, r, lo, hi = _point_stats(pts, md)
    n = pts.shape[0]
    if n <= f or bool((lo == hi).all()):
        if ledger is not None:
            ledger.append(r)
        return IndexNode(o=o, r=r, lo=lo, hi=hi, points=pts, ids=ids)
    widths = hi - lo
    d_split = int(np.argmax(widths))
    mid = float(lo[d_split]) + float(widths[d_split]) / 2.0
    mask = pts[:, d_split] > mid
    if mask.all() or not mask.any():
        # midpoint failed to separate (skew or float collapse): median split,
        # upper half keeps the left-gets-greater convention
        order = np.argsort(pts[:, d_split], kind="stable")
        half = n // 2
        li, ri = order[half:], order[:half]
    else:
        li, ri = np.flatnonzero(mask), np.flatnonzero(~mask)
    node = IndexNode(o=o, r=r, lo=lo, hi=hi)
    node.left = _split_points(pts[li], ids[li], f, ledger, md)
    node.right = _split_points(pts[ri], ids[ri], f, ledger, md)
    return node


def _split_roots(objs: list, f: int, md: int) -> IndexNode:
    o, r, lo, hi = _root_stats(objs, md)
    n = len(objs)
    centers = np.stack([ob.o for ob in objs])
    if n <= f or bool((centers == centers[0]).all()):
        return IndexNode(o=o, r=r, lo=lo, hi=hi, roots=objs)
    widths = hi - lo
    d_split = int(np.argmax(widths))
    mid = float(lo[d_split]) + float(widths[d_split]) / 2.0
    coords = centers[:, d_split]
    mask = coords > mid
    if mask.all() or not mask.any():
        order = np.argsort(coords, kind="stable")
        half = n // 2
        li, ri = order[half:], order[:half]
    else:
        li, ri = np.flatnonzero(mask), np.flatnonzero(~mask)
    node = IndexNode(o=o, r=r, lo=lo, hi=hi)
    node.left = _split_roots([objs[i] for i in li], f, md)
    node.right = _split_roots([objs[i] for i in ri], f, md)
    return node


def knee_threshold(ledger) -> float:
    """Knee of the descending leaf-radius curve.

    With the radii sorted descending, the gap at position i is the
    vertical drop from the straight line joining the curve's endpoints;
    the radius at the largest positive gap becomes the threshold. A flat
    or rising gap profile keeps the largest radius (nothing is removed),
    and an empty ledger disables removal entirely.
    """
    arr = np.sort(np.asarray(list(ledger), dtype=np.float64))[::-1]
    m = arr.size
    if m == 0:
        return math.inf
    if m == 1:
        return float(arr[0])
    i = np.arange(1, m)
    gaps = arr[0] - i * (arr[0] - arr[-1]) / m - arr[i]
    best = int(np.argmax(gaps))
    if gaps[best] <= 0.0:
        return float(arr[0])
    return float(arr[best + 1])


def _leaf_keep_mask(leaf: IndexNode, r_prime: float, md: int) -> np.ndarray:
    pts = leaf.points
    if leaf.r <= r_prime:
        return np.ones(pts.shape[0], dtype=bool)
    acc = np.zeros(pts.shape[0], dtype=np.float64)
    for i in range(md):
        diff = pts[:, i] - leaf.o[i]
        acc += diff * diff
    return np.sqrt(acc) <= r_prime


def refine_bottom_up(node: IndexNode, r_prime: float,
                     *, metric_dims: int = DEFAULT_METRIC_DIMS) -> np.ndarray:
    """Strip every point farther than ``r_prime`` from its leaf center,
    then refit centers, radii and boxes bottom-up.

    Emptied leaves are deleted and single-child internals collapse into
    the surviving child. If removal would empty the whole tree it is
    skipped with a warning. Returns the original row ids of the removed
    points, sorted ascending.
    """
    if r_prime < 0:
        raise ValueError("r_prime must be non-negative")
    masks: dict[int, np.ndarray] = {}
    kept = 0

    def scan(n: IndexNode) -> None:
        nonlocal kept
        if n.points is not None:
            m = _leaf_keep_mask(n, r_prime, metric_dims)
            masks[id(n)] = m
            kept += int(m.sum())
        else:
            scan(n.left)
            scan(n.right)

    scan(node)
    if kept == 0:
        log.warning("refinement would empty the dataset; skipping removal")
        return np.empty(0, dtype=np.int64)

    removed: list[np.ndarray] = []

    def refit(n: IndexNode):
        if n.points is not None:
            m = masks[id(n)]
            if not m.all():
                removed.append(n.ids[~m])
                if not m.any():
                    return None, None, None
                n.points = n.points[m]
                n.ids = n.ids[m]
            n.o, n.r, n.lo, n.hi = _point_stats(n.points, metric_dims)
            return n, n.points, n.ids
        lnode, lp, li = refit(n.left)
        rnode, rp, ri = refit(n.right)
        if lnode is None and rnode is None:
            return None, None, None
        if lnode is None:
            return rnode, rp, ri
        if rnode is None:
            return lnode, lp, li
        n.left, n.right = lnode, rnode
        pts = np.concatenate([lp, rp])
        ids = np.concatenate([li, ri])
        n.o, n.r, n.lo, n.hi = _point_stats(pts, metric_dims)
        return n, pts, ids

    new_root, pts, ids = refit(node)
    if new_root is not node:
        # the root itself contracted; keep the caller's handle valid
        node.__dict__.update(new_root.__dict__)
    if not removed:
        return np.empty(0, dtype=np.int64)
    return np.sort(np.concatenate(removed))


@dataclass(frozen=True)
class DatasetTree:
    """One dataset's tree frozen into flat preorder arrays.

    ``left[i]``/``right[i]`` are child row indices (−1 for leaves);
    ``span_lo[i]:span_hi[i]`` delimits node i's points inside ``points``,
    which is the dataset reordered so every node's members are contiguous.
    ``ids`` maps reordered rows back to original row numbers.
    """

    dataset_id: int
    name: str
    metric_dims: int
    o: np.ndarray
    r: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    span_lo: np.ndarray
    span_hi: np.ndarray
    min_id: np.ndarray
    points: np.ndarray
    ids: np.ndarray
    z: np.ndarray
    removed_ids: np.ndarray
    n_original: int
    mo: np.ndarray = field(init=False, repr=False, compare=False)
    mpts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        # contiguous metric-axis views feed the distance kernels
        object.__setattr__(self, "mo", np.ascontiguousarray(self.o[:, :self.metric_dims]))
        object.__setattr__(self, "mpts", np.ascontiguousarray(self.points[:, :self.metric_dims]))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.r.shape[0]

    @property
    def mbr(self) -> Mbr:
        return Mbr(self.lo[0], self.hi[0])

    def node_points(self, i: int) -> np.ndarray:
        return self.points[self.span_lo[i]:self.span_hi[i]]


@dataclass(frozen=True)
class RepoTree:
    """Upper-level tree in the same flat layout, with leaf spans indexing
    the dataset roots in traversal order."""

    o: np.ndarray
    r: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    span_lo: np.ndarray
    span_hi: np.ndarray
    z_cat: np.ndarray
    z_lo: np.ndarray
    z_hi: np.ndarray
    root_ids: np.ndarray  # dataset id at each leaf-span position

    @property
    def n_nodes(self) -> int:
        return self.r.shape[0]

    def node_z(self, i: int) -> np.ndarray:
        return self.z_cat[self.z_lo[i]:self.z_hi[i]]


@dataclass(frozen=True)
class UnifiedIndex:
    """The finished two-level index: immutable, shareable between readers."""

    repo_tree: RepoTree
    datasets: tuple[DatasetTree, ...]
    grid: Grid
    leaf_capacity: int
    theta: int
    metric_dims: int
    r_prime: float
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {t.dataset_id: t for t in self.datasets})

    @property
    def params(self) -> dict:
        return {
            "f": self.leaf_capacity,
            "theta": self.theta,
            "metric_dims": self.metric_dims,
        }

    @property
    def dataset_ids(self) -> tuple[int, ...]:
        return tuple(t.dataset_id for t in self.datasets)

    def dataset(self, dataset_id: int) -> DatasetTree:
        try:
            return self._by_id[dataset_id]
        except KeyError:
            raise KeyError(f"no dataset with id {dataset_id}") from None

    @property
    def removed_total(self) -> int:
        return sum(t.removed_ids.size for t in self.datasets)


def _flatten_dataset(root: IndexNode, ds: Dataset, z: np.ndarray,
                     removed: np.ndarray, md: int) -> DatasetTree:
    o_l, r_l, lo_l, hi_l = [], [], [], []
    left_l, right_l, slo_l, shi_l = [], [], [], []
    chunks_p, chunks_i = [], []
    cursor = 0

    def walk(n: IndexNode) -> int:
        nonlocal cursor
        i = len(r_l)
        o_l.append(n.o)
        r_l.append(n.r)
        lo_l.append(n.lo)
        hi_l.append(n.hi)
        left_l.append(-1)
        right_l.append(-1)
        slo_l.append(0)
        shi_l.append(0)
        if n.points is not None:
            slo_l[i] = cursor
            cursor += n.points.shape[0]
            shi_l[i] = cursor
            chunks_p.append(n.points)
            chunks_i.append(n.ids)
        else:
            slo_l[i] = cursor
            left_l[i] = walk(n.left)
            right_l[i] = walk(n.right)
            shi_l[i] = cursor
        return i

    walk(root)
    points = np.ascontiguousarray(np.concatenate(chunks_p))
    ids = np.concatenate(chunks_i)
    span_lo = np.asarray(slo_l, dtype=np.int64)
    span_hi = np.asarray(shi_l, dtype=np.int64)
    min_id = np.empty(len(r_l), dtype=np.int64)
    for i in range(len(r_l)):
        min_id[i] = ids[span_lo[i]:span_hi[i]].min()
    return DatasetTree(
        dataset_id=ds.dataset_id,
        name=ds.name,
        metric_dims=md,
        o=np.ascontiguousarray(np.stack(o_l)),
        r=np.asarray(r_l, dtype=np.float64),
        lo=np.ascontiguousarray(np.stack(lo_l)),
        hi=np.ascontiguousarray(np.stack(hi_l)),
        left=np.asarray(left_l, dtype=np.int32),
        right=np.asarray(right_l, dtype=np.int32),
        span_lo=span_lo,
        span_hi=span_hi,
        min_id=min_id,
        points=points,
        ids=ids,
        z=z,
        removed_ids=removed,
        n_original=ds.size,
    )


def _flatten_repo(root: IndexNode) -> RepoTree:
    o_l, r_l, lo_l, hi_l = [], [], [], []
    left_l, right_l, slo_l, shi_l = [], [], [], []
    z_chunks, z_lo_l, z_hi_l = [], [], []
    root_ids: list[int] = []
    z_cursor = 0

    def walk(n: IndexNode) -> int:
        nonlocal z_cursor
        i = len(r_l)
        o_l.append(n.o)
        r_l.append(n.r)
        lo_l.append(n.lo)
        hi_l.append(n.hi)
        left_l.append(-1)
        right_l.append(-1)
        z_lo_l.append(z_cursor)
        z_cursor += n.z.size
        z_hi_l.append(z_cursor)
        z_chunks.append(n.z)
        slo_l.append(0)
        shi_l.append(0)
        if n.roots is not None:
            slo_l[i] = len(root_ids)
            root_ids.extend(ob.dataset_id for ob in n.roots)
            shi_l[i] = len(root_ids)
        else:
            slo_l[i] = len(root_ids)
            left_l[i] = walk(n.left)
            right_l[i] = walk(n.right)
            shi_l[i] = len(root_ids)
        return i

    walk(root)
    return RepoTree(
        o=np.ascontiguousarray(np.stack(o_l)),
        r=np.asarray(r_l, dtype=np.float64),
        lo=np.ascontiguousarray(np.stack(lo_l)),
        hi=np.ascontiguousarray(np.stack(hi_l)),
        left=np.asarray(left_l, dtype=np.int32),
        right=np.asarray(right_l, dtype=np.int32),
        span_lo=np.asarray(slo_l, dtype=np.int64),
        span_hi=np.asarray(shi_l, dtype=np.int64),
        z_cat=np.concatenate(z_chunks) if z_chunks else np.empty(0, np.int64),
        z_lo=np.asarray(z_lo_l, dtype=np.int64),
        z_hi=np.asarray(z_hi_l, dtype=np.int64),
        root_ids=np.asarray(root_ids, dtype=np.int64),
    )


@dataclass
class _RootDesc:
    """Dataset-root descriptor fed to the upper-level split."""

    dataset_id: int
    o: np.ndarray
    r: float
    lo: np.ndarray
    hi: np.ndarray
    z: np.ndarray


def _assign_z(node: IndexNode) -> np.ndarray:
    if node.roots is not None:
        node.z = reduce(np.union1d, (ob.z for ob in node.roots))
    else:
        node.z = np.union1d(_assign_z(node.left), _assign_z(node.right))
    return node.z


def build(repo: Repository, f: int = 10, *, theta: int = 5,
          outlier_removal: bool = True) -> UnifiedIndex:
    """Construct the unified index over a repository.

    Bottom-level trees are built first, feeding one shared radius ledger;
    the knee of that ledger prunes outliers and the pruned trees are
    refit. Signatures are taken from the surviving points, and the
    upper-level tree is split over the dataset roots.
    """
    md = repo.metric_dims
    d = repo.dims
    grid = Grid.covering(repo.global_mbr(), theta)
    ledger: list[float] = []
    built: list[tuple[Dataset, IndexNode]] = []
    for ds in repo:
        built.append((ds, split_space(ds.points, f, d, ledger, metric_dims=md)))

    r_prime = knee_threshold(ledger) if outlier_removal else math.inf

    trees: list[DatasetTree] = []
    descs: list[_RootDesc] = []
    for ds, root in built:
        if outlier_removal and math.isfinite(r_prime):
            removed = refine_bottom_up(root, r_prime, metric_dims=md)
        else:
            removed = np.empty(0, dtype=np.int64)
        root.dataset_id = ds.dataset_id
        kept = _collect_points(root)
        z = grid.signature_of(kept)
        tree = _flatten_dataset(root, ds, z, removed, md)
        trees.append(tree)
        descs.append(_RootDesc(ds.dataset_id, tree.o[0], float(tree.r[0]),
                               tree.lo[0], tree.hi[0], z))

    upper = split_space(descs, f, d, None, metric_dims=md)
    _assign_z(upper)
    return UnifiedIndex(
        repo_tree=_flatten_repo(upper),
        datasets=tuple(trees),
        grid=grid,
        leaf_capacity=f,
        theta=theta,
        metric_dims=md,
        r_prime=r_prime,
    )


def _collect_points(node: IndexNode) -> np.ndarray:
    if node.points is not None:
        return node.points
    return np.concatenate([_collect_points(node.left), _collect_points(node.right)])


def query_tree(points, *, f: int = 10,
               metric_dims: int = DEFAULT_METRIC_DIMS) -> DatasetTree:
    """Index a raw point set on the fly.

    Query-side trees skip the radius ledger and outlier removal: a query
    is taken exactly as supplied.
    """
    from .kernels import build_tree_arrays  # deferred: kernels imports us

    pts = as_points(points, min_dims=metric_dims)
    rows = np.arange(pts.shape[0], dtype=np.int64)
    (o, r, lo, hi, left, right, span_lo, span_hi,
     min_id, ordered, ids) = build_tree_arrays(pts, rows, f, metric_dims)
    empty = np.empty(0, dtype=np.int64)
    return DatasetTree(
        dataset_id=0,
        name="query",
        metric_dims=metric_dims,
        o=o, r=r, lo=lo, hi=hi,
        left=left, right=right,
        span_lo=span_lo, span_hi=span_hi,
        min_id=min_id,
        points=ordered,
        ids=ids,
        z=empty,
        removed_ids=empty,
        n_original=pts.shape[0],
    )
