"""Shared fixtures and the structural audit used across test modules."""

import numpy as np
import pytest

from sdsearch.index import UnifiedIndex, build
from sdsearch.io import generate_synthetic


@pytest.fixture(scope="session")
def small_repo():
    repo, _ = generate_synthetic(12, 90, "clustered", 0.0, seed=7)
    return repo


@pytest.fixture(scope="session")
def small_index(small_repo) -> UnifiedIndex:
    return build(small_repo, f=8, theta=5)


def rand_points(rng, n, lo=0.0, hi=100.0, d=2):
    return rng.uniform(lo, hi, size=(n, d))


def clustered_points(rng, n, d=2):
    """A few tight discs, the shape real data and the generator share."""
    k = int(rng.integers(1, 4))
    centers = rng.uniform(10.0, 90.0, size=(k, d))
    out = np.empty((n, d))
    for i in range(n):
        c = centers[int(rng.integers(k))]
        out[i] = c + rng.normal(0.0, 3.0, size=d)
    return out


def audit_index(idx: UnifiedIndex, repo=None, *, rtol=1e-9):
    """Exhaustive containment / partition / signature audit.

    Returns a list of violation strings; an empty list means every node
    of every tree passed. ``repo`` enables the points-match-source check.
    """
    bad = []
    md = idx.metric_dims

    for t in idx.datasets:
        n = t.points.shape[0]
        if t.span_lo[0] != 0 or t.span_hi[0] != n:
            bad.append(f"ds {t.dataset_id}: root span != [0, {n})")
        for i in range(t.o.shape[0]):
            a, b = int(t.span_lo[i]), int(t.span_hi[i])
            if not (0 <= a < b <= n):
                bad.append(f"ds {t.dataset_id} node {i}: bad span [{a},{b})")
                continue
            pts = t.points[a:b]
            dist = np.sqrt(((pts[:, :md] - t.o[i, :md]) ** 2).sum(axis=1))
            if dist.max() > t.r[i] * (1 + rtol) + 1e-12:
                bad.append(f"ds {t.dataset_id} node {i}: ball breach "
                           f"{dist.max()} > r={t.r[i]}")
            if (pts < t.lo[i]).any() or (pts > t.hi[i]).any():
                bad.append(f"ds {t.dataset_id} node {i}: box breach")
            if not np.array_equal(t.lo[i], pts.min(axis=0)) or \
               not np.array_equal(t.hi[i], pts.max(axis=0)):
                bad.append(f"ds {t.dataset_id} node {i}: box not tight")
            if int(t.min_id[i]) != int(t.ids[a:b].min()):
                bad.append(f"ds {t.dataset_id} node {i}: min_id wrong")
            li, ri = int(t.left[i]), int(t.right[i])
            if (li < 0) != (ri < 0):
                bad.append(f"ds {t.dataset_id} node {i}: half-leaf")
            elif li >= 0:
                if not (t.span_lo[li] == a and t.span_hi[li] == t.span_lo[ri]
                        and t.span_hi[ri] == b):
                    bad.append(f"ds {t.dataset_id} node {i}: children "
                               "do not partition the span")
        kept_plus_removed = np.sort(np.concatenate([t.ids, t.removed_ids]))
        if not np.array_equal(kept_plus_removed,
                              np.arange(t.n_original, dtype=np.int64)):
            bad.append(f"ds {t.dataset_id}: ids+removed != original rows")
        if not np.array_equal(t.z, idx.grid.signature_of(t.points)):
            bad.append(f"ds {t.dataset_id}: signature != grid cells of "
                       "retained points")
        if repo is not None:
            src = repo.by_id(t.dataset_id).points
            if not np.array_equal(t.points, src[t.ids]):
                bad.append(f"ds {t.dataset_id}: points not source rows")

    rt = idx.repo_tree
    m = len(idx.datasets)
    if not np.array_equal(np.sort(rt.root_ids), np.sort(np.asarray(idx.dataset_ids))):
        bad.append("repo root_ids not a permutation of dataset ids")
    if rt.span_lo[0] != 0 or rt.span_hi[0] != m:
        bad.append(f"repo root span != [0, {m})")
    for i in range(rt.o.shape[0]):
        a, b = int(rt.span_lo[i]), int(rt.span_hi[i])
        roots = [idx.dataset(int(rt.root_ids[p])) for p in range(a, b)]
        zs = [t.z for t in roots]
        zu = np.unique(np.concatenate(zs)) if zs else np.empty(0, np.int64)
        if not np.array_equal(rt.node_z(i), zu):
            bad.append(f"repo node {i}: z != union of member signatures")
        for t in roots:
            gap = np.sqrt(((rt.o[i, :md] - t.mo[0]) ** 2).sum()) + float(t.r[0])
            if gap > rt.r[i] * (1 + rtol) + 1e-12:
                bad.append(f"repo node {i}: ball misses dataset {t.dataset_id}")
            if (t.lo[0] < rt.lo[i]).any() or (t.hi[0] > rt.hi[i]).any():
                bad.append(f"repo node {i}: box misses dataset {t.dataset_id}")
            pd = np.sqrt(((t.points[:, :md] - rt.o[i, :md]) ** 2).sum(axis=1))
            if pd.max() > rt.r[i] * (1 + rtol) + 1e-12:
                bad.append(f"repo node {i}: point escapes ball "
                           f"(dataset {t.dataset_id})")
        li, ri = int(rt.left[i]), int(rt.right[i])
        if (li < 0) != (ri < 0):
            bad.append(f"repo node {i}: half-leaf")
        elif li >= 0:
            if not (rt.span_lo[li] == a and rt.span_hi[li] == rt.span_lo[ri]
                    and rt.span_hi[ri] == b):
                bad.append(f"repo node {i}: children do not partition the span")
    return bad
