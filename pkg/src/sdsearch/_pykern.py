"""Pure-Python distance kernels, tree builder, and traversal engine.

This module mirrors the compiled extension exactly; whichever one is
loaded, results must agree bit for bit. Keep the arithmetic in the two
implementations literally identical: squared distances accumulate one
axis at a time, square roots are taken at the same places, and every
priority-queue tie breaks on the same integer.

Traversal state is a max-queue of entries, one per unresolved piece of
the query tree. An entry carries an upper bound on the worst
nearest-neighbor distance of its points and a min-queue of candidate
target entities keyed by the ball lower bound. Entities on either side
are encoded as integers: values below the node count name tree nodes,
values at or above it name single points (node_count + point position).

In the nearest-neighbor modes, entries stop splitting at query leaves:
a leaf's whole point block is resolved in one sweep against its
candidate queue, re-keyed by the pairwise lower bound (ball distance
minus both radii). The per-point winners are exact, ties to the lowest
original id, whatever order candidates arrive in.
"""

from __future__ import annotations

import heapq
from math import inf, sqrt

import numpy as np

__all__ = [
    "MODE_HAUS",
    "MODE_HAUS_APPROX",
    "MODE_NN",
    "MODE_HAUS_NN",
    "brute_hausdorff",
    "brute_nn",
    "build_tree_arrays",
    "traverse",
]

MODE_HAUS = 0
MODE_HAUS_APPROX = 1
MODE_NN = 2
MODE_HAUS_NN = 3

_CHUNK = 4_000_000  # pairwise-matrix cells per block in the brute kernels


def _pair_sq(q: np.ndarray, d: np.ndarray) -> np.ndarray:
    """(|q|, |d|) squared distances, accumulated axis by axis."""
    out = np.zeros((q.shape[0], d.shape[0]), dtype=np.float64)
    for i in range(q.shape[1]):
        diff = q[:, i, None] - d[None, :, i]
        out += diff * diff
    return out


def brute_hausdorff(q: np.ndarray, d: np.ndarray) -> float:
    """Directed Hausdorff by the plain double loop (blocked for memory)."""
    if q.shape[0] == 0 or d.shape[0] == 0:
        raise ValueError("brute_hausdorff needs non-empty inputs")
    step = max(1, _CHUNK // d.shape[0])
    worst = 0.0
    for s in range(0, q.shape[0], step):
        d2 = _pair_sq(q[s:s + step], d)
        m = float(d2.min(axis=1).max())
        if m > worst:
            worst = m
    return sqrt(worst)


def brute_nn(q: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-query-point nearest neighbor positions in ``d`` (ties take the
    first position) and distances."""
    if q.shape[0] == 0 or d.shape[0] == 0:
        raise ValueError("brute_nn needs non-empty inputs")
    nq = q.shape[0]
    out_i = np.empty(nq, dtype=np.int64)
    out_d = np.empty(nq, dtype=np.float64)
    step = max(1, _CHUNK // d.shape[0])
    for s in range(0, nq, step):
        d2 = _pair_sq(q[s:s + step], d)
        pos = d2.argmin(axis=1)
        out_i[s:s + step] = pos
        out_d[s:s + step] = np.sqrt(d2[np.arange(pos.shape[0]), pos])
    return out_i, out_d


def build_tree_arrays(pts: np.ndarray, ids: np.ndarray, f: int, md: int):
    """Flatten a point set into preorder ball-tree arrays in one pass.

    Same splitting rules as the reference builder: leaf at ``f`` members
    or a fully degenerate box, otherwise a midpoint split of the widest
    axis (strictly-greater coordinates go left) with a stable median
    split as the fallback. Points are reordered in place so every node
    owns one contiguous span. Means accumulate sequentially per axis so
    the compiled twin can reproduce every byte.
    """
    pbuf = np.array(pts, dtype=np.float64, order="C")
    ibuf = np.array(ids, dtype=np.int64)
    n = pbuf.shape[0]
    o_l, r_l, lo_l, hi_l = [], [], [], []
    left_l, right_l, slo_l, shi_l = [], [], [], []
    stack = [(0, n, -1, False)]
    while stack:
        a, b, parent, is_left = stack.pop()
        row = len(r_l)
        if parent >= 0:
            if is_left:
                left_l[parent] = row
            else:
                right_l[parent] = row
        sub = pbuf[a:b]
        m = b - a
        o = np.cumsum(sub, axis=0)[-1] / m
        acc = np.zeros(m, dtype=np.float64)
        for ax in range(md):
            diff = sub[:, ax] - o[ax]
            acc += diff * diff
        r = sqrt(float(acc.max()))
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        o_l.append(o)
        r_l.append(r)
        lo_l.append(lo)
        hi_l.append(hi)
        left_l.append(-1)
        right_l.append(-1)
        slo_l.append(a)
        shi_l.append(b)
        if m <= f or bool((lo == hi).all()):
            continue
        widths = hi - lo
        ds = int(np.argmax(widths))
        mid = float(lo[ds]) + float(widths[ds]) / 2.0
        col = sub[:, ds]
        mask = col > mid
        cnt = int(mask.sum())
        if cnt == 0 or cnt == m:
            order = np.argsort(col, kind="stable")
            half = m // 2
            sel = np.concatenate([order[half:], order[:half]])
            nl = m - half
        else:
            sel = np.concatenate([np.flatnonzero(mask), np.flatnonzero(~mask)])
            nl = cnt
        pbuf[a:b] = sub[sel]
        ibuf[a:b] = ibuf[a:b][sel]
        split_at = a + nl
        stack.append((split_at, b, row, False))
        stack.append((a, split_at, row, True))
    nn = len(r_l)
    span_lo = np.asarray(slo_l, dtype=np.int64)
    span_hi = np.asarray(shi_l, dtype=np.int64)
    min_id = np.empty(nn, dtype=np.int64)
    for i in range(nn):
        min_id[i] = ibuf[span_lo[i]:span_hi[i]].min()
    return (np.ascontiguousarray(np.stack(o_l)),
            np.asarray(r_l, dtype=np.float64),
            np.ascontiguousarray(np.stack(lo_l)),
            np.ascontiguousarray(np.stack(hi_l)),
            np.asarray(left_l, dtype=np.int32),
            np.asarray(right_l, dtype=np.int32),
            span_lo, span_hi, min_id, pbuf, ibuf)


def traverse(qo, qr, qleft, qright, qslo, qshi, qpts, qids,
             do_, dr, dleft, dright, dslo, dshi, dpts, dids, dmin,
             mode: int, eps: float,
             nn_id_out: np.ndarray, nn_dist_out: np.ndarray) -> tuple[float, int]:
    """Run the two-tree traversal.

    ``q*``/``d*`` are the flat preorder trees (centers and points already
    sliced to the metric axes, C-contiguous). ``mode`` selects directed
    Hausdorff (plain or epsilon-approximate), all-points nearest
    neighbor, or Hausdorff piggybacked on the nearest-neighbor pass.
    Returns (hausdorff value or nan, number of queue pops); NN results
    land in the two output arrays indexed by original query row.
    """
    NQ = qr.shape[0]
    ND = dr.shape[0]
    md = qpts.shape[1]
    want_nn = mode >= MODE_NN
    approx = mode == MODE_HAUS_APPROX

    # entry state, indexed by entry id
    ent_q: list[int] = [0]
    ent_ub: list[float] = [inf]
    ent_cand: list[list[tuple[float, int]]] = [[(0.0, 0)]]  # target root, lb 0
    main: list[tuple[float, int]] = [(-inf, 0)]

    pops = 0

    def qcenter(e: int):
        return qo[e] if e < NQ else qpts[e - NQ]

    def dcenter(e: int):
        return do_[e] if e < ND else dpts[e - ND]

    def dist_to(qc, e: int) -> float:
        cc = dcenter(e)
        dd = 0.0
        for i in range(md):
            t = qc[i] - cc[i]
            dd += t * t
        return sqrt(dd)

    def resolve_block(ei: int) -> None:
        # exact per-point winners for one query leaf (or zero-radius node):
        # candidates re-keyed by the pair bound dist - rq - rc, expanded
        # best-first, leaves swept wholesale
        qe = ent_q[ei]
        rq = qr[qe]
        qa, qb = qslo[qe], qshi[qe]
        nb = qb - qa
        bd = [inf] * nb
        bi = [2**62] * nb
        qc = qo[qe]
        local: list[tuple[float, int]] = []
        for lb, ce in ent_cand[ei]:
            # pair bound, padded down so rounding never skips an exact tie
            rc = dr[ce] if ce < ND else 0.0
            v = lb - rq - 1e-12 * (lb + rq + rc)
            if v < 0.0:
                v = 0.0
            local.append((v, ce))
        heapq.heapify(local)
        while local:
            worst = bd[0]
            for i in range(1, nb):
                if bd[i] > worst:
                    worst = bd[i]
            lbh, ce = local[0]
            if lbh > worst:
                break
            heapq.heappop(local)
            if ce < ND and dleft[ce] >= 0:
                for ch in (int(dleft[ce]), int(dright[ce])):
                    cc = do_[ch]
                    dd = 0.0
                    for i in range(md):
                        t = qc[i] - cc[i]
                        dd += t * t
                    dist = sqrt(dd)
                    rch = dr[ch]
                    v = dist - rq - rch - 1e-12 * (dist + rq + rch)
                    if v < 0.0:
                        v = 0.0
                    heapq.heappush(local, (v, ch))
                continue
            if ce >= ND:
                plo, phi = ce - ND, ce - ND + 1
            else:
                plo, phi = dslo[ce], dshi[ce]
            for pos in range(plo, phi):
                cc = dpts[pos]
                pid = dids[pos]
                for i in range(nb):
                    pp = qpts[qa + i]
                    dd = 0.0
                    for ax in range(md):
                        t = pp[ax] - cc[ax]
                        dd += t * t
                    dist = sqrt(dd)
                    if dist < bd[i] or (dist == bd[i] and pid < bi[i]):
                        bd[i] = dist
                        bi[i] = pid
        for i in range(nb):
            row = qids[qa + i]
            nn_id_out[row] = bi[i]
            nn_dist_out[row] = bd[i]

    while main:
        neg_ub, ei = heapq.heappop(main)
        pops += 1
        qe = ent_q[ei]
        ub = ent_ub[ei]
        cand = ent_cand[ei]
        rq = qr[qe] if qe < NQ else 0.0

        if want_nn and (rq == 0.0 or qleft[qe] < 0):
            resolve_block(ei)
            continue

        if rq == 0.0 and (not cand or ub <= cand[0][0]):
            return ub, pops  # this entry's worst is settled: Hausdorff found

        lbh, ce = cand[0]
        rc = dr[ce] if ce < ND else 0.0
        if approx and rq < eps and rc < eps:
            return dist_to(qcenter(qe), ce), pops

        if rc > rq:
            # refine the candidate head inside this entry
            heapq.heappop(cand)
            qc = qcenter(qe)
            if dleft[ce] >= 0:
                for ch in (dleft[ce], dright[ce]):
                    cc = do_[ch]
                    dd = 0.0
                    for i in range(md):
                        t = qc[i] - cc[i]
                        dd += t * t
                    dist = sqrt(dd)
                    rch = dr[ch]
                    lb = dist - rch
                    if lb < 0.0:
                        lb = 0.0
                    ub2 = sqrt(dd + rch * rch) + rq
                    heapq.heappush(cand, (lb, ch))
                    if ub2 < ub:
                        ub = ub2
            else:
                for pos in range(dslo[ce], dshi[ce]):
                    cc = dpts[pos]
                    dd = 0.0
                    for i in range(md):
                        t = qc[i] - cc[i]
                        dd += t * t
                    dist = sqrt(dd)
                    heapq.heappush(cand, (dist, ND + pos))
                    if dist + rq < ub:
                        ub = dist + rq
            ent_ub[ei] = ub
            heapq.heappush(main, (-ub, ei))
        elif rq == 0.0:
            # candidate is a point or zero-radius node: absorb it
            heapq.heappop(cand)
            dist = dist_to(qcenter(qe), ce)
            if dist < ub:
                ub = dist
            ent_ub[ei] = ub
            heapq.heappush(main, (-ub, ei))
        else:
            # split the query node; each child entry re-derives every
            # candidate bound from its own center
            if qleft[qe] >= 0:
                children = (int(qleft[qe]), int(qright[qe]))
            else:
                children = tuple(range(NQ + qslo[qe], NQ + qshi[qe]))
            for qch in children:
                qcc = qcenter(qch)
                rqc = qr[qch] if qch < NQ else 0.0
                ub_c = ub
                scratch = []
                for lb_old, ce2 in cand:
                    cc = dcenter(ce2)
                    dd = 0.0
                    for i in range(md):
                        t = qcc[i] - cc[i]
                        dd += t * t
                    dist = sqrt(dd)
                    rc2 = dr[ce2] if ce2 < ND else 0.0
                    lb2 = dist - rc2
                    if lb2 < 0.0:
                        lb2 = 0.0
                    ub2 = sqrt(dd + rc2 * rc2) + rqc
                    if ub2 < ub_c:
                        ub_c = ub2
                    scratch.append((dist, rc2, lb2, ce2))
                items: list[tuple[float, int]] = []
                for dist, rc2, lb2, ce2 in scratch:
                    # drop threshold padded up: rounding must not evict a
                    # candidate whose true pair distance sits exactly on it
                    if dist - rqc - rc2 > ub_c + 1e-12 * (dist + rqc + rc2):
                        continue
                    items.append((lb2, ce2))
                heapq.heapify(items)
                ent_q.append(qch)
                ent_ub.append(ub_c)
                ent_cand.append(items)
                heapq.heappush(main, (-ub_c, len(ent_q) - 1))
            # the parent entry is dropped (not reinserted)

    if mode == MODE_HAUS_NN:
        worst = 0.0
        for i in range(nn_dist_out.shape[0]):
            if nn_dist_out[i] > worst:
                worst = nn_dist_out[i]
        return worst, pops
    return float("nan"), pops
