# distutils: language = c++
# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled distance kernels, tree builder, and ball-tree traversal.

Mirror of the pure-Python module, kept arithmetically identical: squared
distances accumulate one axis at a time, square roots happen at the same
places, and queue ties break on the same integers. The build compiles
without -ffast-math and with -ffp-contract=off so both implementations
produce the same bits.
"""

from libc.math cimport sqrt, INFINITY, NAN
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort as cpp_sort

import numpy as np

ctypedef pair[double, long long] dl_pair
ctypedef long long i64

MODE_HAUS = 0
MODE_HAUS_APPROX = 1
MODE_NN = 2
MODE_HAUS_NN = 3


cdef inline bint pair_lt(dl_pair a, dl_pair b) noexcept nogil:
    if a.first < b.first:
        return True
    if a.first == b.first and a.second < b.second:
        return True
    return False


cdef inline void heap_push(vector[dl_pair]& h, double key, i64 tie) noexcept nogil:
    cdef dl_pair item
    cdef size_t i, p
    item.first = key
    item.second = tie
    h.push_back(item)
    i = h.size() - 1
    while i > 0:
        p = (i - 1) >> 1
        if pair_lt(h[i], h[p]):
            item = h[i]
            h[i] = h[p]
            h[p] = item
            i = p
        else:
            break


cdef inline dl_pair heap_pop(vector[dl_pair]& h) noexcept nogil:
    cdef dl_pair top = h[0]
    cdef dl_pair last = h.back()
    cdef size_t n, i, c
    h.pop_back()
    n = h.size()
    if n > 0:
        i = 0
        while True:
            c = 2 * i + 1
            if c >= n:
                break
            if c + 1 < n and pair_lt(h[c + 1], h[c]):
                c += 1
            if pair_lt(h[c], last):
                h[i] = h[c]
                i = c
            else:
                break
        h[i] = last
    return top


def brute_hausdorff(const double[:, ::1] q, const double[:, ::1] d):
    """Directed Hausdorff by the plain double loop."""
    cdef Py_ssize_t nq = q.shape[0], nd = d.shape[0], md = q.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double worst = 0.0, best, dd, t
    if nq == 0 or nd == 0:
        raise ValueError("brute_hausdorff needs non-empty inputs")
    with nogil:
        for i in range(nq):
            best = INFINITY
            for j in range(nd):
                dd = 0.0
                for k in range(md):
                    t = q[i, k] - d[j, k]
                    dd += t * t
                if dd < best:
                    best = dd
            if best > worst:
                worst = best
    return sqrt(worst)


def brute_nn(const double[:, ::1] q, const double[:, ::1] d):
    """Per-query nearest neighbor position (first index on ties) and distance."""
    cdef Py_ssize_t nq = q.shape[0], nd = d.shape[0], md = q.shape[1]
    cdef Py_ssize_t i, j, k, arg
    cdef double best, dd, t
    if nq == 0 or nd == 0:
        raise ValueError("brute_nn needs non-empty inputs")
    out_i = np.empty(nq, dtype=np.int64)
    out_d = np.empty(nq, dtype=np.float64)
    cdef i64[::1] oi = out_i
    cdef double[::1] od = out_d
    with nogil:
        for i in range(nq):
            best = INFINITY
            arg = 0
            for j in range(nd):
                dd = 0.0
                for k in range(md):
                    t = q[i, k] - d[j, k]
                    dd += t * t
                if dd < best:
                    best = dd
                    arg = j
            oi[i] = arg
            od[i] = sqrt(best)
    return out_i, out_d


def build_tree_arrays(pts, ids, int f, int md):
    """Flatten a point set into preorder ball-tree arrays in one pass.

    Same splitting rules as the reference builder: leaf at ``f`` members
    or a fully degenerate box, otherwise a midpoint split of the widest
    axis (strictly-greater coordinates go left) with a stable median
    split as the fallback. Points are reordered in place so every node
    owns one contiguous span; arithmetic runs in the same order as the
    pure twin so the arrays match byte for byte.
    """
    pbuf = np.array(pts, dtype=np.float64, order="C")
    ibuf = np.array(ids, dtype=np.int64)
    cdef double[:, ::1] P = pbuf
    cdef i64[::1] I = ibuf
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1]
    cdef vector[double] o_v, r_v, lo_v, hi_v
    cdef vector[int] left_v, right_v
    cdef vector[i64] slo_v, shi_v
    cdef vector[i64] st_a, st_b, st_par, st_left
    cdef vector[double] acc, tmp
    cdef vector[i64] sel, tmpids
    cdef vector[dl_pair] keyed
    cdef dl_pair kitem
    cdef i64 a, b, parent, is_left, row, m, nl, half, split_at
    cdef Py_ssize_t ax, pos, k2, obase
    cdef i64 cnt
    cdef int ds
    cdef double s, t, ov, v, best, lov, hiv, w, wbest, mid
    cdef bint degenerate

    st_a.push_back(0)
    st_b.push_back(n)
    st_par.push_back(-1)
    st_left.push_back(0)
    while st_a.size() > 0:
        a = st_a.back()
        st_a.pop_back()
        b = st_b.back()
        st_b.pop_back()
        parent = st_par.back()
        st_par.pop_back()
        is_left = st_left.back()
        st_left.pop_back()
        row = <i64> r_v.size()
        if parent >= 0:
            if is_left:
                left_v[parent] = <int> row
            else:
                right_v[parent] = <int> row
        m = b - a
        obase = row * d
        for ax in range(d):
            s = 0.0
            for pos in range(a, b):
                s += P[pos, ax]
            o_v.push_back(s / m)
        acc.assign(m, 0.0)
        for ax in range(md):
            ov = o_v[obase + ax]
            for k2 in range(m):
                t = P[a + k2, ax] - ov
                acc[k2] += t * t
        best = acc[0]
        for k2 in range(1, m):
            if acc[k2] > best:
                best = acc[k2]
        r_v.push_back(sqrt(best))
        for ax in range(d):
            lov = P[a, ax]
            hiv = lov
            for pos in range(a + 1, b):
                v = P[pos, ax]
                if v < lov:
                    lov = v
                if v > hiv:
                    hiv = v
            lo_v.push_back(lov)
            hi_v.push_back(hiv)
        left_v.push_back(-1)
        right_v.push_back(-1)
        slo_v.push_back(a)
        shi_v.push_back(b)
        degenerate = True
        for ax in range(d):
            if lo_v[obase + ax] != hi_v[obase + ax]:
                degenerate = False
                break
        if m <= f or degenerate:
            continue
        ds = 0
        wbest = hi_v[obase] - lo_v[obase]
        for ax in range(1, d):
            w = hi_v[obase + ax] - lo_v[obase + ax]
            if w > wbest:
                wbest = w
                ds = <int> ax
        mid = lo_v[obase + ds] + (hi_v[obase + ds] - lo_v[obase + ds]) / 2.0
        cnt = 0
        for pos in range(a, b):
            if P[pos, ds] > mid:
                cnt += 1
        sel.clear()
        if cnt == 0 or cnt == m:
            # all points on one side: stable median split on the axis
            keyed.clear()
            for k2 in range(m):
                kitem.first = P[a + k2, ds]
                kitem.second = k2
                keyed.push_back(kitem)
            cpp_sort(keyed.begin(), keyed.end())
            half = m // 2
            for k2 in range(half, m):
                sel.push_back(keyed[k2].second)
            for k2 in range(half):
                sel.push_back(keyed[k2].second)
            nl = m - half
        else:
            for k2 in range(m):
                if P[a + k2, ds] > mid:
                    sel.push_back(k2)
            for k2 in range(m):
                if not (P[a + k2, ds] > mid):
                    sel.push_back(k2)
            nl = cnt
        tmp.resize(m * d)
        tmpids.resize(m)
        for k2 in range(m):
            pos = a + sel[k2]
            for ax in range(d):
                tmp[k2 * d + ax] = P[pos, ax]
            tmpids[k2] = I[pos]
        for k2 in range(m):
            for ax in range(d):
                P[a + k2, ax] = tmp[k2 * d + ax]
            I[a + k2] = tmpids[k2]
        split_at = a + nl
        st_a.push_back(split_at)
        st_b.push_back(b)
        st_par.push_back(row)
        st_left.push_back(0)
        st_a.push_back(a)
        st_b.push_back(split_at)
        st_par.push_back(row)
        st_left.push_back(1)

    cdef Py_ssize_t nn = r_v.size()
    o_np = np.empty((nn, d), dtype=np.float64)
    r_np = np.empty(nn, dtype=np.float64)
    lo_np = np.empty((nn, d), dtype=np.float64)
    hi_np = np.empty((nn, d), dtype=np.float64)
    left_np = np.empty(nn, dtype=np.int32)
    right_np = np.empty(nn, dtype=np.int32)
    slo_np = np.empty(nn, dtype=np.int64)
    shi_np = np.empty(nn, dtype=np.int64)
    min_np = np.empty(nn, dtype=np.int64)
    cdef double[:, ::1] o_mv = o_np
    cdef double[::1] r_mv = r_np
    cdef double[:, ::1] lo_mv = lo_np
    cdef double[:, ::1] hi_mv = hi_np
    cdef int[::1] left_mv = left_np
    cdef int[::1] right_mv = right_np
    cdef i64[::1] slo_mv = slo_np
    cdef i64[::1] shi_mv = shi_np
    cdef i64[::1] min_mv = min_np
    cdef i64 mid_best
    for pos in range(nn):
        r_mv[pos] = r_v[pos]
        left_mv[pos] = left_v[pos]
        right_mv[pos] = right_v[pos]
        slo_mv[pos] = slo_v[pos]
        shi_mv[pos] = shi_v[pos]
        for ax in range(d):
            o_mv[pos, ax] = o_v[pos * d + ax]
            lo_mv[pos, ax] = lo_v[pos * d + ax]
            hi_mv[pos, ax] = hi_v[pos * d + ax]
        mid_best = I[slo_v[pos]]
        for k2 in range(slo_v[pos] + 1, shi_v[pos]):
            if I[k2] < mid_best:
                mid_best = I[k2]
        min_mv[pos] = mid_best
    return (o_np, r_np, lo_np, hi_np, left_np, right_np,
            slo_np, shi_np, min_np, pbuf, ibuf)


def traverse(const double[:, ::1] qo, const double[::1] qr,
             const int[::1] qleft, const int[::1] qright,
             const i64[::1] qslo, const i64[::1] qshi,
             const double[:, ::1] qpts, const i64[::1] qids,
             const double[:, ::1] do_, const double[::1] dr,
             const int[::1] dleft, const int[::1] dright,
             const i64[::1] dslo, const i64[::1] dshi,
             const double[:, ::1] dpts, const i64[::1] dids,
             const i64[::1] dmin, int mode, double eps,
             i64[::1] nn_id_out, double[::1] nn_dist_out):
    """Two-tree traversal; see the pure-Python twin for the full contract."""
    cdef i64 NQ = qr.shape[0]
    cdef i64 ND = dr.shape[0]
    cdef int md = <int> qpts.shape[1]
    cdef bint want_nn = mode >= MODE_NN
    cdef bint approx = mode == MODE_HAUS_APPROX

    cdef vector[i64] ent_q
    cdef vector[double] ent_ub
    cdef vector[vector[dl_pair]] ent_cand
    cdef vector[dl_pair] main_q
    cdef vector[dl_pair] parent_cand
    cdef vector[dl_pair] seed
    cdef vector[i64] children
    cdef vector[double] s_dist
    cdef vector[double] s_rc
    cdef vector[double] s_lb
    cdef vector[i64] s_ce
    cdef vector[dl_pair] local
    cdef vector[double] blk_bd
    cdef vector[i64] blk_bi

    cdef i64 pops = 0
    cdef bint returned = False
    cdef double ret_val = NAN

    cdef dl_pair popped, item
    cdef i64 ei, qe, ce, ce2, ch, qch, pid, pos, row, qa, qb, nb, plo, phi, i2
    cdef double ub, rq, rc, rc2, rqc, lbh, dd, t, dist, lb, ub2, ub_c, v, worst
    cdef int i
    cdef size_t j, k
    cdef const double* ac
    cdef const double* bc
    cdef bint resolved

    ent_q.push_back(0)
    ent_ub.push_back(INFINITY)
    seed.clear()
    item.first = 0.0
    item.second = 0
    seed.push_back(item)
    ent_cand.push_back(seed)
    heap_push(main_q, -INFINITY, 0)

    with nogil:
        while main_q.size() > 0:
            popped = heap_pop(main_q)
            pops += 1
            ei = popped.second
            qe = ent_q[ei]
            ub = ent_ub[ei]
            rq = qr[qe] if qe < NQ else 0.0

            if want_nn and (rq == 0.0 or qleft[qe] < 0):
                # settle this query block in one sweep: candidates re-keyed
                # by the pair bound dist - rq - rc, expanded best-first,
                # dataset leaves scanned wholesale
                qa = qslo[qe]
                qb = qshi[qe]
                nb = qb - qa
                blk_bd.assign(nb, INFINITY)
                blk_bi.assign(nb, <i64> 1 << 62)
                ac = &qo[qe, 0]
                local.clear()
                for k in range(ent_cand[ei].size()):
                    # pair bound, padded down so rounding never skips an
                    # exact tie
                    lb = ent_cand[ei][k].first
                    ce = ent_cand[ei][k].second
                    rc = dr[ce] if ce < ND else 0.0
                    v = lb - rq - 1e-12 * (lb + rq + rc)
                    if v < 0.0:
                        v = 0.0
                    heap_push(local, v, ce)
                while local.size() > 0:
                    worst = blk_bd[0]
                    for i2 in range(1, nb):
                        if blk_bd[i2] > worst:
                            worst = blk_bd[i2]
                    if local[0].first > worst:
                        break
                    popped = heap_pop(local)
                    ce = popped.second
                    if ce < ND and dleft[ce] >= 0:
                        for j in range(2):
                            ch = dleft[ce] if j == 0 else dright[ce]
                            bc = &do_[ch, 0]
                            dd = 0.0
                            for i in range(md):
                                t = ac[i] - bc[i]
                                dd += t * t
                            dist = sqrt(dd)
                            rc2 = dr[ch]
                            v = dist - rq - rc2 - 1e-12 * (dist + rq + rc2)
                            if v < 0.0:
                                v = 0.0
                            heap_push(local, v, ch)
                        continue
                    plo = ce - ND if ce >= ND else dslo[ce]
                    phi = ce - ND + 1 if ce >= ND else dshi[ce]
                    for pos in range(plo, phi):
                        bc = &dpts[pos, 0]
                        pid = dids[pos]
                        for i2 in range(nb):
                            dd = 0.0
                            for i in range(md):
                                t = qpts[qa + i2, i] - bc[i]
                                dd += t * t
                            dist = sqrt(dd)
                            if dist < blk_bd[i2] or (dist == blk_bd[i2] and pid < blk_bi[i2]):
                                blk_bd[i2] = dist
                                blk_bi[i2] = pid
                for i2 in range(nb):
                    row = qids[qa + i2]
                    nn_id_out[row] = blk_bi[i2]
                    nn_dist_out[row] = blk_bd[i2]
                continue

            if rq == 0.0:
                resolved = ent_cand[ei].size() == 0
                if not resolved and ub <= ent_cand[ei][0].first:
                    resolved = True
                if resolved:
                    # this entry's worst is settled: Hausdorff found
                    returned = True
                    ret_val = ub
                    break

            lbh = ent_cand[ei][0].first
            ce = ent_cand[ei][0].second
            rc = dr[ce] if ce < ND else 0.0

            if approx and rq < eps and rc < eps:
                ac = &qo[qe, 0] if qe < NQ else &qpts[qe - NQ, 0]
                bc = &do_[ce, 0] if ce < ND else &dpts[ce - ND, 0]
                dd = 0.0
                for i in range(md):
                    t = ac[i] - bc[i]
                    dd += t * t
                returned = True
                ret_val = sqrt(dd)
                break

            if rc > rq:
                heap_pop(ent_cand[ei])
                ac = &qo[qe, 0] if qe < NQ else &qpts[qe - NQ, 0]
                if dleft[ce] >= 0:
                    for j in range(2):
                        ch = dleft[ce] if j == 0 else dright[ce]
                        bc = &do_[ch, 0]
                        dd = 0.0
                        for i in range(md):
                            t = ac[i] - bc[i]
                            dd += t * t
                        dist = sqrt(dd)
                        rc2 = dr[ch]
                        lb = dist - rc2
                        if lb < 0.0:
                            lb = 0.0
                        ub2 = sqrt(dd + rc2 * rc2) + rq
                        heap_push(ent_cand[ei], lb, ch)
                        if ub2 < ub:
                            ub = ub2
                else:
                    for pos in range(dslo[ce], dshi[ce]):
                        bc = &dpts[pos, 0]
                        dd = 0.0
                        for i in range(md):
                            t = ac[i] - bc[i]
                            dd += t * t
                        dist = sqrt(dd)
                        heap_push(ent_cand[ei], dist, ND + pos)
                        if dist + rq < ub:
                            ub = dist + rq
                ent_ub[ei] = ub
                heap_push(main_q, -ub, ei)
            elif rq == 0.0:
                heap_pop(ent_cand[ei])
                ac = &qo[qe, 0] if qe < NQ else &qpts[qe - NQ, 0]
                bc = &do_[ce, 0] if ce < ND else &dpts[ce - ND, 0]
                dd = 0.0
                for i in range(md):
                    t = ac[i] - bc[i]
                    dd += t * t
                dist = sqrt(dd)
                if dist < ub:
                    ub = dist
                ent_ub[ei] = ub
                heap_push(main_q, -ub, ei)
            else:
                children.clear()
                if qleft[qe] >= 0:
                    children.push_back(qleft[qe])
                    children.push_back(qright[qe])
                else:
                    for pos in range(qslo[qe], qshi[qe]):
                        children.push_back(NQ + pos)
                parent_cand = ent_cand[ei]
                for j in range(children.size()):
                    qch = children[j]
                    ac = &qo[qch, 0] if qch < NQ else &qpts[qch - NQ, 0]
                    rqc = qr[qch] if qch < NQ else 0.0
                    ub_c = ub
                    s_dist.clear()
                    s_rc.clear()
                    s_lb.clear()
                    s_ce.clear()
                    for k in range(parent_cand.size()):
                        ce2 = parent_cand[k].second
                        bc = &do_[ce2, 0] if ce2 < ND else &dpts[ce2 - ND, 0]
                        dd = 0.0
                        for i in range(md):
                            t = ac[i] - bc[i]
                            dd += t * t
                        dist = sqrt(dd)
                        rc2 = dr[ce2] if ce2 < ND else 0.0
                        lb = dist - rc2
                        if lb < 0.0:
                            lb = 0.0
                        ub2 = sqrt(dd + rc2 * rc2) + rqc
                        if ub2 < ub_c:
                            ub_c = ub2
                        s_dist.push_back(dist)
                        s_rc.push_back(rc2)
                        s_lb.push_back(lb)
                        s_ce.push_back(ce2)
                    seed.clear()
                    for k in range(s_ce.size()):
                        # drop threshold padded up: rounding must not evict a
                        # candidate whose true pair distance sits exactly on it
                        if s_dist[k] - rqc - s_rc[k] > ub_c + 1e-12 * (s_dist[k] + rqc + s_rc[k]):
                            continue
                        heap_push(seed, s_lb[k], s_ce[k])
                    ent_q.push_back(qch)
                    ent_ub.push_back(ub_c)
                    ent_cand.push_back(seed)
                    heap_push(main_q, -ub_c, ent_q.size() - 1)

    if returned:
        return ret_val, pops
    if mode == MODE_HAUS_NN:
        worst = 0.0
        for pos in range(nn_dist_out.shape[0]):
            if nn_dist_out[pos] > worst:
                worst = nn_dist_out[pos]
        return worst, pops
    return NAN, pops
