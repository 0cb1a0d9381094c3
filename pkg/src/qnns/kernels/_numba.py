"""Compiled query and assignment kernels.

Every function here has a twin with the same signature in ``_numpy``; the
two must agree bit for bit on indices and squared distances. Distances are
always accumulated coordinate by coordinate in index order so that partial
and full sums match across kernels and backends.

Stats rows are ``[distance_evals, partial_aborts, nodes_visited,
hyperplane_tests]``.
"""

import numpy as np
from numba import njit

_KW = dict(cache=True, nogil=True)


@njit(**_KW)
def _sqdist(x, y):
    acc = 0.0
    for k in range(x.shape[0]):
        diff = x[k] - y[k]
        acc += diff * diff
    return acc


@njit(**_KW)
def _scan_leaf(lx, perm, s, e, q, best, bi, stats):
    # tie-safe PDS: abort only on strict excess, so equal-distance points
    # with a lower dataset index still win
    d = q.shape[0]
    for t in range(s, e):
        stats[0] += 1
        acc = 0.0
        aborted = False
        for k in range(d):
            diff = lx[t, k] - q[k]
            acc += diff * diff
            if acc > best:
                aborted = True
                break
        if aborted:
            stats[1] += 1
            continue
        p = perm[t]
        if acc < best or p < bi:
            best = acc
            bi = p
    return best, bi


@njit(**_KW)
def brute_batch(X, Q, out_idx, out_d2, out_stats):
    n, d = X.shape
    for i in range(Q.shape[0]):
        q = Q[i]
        best = np.inf
        bi = -1
        st = out_stats[i]
        for j in range(n):
            st[0] += 1
            acc = 0.0
            aborted = False
            for k in range(d):
                diff = X[j, k] - q[k]
                acc += diff * diff
                if acc >= best:
                    aborted = True
                    break
            if aborted:
                st[1] += 1
                continue
            best = acc
            bi = j
        st[2] += 1
        out_idx[i] = bi
        out_d2[i] = best


@njit(**_KW)
def assign(X, C, out_lab, out_d2):
    """Nearest center of every row of ``X``; lowest index on ties."""
    n, d = X.shape
    m = C.shape[0]
    for i in range(n):
        best = np.inf
        bi = -1
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = X[i, k] - C[j, k]
                acc += diff * diff
                if acc >= best:
                    break
            if acc < best:
                best = acc
                bi = j
        out_lab[i] = bi
        out_d2[i] = best


@njit(**_KW)
def kd_batch(Q, lx, perm, is_leaf, start, end, axis, split, left, right,
             stack_cap, out_idx, out_d2, out_stats):
    st_node = np.empty(stack_cap, np.int64)
    st_lb = np.empty(stack_cap, np.float64)
    for i in range(Q.shape[0]):
        q = Q[i]
        st = out_stats[i]
        best = np.inf
        bi = -1
        sp = 1
        st_node[0] = 0
        st_lb[0] = 0.0
        while sp > 0:
            sp -= 1
            nd = st_node[sp]
            lb = st_lb[sp]
            if lb > best:
                continue
            st[2] += 1
            if is_leaf[nd]:
                best, bi = _scan_leaf(lx, perm, start[nd], end[nd], q, best, bi, st)
                continue
            diff = q[axis[nd]] - split[nd]
            st[3] += 1
            if diff <= 0.0:
                near = left[nd]
                far = right[nd]
            else:
                near = right[nd]
                far = left[nd]
            far_lb = diff * diff
            if far_lb < lb:
                far_lb = lb
            if far_lb <= best:
                st_node[sp] = far
                st_lb[sp] = far_lb
                sp += 1
            st_node[sp] = near
            st_lb[sp] = lb
            sp += 1
        out_idx[i] = bi
        out_d2[i] = best


@njit(**_KW)
def _gap(p, lo, hi):
    if p < lo:
        return lo - p
    if p > hi:
        return p - hi
    return 0.0


@njit(**_KW)
def _clamp(p, lo, hi):
    if p < lo:
        return lo
    if p > hi:
        return hi
    return p


@njit(**_KW)
def pat_batch(Q, lx, perm, is_leaf, start, end, axes, ch_off, ch_cnt, ch_node,
              lo, hi, stacked, stack_cap, out_idx, out_d2, out_stats):
    # one frame per tree level; siblings are chosen lazily on the way back
    # up, in increasing gap order, against the best distance known then
    nq, d = Q.shape
    maxc = max(1, ch_cnt.max())
    f_node = np.empty(stack_cap, np.int64)
    f_lb = np.empty(stack_cap, np.float64)
    f_acc = np.empty(stack_cap, np.float64)
    f_pp = np.empty(stack_cap, np.float64)
    f_q = np.empty((stack_cap, d), np.float64)
    f_key = np.empty((stack_cap, maxc), np.float64)
    f_lbs = np.empty((stack_cap, maxc), np.float64)
    f_done = np.empty((stack_cap, maxc), np.bool_)
    for i in range(nq):
        q = Q[i]
        st = out_stats[i]
        best = np.inf
        bi = -1
        top = -1
        nd, lb, acc = 0, 0.0, 0.0
        pending = True
        while True:
            if pending:
                pending = False
                st[2] += 1
                if is_leaf[nd]:
                    best, bi = _scan_leaf(lx, perm, start[nd], end[nd], q, best, bi, st)
                else:
                    top += 1
                    u = axes[nd]
                    pq = 0.0
                    for k in range(d):
                        pq += q[k] * u[k]
                    if acc > 0.0:
                        pp = 0.0
                        for k in range(d):
                            pp += f_q[top, k] * u[k]
                    else:
                        pp = pq
                    f_node[top] = nd
                    f_lb[top] = lb
                    f_acc[top] = acc
                    f_pp[top] = pp
                    off = ch_off[nd]
                    for j in range(ch_cnt[nd]):
                        st[3] += 1
                        gq = _gap(pq, lo[off + j], hi[off + j])
                        lbj = gq * gq
                        if lbj < lb:
                            lbj = lb
                        f_key[top, j] = gq
                        f_lbs[top, j] = lbj
                        f_done[top, j] = False
            if top < 0:
                break
            if f_lb[top] > best:
                top -= 1
                continue
            fn = f_node[top]
            off = ch_off[fn]
            j = -1
            for t in range(ch_cnt[fn]):
                if f_done[top, t]:
                    continue
                if f_lbs[top, t] > best:
                    f_done[top, t] = True
                    continue
                if j < 0 or f_key[top, t] < f_key[top, j]:
                    j = t
            if j < 0:
                top -= 1
                continue
            f_done[top, j] = True
            lbj = f_lbs[top, j]
            acc = f_acc[top]
            accj = 0.0
            if stacked:
                s = off + j
                pp = f_pp[top]
                gp = _gap(pp, lo[s], hi[s])
                accj = acc + gp * gp
                if accj > lbj:
                    lbj = accj
                if lbj > best:
                    continue
                if accj > 0.0:
                    shift = _clamp(pp, lo[s], hi[s]) - pp
                    u = axes[fn]
                    if acc > 0.0:
                        for k in range(d):
                            f_q[top + 1, k] = f_q[top, k] + shift * u[k]
                    else:
                        for k in range(d):
                            f_q[top + 1, k] = q[k] + shift * u[k]
            nd, lb, acc = ch_node[off + j], lbj, accj
            pending = True
        out_idx[i] = bi
        out_d2[i] = best


@njit(**_KW)
def qtree_batch(Q, lx, perm, is_leaf, start, end, c_off, c_cnt, pair_off, inv2ab,
                cx, cxt, child, has_f, f_ptr, f_idx, use_friends, stacked, stack_cap,
                out_idx, out_d2, out_stats):
    # same frame scheme as pat_batch; siblings in increasing center distance
    nq, d = Q.shape
    maxc = max(1, c_cnt.max())
    f_node = np.empty(stack_cap, np.int64)
    f_lb = np.empty(stack_cap, np.float64)
    f_acc = np.empty(stack_cap, np.float64)
    f_a = np.empty(stack_cap, np.int64)
    f_nc = np.empty(stack_cap, np.int64)
    f_dpa = np.empty(stack_cap, np.float64)
    f_q = np.empty((stack_cap, d), np.float64)
    f_dq = np.empty((stack_cap, maxc), np.float64)
    f_cand = np.empty((stack_cap, maxc), np.int64)
    f_lbs = np.empty((stack_cap, maxc), np.float64)
    f_done = np.empty((stack_cap, maxc), np.bool_)
    for i in range(nq):
        q = Q[i]
        st = out_stats[i]
        best = np.inf
        bi = -1
        top = -1
        nd, lb, acc = 0, 0.0, 0.0
        pending = True
        while True:
            if pending:
                pending = False
                st[2] += 1
                if is_leaf[nd]:
                    best, bi = _scan_leaf(lx, perm, start[nd], end[nd], q, best, bi, st)
                else:
                    top += 1
                    m = c_cnt[nd]
                    off = c_off[nd]
                    po = pair_off[nd]
                    # centers stored transposed: the inner loop runs across centers
                    for j in range(m):
                        f_dq[top, j] = 0.0
                    for k in range(d):
                        qk = q[k]
                        row = cxt[k]
                        for j in range(m):
                            diff = row[off + j] - qk
                            f_dq[top, j] += diff * diff
                    a = 0
                    for j in range(1, m):
                        if f_dq[top, j] < f_dq[top, a]:
                            a = j
                    st[0] += m
                    if use_friends and has_f[nd]:
                        f0 = f_ptr[off + a]
                        nc = f_ptr[off + a + 1] - f0
                        for t in range(nc):
                            f_cand[top, t] = f_idx[f0 + t]
                    else:
                        nc = m
                        for t in range(m):
                            f_cand[top, t] = t
                    for t in range(nc):
                        j = f_cand[top, t]
                        lbj = lb
                        if j != a:
                            st[3] += 1
                            mq = (f_dq[top, j] - f_dq[top, a]) * inv2ab[po + a * m + j]
                            if mq * mq > lbj:
                                lbj = mq * mq
                        f_lbs[top, t] = lbj
                        f_done[top, t] = False
                    f_node[top] = nd
                    f_lb[top] = lb
                    f_acc[top] = acc
                    f_a[top] = a
                    f_nc[top] = nc
                    f_dpa[top] = -1.0
            if top < 0:
                break
            if f_lb[top] > best:
                top -= 1
                continue
            fn = f_node[top]
            tsel = -1
            for t in range(f_nc[top]):
                if f_done[top, t]:
                    continue
                if f_lbs[top, t] > best:
                    f_done[top, t] = True
                    continue
                if tsel < 0 or f_dq[top, f_cand[top, t]] < f_dq[top, f_cand[top, tsel]]:
                    tsel = t
            if tsel < 0:
                top -= 1
                continue
            f_done[top, tsel] = True
            j = f_cand[top, tsel]
            a = f_a[top]
            m = c_cnt[fn]
            off = c_off[fn]
            lbj = f_lbs[top, tsel]
            acc = f_acc[top]
            chained = acc > 0.0
            accj = acc
            projected = False
            if stacked and j != a:
                h = inv2ab[pair_off[fn] + a * m + j]
                if chained:
                    # bisector of the real owner a and j, measured from the
                    # running projected query; computed only for siblings
                    # that survive the plain bound
                    if f_dpa[top] < 0.0:
                        f_dpa[top] = _sqdist(f_q[top], cx[off + a])
                        st[0] += 1
                    mp = (_sqdist(f_q[top], cx[off + j]) - f_dpa[top]) * h
                    st[0] += 1
                else:
                    mp = (f_dq[top, j] - f_dq[top, a]) * h
                if mp > 0.0:
                    accj = acc + mp * mp
                    if accj > lbj:
                        lbj = accj
                    if lbj > best:
                        continue
                    w = 2.0 * mp * h
                    if chained:
                        for k in range(d):
                            f_q[top + 1, k] = f_q[top, k] + w * (cx[off + j, k] - cx[off + a, k])
                    else:
                        for k in range(d):
                            f_q[top + 1, k] = q[k] + w * (cx[off + j, k] - cx[off + a, k])
                    projected = True
            if accj > 0.0 and not projected:
                for k in range(d):
                    f_q[top + 1, k] = f_q[top, k]
            nd, lb, acc = child[off + j], lbj, accj
            pending = True
        out_idx[i] = bi
        out_d2[i] = best


@njit(**_KW)
def qtree_waydown(Q, lx, perm, is_leaf, start, end, c_off, c_cnt, cx, child, out_idx):
    for i in range(Q.shape[0]):
        q = Q[i]
        nd = 0
        while not is_leaf[nd]:
            off = c_off[nd]
            a = 0
            best = _sqdist(q, cx[off])
            for j in range(1, c_cnt[nd]):
                dj = _sqdist(q, cx[off + j])
                if dj < best:
                    best = dj
                    a = j
            nd = child[off + a]
        best = np.inf
        bi = -1
        for t in range(start[nd], end[nd]):
            dt = _sqdist(q, lx[t])
            if dt < best or (dt == best and perm[t] < bi):
                best = dt
                bi = perm[t]
        out_idx[i] = bi


@njit(**_KW)
def pat_waydown(Q, lx, perm, is_leaf, start, end, axes, ch_off, ch_cnt, ch_node,
                lo, hi, out_idx):
    d = Q.shape[1]
    for i in range(Q.shape[0]):
        q = Q[i]
        nd = 0
        while not is_leaf[nd]:
            u = axes[nd]
            p = 0.0
            for k in range(d):
                p += q[k] * u[k]
            off = ch_off[nd]
            a = 0
            g = _gap(p, lo[off], hi[off])
            for j in range(1, ch_cnt[nd]):
                gj = _gap(p, lo[off + j], hi[off + j])
                if gj < g:
                    g = gj
                    a = j
            nd = ch_node[off + a]
        best = np.inf
        bi = -1
        for t in range(start[nd], end[nd]):
            dt = _sqdist(q, lx[t])
            if dt < best or (dt == best and perm[t] < bi):
                best = dt
                bi = perm[t]
        out_idx[i] = bi
