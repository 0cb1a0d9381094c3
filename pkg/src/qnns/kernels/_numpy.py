"""Interpreted fallback for the compiled kernels.

Same signatures and same results as ``_numba``. Per-row distances are
vectorized across points but accumulated coordinate by coordinate, which
keeps the floating-point summation order identical to the compiled path.
Tree traversal itself stays a Python loop; this backend exists for
portability and cross-checking, not speed.
"""

import numpy as np


def _rows_sqdist(A, q):
    acc = np.zeros(A.shape[0])
    for k in range(A.shape[1]):
        diff = A[:, k] - q[k]
        acc += diff * diff
    return acc


def _scan_leaf(lx, perm, s, e, q, best, bi, stats):
    if e <= s:
        return best, bi
    dists = _rows_sqdist(lx[s:e], q)
    stats[0] += e - s
    for off, dt in enumerate(dists.tolist()):
        if dt > best:
            stats[1] += 1
            continue
        p = int(perm[s + off])
        if dt < best or p < bi:
            best, bi = dt, p
    return best, bi


def brute_batch(X, Q, out_idx, out_d2, out_stats):
    n = X.shape[0]
    for i in range(Q.shape[0]):
        dists = _rows_sqdist(X, Q[i])
        prefix = np.minimum.accumulate(np.concatenate(([np.inf], dists[:-1])))
        j = int(np.argmin(dists))
        out_idx[i] = j
        out_d2[i] = dists[j]
        out_stats[i, 0] += n
        out_stats[i, 1] += int(np.count_nonzero(dists >= prefix))
        out_stats[i, 2] += 1


def assign(X, C, out_lab, out_d2, chunk=4096):
    """Nearest center of every row of ``X``; lowest index on ties."""
    for s in range(0, X.shape[0], chunk):
        Xc = X[s:s + chunk]
        D = np.zeros((Xc.shape[0], C.shape[0]))
        for k in range(X.shape[1]):
            diff = Xc[:, k, None] - C[None, :, k]
            D += diff * diff
        lab = np.argmin(D, axis=1)
        out_lab[s:s + chunk] = lab
        out_d2[s:s + chunk] = D[np.arange(Xc.shape[0]), lab]


def kd_batch(Q, lx, perm, is_leaf, start, end, axis, split, left, right,
             stack_cap, out_idx, out_d2, out_stats):
    for i in range(Q.shape[0]):
        q = Q[i]
        st = out_stats[i]
        best, bi = np.inf, -1
        stack = [(0, 0.0)]
        while stack:
            nd, lb = stack.pop()
            if lb > best:
                continue
            st[2] += 1
            if is_leaf[nd]:
                best, bi = _scan_leaf(lx, perm, start[nd], end[nd], q, best, bi, st)
                continue
            diff = q[axis[nd]] - split[nd]
            st[3] += 1
            near, far = (left[nd], right[nd]) if diff <= 0.0 else (right[nd], left[nd])
            far_lb = max(diff * diff, lb)
            if far_lb <= best:
                stack.append((far, far_lb))
            stack.append((near, lb))
        out_idx[i] = bi
        out_d2[i] = best


def _gaps(p, lo, hi):
    return np.maximum(np.maximum(lo - p, p - hi), 0.0)


def _next_child(keys, lbs, done, best):
    """Nearest unvisited child that survives ``best``; -1 when none is left."""
    done |= lbs > best
    if done.all():
        return -1
    return int(np.argmin(np.where(done, np.inf, keys)))


def pat_batch(Q, lx, perm, is_leaf, start, end, axes, ch_off, ch_cnt, ch_node,
              lo, hi, stacked, stack_cap, out_idx, out_d2, out_stats):
    d = Q.shape[1]
    for i in range(Q.shape[0]):
        q = Q[i]
        st = out_stats[i]
        best, bi = np.inf, -1
        frames = []
        pending = (0, 0.0, 0.0, q)
        while True:
            if pending is not None:
                nd, lb, acc, qp = pending
                pending = None
                st[2] += 1
                if is_leaf[nd]:
                    best, bi = _scan_leaf(lx, perm, start[nd], end[nd], q, best, bi, st)
                else:
                    u = axes[nd]
                    pq = _dot(q, u, d)
                    pp = _dot(qp, u, d) if acc > 0.0 else pq
                    off, m = ch_off[nd], ch_cnt[nd]
                    st[3] += m
                    gq = _gaps(pq, lo[off:off + m], hi[off:off + m])
                    frames.append((nd, lb, acc, qp, pp, gq, np.maximum(gq * gq, lb), np.zeros(m, bool)))
            if not frames:
                break
            nd, lb, acc, qp, pp, gq, lbs, done = frames[-1]
            if lb > best:
                frames.pop()
                continue
            j = _next_child(gq, lbs, done, best)
            if j < 0:
                frames.pop()
                continue
            done[j] = True
            s = ch_off[nd] + j
            lbj, accj, nq = lbs[j], 0.0, q
            if stacked:
                gp = _gaps(pp, lo[s], hi[s])
                accj = acc + gp * gp
                lbj = max(lbj, accj)
                if lbj > best:
                    continue
                if accj > 0.0:
                    shift = min(max(pp, lo[s]), hi[s]) - pp
                    nq = (qp if acc > 0.0 else q) + shift * axes[nd]
            pending = (ch_node[s], lbj, accj, nq)
        out_idx[i] = bi
        out_d2[i] = best


def _dot(x, u, d):
    acc = 0.0
    for k in range(d):
        acc += x[k] * u[k]
    return acc


def qtree_batch(Q, lx, perm, is_leaf, start, end, c_off, c_cnt, pair_off, inv2ab,
                cx, cxt, child, has_f, f_ptr, f_idx, use_friends, stacked, stack_cap,
                out_idx, out_d2, out_stats):
    for i in range(Q.shape[0]):
        q = Q[i]
        st = out_stats[i]
        best, bi = np.inf, -1
        frames = []
        pending = (0, 0.0, 0.0, q)
        while True:
            if pending is not None:
                nd, lb, acc, qp = pending
                pending = None
                st[2] += 1
                if is_leaf[nd]:
                    best, bi = _scan_leaf(lx, perm, start[nd], end[nd], q, best, bi, st)
                else:
                    off, m, po = c_off[nd], c_cnt[nd], pair_off[nd]
                    dq = _rows_sqdist(cx[off:off + m], q)
                    a = int(np.argmin(dq))
                    st[0] += m
                    if use_friends and has_f[nd]:
                        cand = f_idx[f_ptr[off + a]:f_ptr[off + a + 1]]
                    else:
                        cand = np.arange(m)
                    mq = (dq[cand] - dq[a]) * inv2ab[po + a * m + cand]
                    lbs = np.where(cand == a, lb, np.maximum(mq * mq, lb))
                    st[3] += int(np.count_nonzero(cand != a))
                    # last slot caches the owner's distance to the projected query
                    frames.append([nd, lb, acc, qp, a, dq, cand, lbs, np.zeros(len(cand), bool), None])
            if not frames:
                break
            fr = frames[-1]
            nd, lb, acc, qp, a, dq, cand, lbs, done, dpa = fr
            if lb > best:
                frames.pop()
                continue
            t = _next_child(dq[cand], lbs, done, best)
            if t < 0:
                frames.pop()
                continue
            done[t] = True
            j = int(cand[t])
            off, m = c_off[nd], c_cnt[nd]
            lbj, accj, nq = lbs[t], acc, qp
            if stacked and j != a:
                h = inv2ab[pair_off[nd] + a * m + j]
                if acc > 0.0:
                    if dpa is None:
                        dpa = fr[9] = _rows_sqdist(cx[off + a:off + a + 1], qp)[0]
                        st[0] += 1
                    mp = (_rows_sqdist(cx[off + j:off + j + 1], qp)[0] - dpa) * h
                    st[0] += 1
                    base = qp
                else:
                    mp = (dq[j] - dq[a]) * h
                    base = q
                if mp > 0.0:
                    accj = acc + mp * mp
                    lbj = max(lbj, accj)
                    if lbj > best:
                        continue
                    nq = base + (2.0 * mp * h) * (cx[off + j] - cx[off + a])
            pending = (child[off + j], lbj, accj, nq)
        out_idx[i] = bi
        out_d2[i] = best


def qtree_waydown(Q, lx, perm, is_leaf, start, end, c_off, c_cnt, cx, child, out_idx):
    for i in range(Q.shape[0]):
        q = Q[i]
        nd = 0
        while not is_leaf[nd]:
            off = c_off[nd]
            a = int(np.argmin(_rows_sqdist(cx[off:off + c_cnt[nd]], q)))
            nd = child[off + a]
        out_idx[i] = _leaf_argmin(lx, perm, start[nd], end[nd], q)


def pat_waydown(Q, lx, perm, is_leaf, start, end, axes, ch_off, ch_cnt, ch_node,
                lo, hi, out_idx):
    d = Q.shape[1]
    for i in range(Q.shape[0]):
        q = Q[i]
        nd = 0
        while not is_leaf[nd]:
            off, m = ch_off[nd], ch_cnt[nd]
            g = _gaps(_dot(q, axes[nd], d), lo[off:off + m], hi[off:off + m])
            nd = ch_node[off + int(np.argmin(g))]
        out_idx[i] = _leaf_argmin(lx, perm, start[nd], end[nd], q)


def _leaf_argmin(lx, perm, s, e, q):
    dists = _rows_sqdist(lx[s:e], q)
    best = dists.min()
    return int(perm[s:e][dists == best].min())
