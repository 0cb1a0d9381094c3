"""Principal axis tree: n_c-ary splits along each node's dominant axis."""

from __future__ import annotations

import numpy as np

from .. import kernels
from .stats import SearchIndex


def principal_axis(points, max_iters: int = 200, tol: float = 1e-10) -> np.ndarray:
    """Dominant eigenvector of the empirical covariance by power iteration.

    The sign is fixed so that the largest-magnitude component is positive.
    A zero covariance returns the first basis vector.
    """
    X = np.asarray(points, dtype=np.float64)
    d = X.shape[1]
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / X.shape[0]
    norms = np.linalg.norm(cov, axis=0)
    v = np.zeros(d)
    if norms.max() == 0.0:
        v[0] = 1.0
        return v
    v = cov[:, int(np.argmax(norms))] / norms.max()
    for _ in range(max_iters):
        w = cov @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        w /= nw
        done = np.linalg.norm(w - v) < tol
        v = w
        if done:
            break
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def project(X, u) -> np.ndarray:
    # same coordinate-order accumulation as the query kernels
    acc = np.zeros(X.shape[0])
    for k in range(X.shape[1]):
        acc += X[:, k] * u[k]
    return acc


def block_sizes(n: int, n_c: int) -> list[int]:
    """``n_c`` near-equal blocks: the first ``n mod n_c`` get one extra point."""
    m = min(n, n_c)
    base, extra = divmod(n, m)
    return [base + 1 if i < extra else base for i in range(m)]


class PrincipalAxisTree(SearchIndex):
    """Each internal node sorts its points by projection on their principal
    axis and cuts them into ``n_c`` consecutive blocks. The per-child
    ``[lo, hi]`` projection intervals give the elimination bounds; bounds are
    stacked across levels by carrying the query's projection onto each
    crossed boundary (``stacked=True``).
    """

    def __init__(self, data, n_c: int = 7, leaf_cap: int | None = None, stacked: bool = True):
        if n_c < 2:
            raise ValueError("n_c must be >= 2")
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] == 0:
            raise ValueError("data must be a nonempty (n, d) array")
        self.n_c = n_c
        self.leaf_cap = n_c if leaf_cap is None else leaf_cap
        if self.leaf_cap < 1:
            raise ValueError("leaf_cap must be >= 1")
        self.stacked = stacked
        self._nodes = []   # [start, end, depth, ch_off, ch_cnt]
        self._axes = []
        self._ch_node, self._lo, self._hi = [], [], []
        order = []
        self._build(np.arange(self.n), 0, order)
        nodes = np.asarray(self._nodes, dtype=np.int64)
        self.start, self.end, self.depth = nodes[:, 0].copy(), nodes[:, 1].copy(), nodes[:, 2].copy()
        self.ch_off, self.ch_cnt = nodes[:, 3].copy(), nodes[:, 4].copy()
        self.is_leaf = self.ch_cnt == 0
        self.axes = np.ascontiguousarray(self._axes, dtype=np.float64)
        self.ch_node = np.asarray(self._ch_node, dtype=np.int64)
        self.lo = np.asarray(self._lo, dtype=np.float64)
        self.hi = np.asarray(self._hi, dtype=np.float64)
        self.perm = np.asarray(order, dtype=np.int64)
        self.lx = np.ascontiguousarray(self.data[self.perm])
        self.stack_cap = int(self.depth.max()) + 2  # one search frame per level

    def _build(self, idx, depth, order):
        nd = len(self._nodes)
        self._nodes.append([len(order), 0, depth, 0, 0])
        X = self.data[idx]
        self._axes.append(np.zeros(self.dim))
        if idx.size <= self.leaf_cap or np.all(X == X[0]):
            order.extend(idx.tolist())
            self._nodes[nd][1] = len(order)
            return nd
        u = principal_axis(X)
        self._axes[nd] = u
        proj = project(X, u)
        srt = np.argsort(proj, kind="stable")
        blocks, s = [], 0
        for size in block_sizes(idx.size, self.n_c):
            blocks.append(srt[s:s + size])
            s += size
        off = len(self._ch_node)
        self._nodes[nd][3:5] = [off, len(blocks)]
        self._ch_node.extend([-1] * len(blocks))
        self._lo.extend(float(proj[b].min()) for b in blocks)
        self._hi.extend(float(proj[b].max()) for b in blocks)
        for j, b in enumerate(blocks):
            self._ch_node[off + j] = self._build(idx[b], depth + 1, order)
        self._nodes[nd][1] = len(order)
        return nd

    def children(self, nd: int) -> list[int]:
        off, m = self.ch_off[nd], self.ch_cnt[nd]
        return self.ch_node[off:off + m].tolist()

    def _run(self, k, Q, out_idx, out_d2, out_stats):
        k.pat_batch(Q, self.lx, self.perm, self.is_leaf, self.start, self.end,
                    self.axes, self.ch_off, self.ch_cnt, self.ch_node, self.lo,
                    self.hi, self.stacked, self.stack_cap, out_idx, out_d2, out_stats)

    def waydown_batch(self, Q, backend=None) -> np.ndarray:
        Q = self._check_queries(Q)
        out = np.empty(Q.shape[0], dtype=np.int64)
        kernels.get_backend(backend).pat_waydown(
            Q, self.lx, self.perm, self.is_leaf, self.start, self.end, self.axes,
            self.ch_off, self.ch_cnt, self.ch_node, self.lo, self.hi, out)
        return out

    def dump(self) -> str:
        lines = []
        for nd in range(len(self.start)):
            size = self.end[nd] - self.start[nd]
            head = f"{nd} depth={self.depth[nd]} size={size}"
            if self.is_leaf[nd]:
                lines.append(head + " leaf")
            else:
                lines.append(head + " children=" + ",".join(map(str, self.children(nd))))
        return "\n".join(lines) + "\n"


def pat_build(data, n_c: int = 7, leaf_cap: int | None = None) -> PrincipalAxisTree:
    return PrincipalAxisTree(data, n_c, leaf_cap)


def pat_query(root: PrincipalAxisTree, q, backend=None):
    return root.query(q, backend=backend)
