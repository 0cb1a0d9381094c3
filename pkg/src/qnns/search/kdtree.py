"""Kd-tree: median splits on coordinate axes taken in cyclic order."""

from __future__ import annotations

import numpy as np

from .stats import SearchIndex


class KdTree(SearchIndex):
    """Binary tree whose node at depth ``k`` splits on coordinate ``k mod d``.

    Each split sends ``n - n // 2`` points left and ``n // 2`` right; the
    split value is the midpoint between the two halves. A node with at most
    ``leaf_cap`` points is a leaf. Leaf points are stored contiguously in
    ``perm`` (dataset indices) and ``lx`` (their coordinates), so every
    subtree covers a contiguous ``[start, end)`` range.
    """

    def __init__(self, data, leaf_cap: int = 2):
        if leaf_cap < 1:
            raise ValueError("leaf_cap must be >= 1")
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] == 0:
            raise ValueError("data must be a nonempty (n, d) array")
        self.leaf_cap = leaf_cap
        self._axis, self._split, self._left, self._right = [], [], [], []
        self._start, self._end, self._depth = [], [], []
        order = []
        self._build(np.arange(self.n), 0, order)
        self.perm = np.asarray(order, dtype=np.int64)
        self.lx = np.ascontiguousarray(self.data[self.perm])
        self.axis = np.asarray(self._axis, dtype=np.int64)
        self.split = np.asarray(self._split, dtype=np.float64)
        self.left = np.asarray(self._left, dtype=np.int64)
        self.right = np.asarray(self._right, dtype=np.int64)
        self.start = np.asarray(self._start, dtype=np.int64)
        self.end = np.asarray(self._end, dtype=np.int64)
        self.depth = np.asarray(self._depth, dtype=np.int64)
        self.is_leaf = self.left < 0
        self.stack_cap = int(self.depth.max()) + 2

    def _new_node(self, depth):
        for lst, v in ((self._axis, -1), (self._split, 0.0), (self._left, -1),
                       (self._right, -1), (self._start, 0), (self._end, 0),
                       (self._depth, depth)):
            lst.append(v)
        return len(self._axis) - 1

    def _build(self, idx, depth, order):
        nd = self._new_node(depth)
        self._start[nd] = len(order)
        n = idx.size
        if n <= self.leaf_cap:
            order.extend(idx.tolist())
            self._end[nd] = len(order)
            return nd
        ax = depth % self.dim
        idx = idx[np.argsort(self.data[idx, ax], kind="stable")]
        half = n - n // 2
        lo_side, hi_side = idx[:half], idx[half:]
        self._axis[nd] = ax
        self._split[nd] = 0.5 * (self.data[lo_side[-1], ax] + self.data[hi_side[0], ax])
        self._left[nd] = self._build(lo_side, depth + 1, order)
        self._right[nd] = self._build(hi_side, depth + 1, order)
        self._end[nd] = len(order)
        return nd

    def _run(self, k, Q, out_idx, out_d2, out_stats):
        k.kd_batch(Q, self.lx, self.perm, self.is_leaf, self.start, self.end,
                   self.axis, self.split, self.left, self.right, self.stack_cap,
                   out_idx, out_d2, out_stats)

    def children(self, nd: int) -> list[int]:
        return [] if self.is_leaf[nd] else [int(self.left[nd]), int(self.right[nd])]

    def dump(self) -> str:
        lines = []
        for nd in range(len(self.axis)):
            size = self.end[nd] - self.start[nd]
            if self.is_leaf[nd]:
                lines.append(f"{nd} depth={self.depth[nd]} size={size} leaf")
            else:
                lines.append(f"{nd} depth={self.depth[nd]} size={size} axis={self.axis[nd]} "
                             f"children={self.left[nd]},{self.right[nd]}")
        return "\n".join(lines) + "\n"


def kd_build(data, leaf_cap: int = 2) -> KdTree:
    return KdTree(data, leaf_cap)


def kd_query(root: KdTree, q, backend=None):
    return root.query(q, backend=backend)
