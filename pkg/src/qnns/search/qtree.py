"""Quantization tree: recursive Voronoi partition by snapped Lloyd codebooks.

Every internal node quantizes its points with ``min(n_c, distinct)`` sites,
snaps the sites onto node points and hands each point to its nearest site.
Elimination between sibling slabs uses the distance to the bisector of the
owner ``A`` and the sibling ``B``, ``(|qB|^2 - |qA|^2) / (2|AB|)``, with
``1 / (2|AB|)`` precomputed for every ordered pair.

In friends mode each node also stores, per site, the sibling sites whose
slabs can hold the true nearest point of a query owned by that site; only
those siblings are ever considered. The lists come from
:func:`qnns.friends.friends_fast`, audited against the exact per-node lists
of :func:`qnns.friends.friends_first` (the exact lists replace the fast
ones if the audit fails).
"""

from __future__ import annotations

import enum
import logging

import numpy as np

from .. import kernels
from ..delaunay import build as delaunay_build
from ..errors import DegenerateInput, DuplicateSite, GeneralPositionViolation
from ..friends import MAX_FAST_DIM, friends_fast, friends_first
from ..quantization import assign, count_distinct, lloyd, snap_to_dataset
from .stats import SearchIndex

log = logging.getLogger(__name__)


class Mode(enum.Enum):
    CRUDE = "crude"
    FRIENDS = "friends"


class QuantizationTree(SearchIndex):
    def __init__(self, data, n_c: int = 35, leaf_cap: int | None = None,
                 mode: Mode | str = Mode.CRUDE, stacked: bool = True,
                 rng_seed: int | np.random.Generator = 0, audit: bool = True,
                 max_iters: int = 100, rel_tol: float = 1e-6, backend=None):
        if n_c < 2:
            raise ValueError("n_c must be >= 2")
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] == 0:
            raise ValueError("data must be a nonempty (n, d) array")
        self.mode = Mode(mode)
        if self.mode is Mode.FRIENDS and self.dim > MAX_FAST_DIM:
            raise ValueError(f"friends mode supports d <= {MAX_FAST_DIM}, got d = {self.dim}")
        self.n_c = n_c
        self.leaf_cap = n_c if leaf_cap is None else leaf_cap
        if self.leaf_cap < 1:
            raise ValueError("leaf_cap must be >= 1")
        self.stacked = stacked
        self.use_friends = self.mode is Mode.FRIENDS
        self._rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
        # insertion orders come from a child stream so Lloyd sees the same draws in both modes
        self._order_rng = self._rng.spawn(1)[0]
        self._audit, self._lloyd_kw = audit, dict(max_iters=max_iters, rel_tol=rel_tol, backend=backend)
        self.lloyd_runs = []        # (node, LloydResult)
        self.friend_lists = {}      # node -> FriendLists
        self.friend_fallbacks = []  # nodes whose fast lists failed the audit
        self.degraded = []          # friends-mode nodes left without lists

        self._nodes = []            # [start, end, depth, c_off, c_cnt, pair_off]
        self._cx, self._child, self._centers, self._inv = [], [], [], []
        order = []
        self._build(np.arange(self.n), 0, order)
        del self._rng, self._order_rng
        self._finalize(order)

    # ------------------------------------------------------------------ build

    def _build(self, idx, depth, order):
        nd = len(self._nodes)
        self._nodes.append([len(order), 0, depth, 0, 0, 0])
        X = self.data[idx]
        distinct = count_distinct(X) if idx.size > self.leaf_cap else 1
        if distinct < 2:
            order.extend(idx.tolist())
            self._nodes[nd][1] = len(order)
            return nd
        N = min(self.n_c, distinct)
        res = lloyd(X, N, rng_seed=self._rng, **self._lloyd_kw)
        self.lloyd_runs.append((nd, res))
        cb = snap_to_dataset(res.codebook, X)
        labels = assign(X, cb.sites).labels
        S = cb.sites
        off = len(self._cx)
        po = len(self._inv)
        self._nodes[nd][3:6] = [off, N, po]
        self._cx.extend(S)
        self._centers.extend(idx[cb.indices].tolist())
        self._child.extend([-1] * N)
        AB = np.sqrt(np.sum((S[:, None, :] - S[None, :, :]) ** 2, axis=2))
        with np.errstate(divide="ignore"):
            inv = np.where(AB > 0, 0.5 / np.where(AB > 0, AB, 1.0), 0.0)
        self._inv.extend(inv.ravel().tolist())
        if self.use_friends:
            self._node_friends(nd, S, X)
        for j in range(N):
            self._child[off + j] = self._build(idx[labels == j], depth + 1, order)
        self._nodes[nd][1] = len(order)
        return nd

    def _node_friends(self, nd, S, X):
        try:
            tri = delaunay_build(S, rng_seed=self._order_rng)
        except (DegenerateInput, GeneralPositionViolation, DuplicateSite) as exc:
            log.info("node %d: no triangulation of its centers (%s); crude search there", nd, exc)
            self.degraded.append(nd)
            return
        fl = friends_fast(S, tri)
        if self._audit:
            exact = friends_first(S, X, tri)
            if not fl.contains(exact):
                log.warning("node %d: fast friend lists miss exact ones; using exact lists", nd)
                self.friend_fallbacks.append(nd)
                fl = exact
        self.friend_lists[nd] = fl

    def _finalize(self, order):
        nodes = np.asarray(self._nodes, dtype=np.int64)
        self.start, self.end, self.depth = nodes[:, 0].copy(), nodes[:, 1].copy(), nodes[:, 2].copy()
        self.c_off, self.c_cnt, self.pair_off = nodes[:, 3].copy(), nodes[:, 4].copy(), nodes[:, 5].copy()
        self.is_leaf = self.c_cnt == 0
        d = self.dim
        self.cx = np.ascontiguousarray(np.reshape(self._cx, (-1, d)) if self._cx else np.zeros((0, d)))
        self.cxt = np.ascontiguousarray(self.cx.T)
        self.centers = np.asarray(self._centers, dtype=np.int64)
        self.child = np.asarray(self._child, dtype=np.int64)
        self.inv2ab = np.asarray(self._inv, dtype=np.float64)
        self.has_f = np.zeros(len(nodes), dtype=bool)
        slots = len(self.child)
        counts = np.zeros(slots, dtype=np.int64)
        rows = [np.zeros(0, dtype=np.int64)] * slots
        for nd, fl in self.friend_lists.items():
            self.has_f[nd] = True
            for a in range(len(fl)):
                rows[self.c_off[nd] + a] = fl[a]
                counts[self.c_off[nd] + a] = len(fl[a])
        self.f_ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        self.f_idx = np.concatenate(rows).astype(np.int64) if slots else np.zeros(0, dtype=np.int64)
        self.perm = np.asarray(order, dtype=np.int64)
        self.lx = np.ascontiguousarray(self.data[self.perm])
        self.stack_cap = int(self.depth.max()) + 2  # one search frame per level
        del self._nodes, self._cx, self._child, self._centers, self._inv

    # ----------------------------------------------------------------- search

    def children(self, nd: int) -> list[int]:
        off, m = self.c_off[nd], self.c_cnt[nd]
        return self.child[off:off + m].tolist()

    def _run(self, k, Q, out_idx, out_d2, out_stats):
        k.qtree_batch(Q, self.lx, self.perm, self.is_leaf, self.start, self.end,
                      self.c_off, self.c_cnt, self.pair_off, self.inv2ab, self.cx,
                      self.cxt, self.child, self.has_f, self.f_ptr, self.f_idx,
                      self.use_friends, self.stacked, self.stack_cap,
                      out_idx, out_d2, out_stats)

    def waydown_batch(self, Q, backend=None) -> np.ndarray:
        Q = self._check_queries(Q)
        out = np.empty(Q.shape[0], dtype=np.int64)
        kernels.get_backend(backend).qtree_waydown(
            Q, self.lx, self.perm, self.is_leaf, self.start, self.end,
            self.c_off, self.c_cnt, self.cx, self.child, out)
        return out

    def leaves(self) -> list[np.ndarray]:
        return [self.perm[self.start[nd]:self.end[nd]] for nd in np.flatnonzero(self.is_leaf)]

    def dump(self) -> str:
        lines = []
        for nd in range(len(self.start)):
            head = f"{nd} depth={self.depth[nd]} size={self.end[nd] - self.start[nd]}"
            if self.is_leaf[nd]:
                lines.append(head + " leaf")
                continue
            line = head + " children=" + ",".join(map(str, self.children(nd)))
            if self.has_f[nd]:
                line += " friends=" + ",".join(map(str, self.friend_lists[nd].sizes().tolist()))
            lines.append(line)
        return "\n".join(lines) + "\n"


def qtree_build(data, n_c: int = 35, leaf_cap: int | None = None, mode="crude", **kw) -> QuantizationTree:
    return QuantizationTree(data, n_c, leaf_cap, mode, **kw)


def qtree_query(root: QuantizationTree, q, backend=None):
    return root.query(q, backend=backend)


def waydown_query(root, q, backend=None) -> int:
    """Best point of the single leaf reached by descent (no backtracking)."""
    return int(root.waydown_batch(q, backend=backend)[0])
