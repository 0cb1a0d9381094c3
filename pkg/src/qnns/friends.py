"""Friend lists among sibling codebook sites.

``friends(s')`` is the set of sites whose slabs may hold the nearest data
point of a query that falls in the slab of ``s'``. Two constructions:

* :func:`friends_first` replays every data point ``p``: with ``s`` the site
  owning ``p``, ``s`` becomes a friend of every site that ``p`` would
  connect to if inserted into the Delaunay triangulation of the sites.
  Exact for that dataset.
* :func:`friends_fast` is dataset independent. It bounds the union of
  pseudo-insertion sets over each slab using one witness point per
  (cell, site) pair on the cell's circumsphere, plus the hull rules.
  The witness is only a sufficient test, so by default the pairs it
  rejects are settled exactly: does the closed slab meet the ball, or
  reach past the hull facet? Both are least-distance problems over the
  slab's polyhedron, solved through non-negative least squares.

Relations are handled as dense boolean ``(N, N)`` matrices; N is a node's
codebook size, never more than a few dozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear

from . import delaunay
from .quantization import Codebook, assign

MAX_FAST_DIM = 7
TAU_WITNESS = 1e-9
TAU_HULL_DOT = 1e-12


@dataclass(frozen=True)
class FriendLists:
    lists: tuple

    @classmethod
    def from_matrix(cls, M) -> "FriendLists":
        M = np.array(M, dtype=bool)
        np.fill_diagonal(M, True)
        return cls(tuple(np.flatnonzero(row) for row in M))

    def __len__(self) -> int:
        return len(self.lists)

    def __getitem__(self, s: int) -> np.ndarray:
        return self.lists[s]

    def as_matrix(self) -> np.ndarray:
        N = len(self)
        M = np.zeros((N, N), dtype=bool)
        for s, row in enumerate(self.lists):
            M[s, row] = True
        return M

    def sizes(self) -> np.ndarray:
        return np.array([len(r) for r in self.lists], dtype=np.int64)

    def contains(self, other: "FriendLists") -> bool:
        """True when every list of ``other`` is a subset of ours."""
        return bool(np.all(self.as_matrix() | ~other.as_matrix()))

    def to_text(self) -> str:
        return "".join(f"{s}: {' '.join(map(str, row.tolist()))}\n" for s, row in enumerate(self.lists))

    @classmethod
    def from_text(cls, text: str) -> "FriendLists":
        rows = []
        for line in text.splitlines():
            if not line.strip():
                continue
            head, _, tail = line.partition(":")
            if int(head) != len(rows):
                raise ValueError(f"friend lists out of order at site {head}")
            rows.append(np.array([int(v) for v in tail.split()], dtype=np.int64))
        return cls(tuple(rows))


def _sites(S) -> np.ndarray:
    arr = S.sites if isinstance(S, Codebook) else S
    return np.ascontiguousarray(arr, dtype=np.float64)


def _triangulation(S, tri):
    return tri if tri is not None else delaunay.build(S, rng_seed=0)


def pseudo_insertion_matrix(S, points, tri=None) -> np.ndarray:
    """Boolean ``(len(points), N)``: row ``i`` is PI(points[i]).

    A point coinciding with a site gets that site's Delaunay neighborhood
    plus the site itself.
    """
    S = _sites(S)
    tri = _triangulation(S, tri)
    P = np.ascontiguousarray(points, dtype=np.float64)
    PI = tri.pseudo_insert_batch(P)
    asn = assign(P, S)
    coincident = np.flatnonzero(asn.dist2 == 0.0)
    if coincident.size:
        star = np.zeros((len(S), len(S)), dtype=bool)
        for s in range(len(S)):
            star[s, list(tri.neighbors_of(s))] = True
            star[s, s] = True
        PI[coincident] = star[asn.labels[coincident]]
    return PI


def friends_first(S, data, tri=None) -> FriendLists:
    S = _sites(S)
    tri = _triangulation(S, tri)
    X = np.ascontiguousarray(data, dtype=np.float64)
    PI = pseudo_insertion_matrix(S, X, tri)
    owner = np.zeros((X.shape[0], len(S)))
    owner[np.arange(X.shape[0]), assign(X, S).labels] = 1.0
    # F[s', s] is set when some point owned by s pseudo-inserts next to s'
    F = (PI.T.astype(np.float64) @ owner) > 0
    return FriendLists.from_matrix(F)


def witnesses(S, tri):
    """Witness points ``w[c, s]`` on each cell's circumsphere towards site ``s``.

    Returns ``(cells, w, passed)`` where ``passed[c, s]`` says that ``s`` is
    (up to a relative tolerance) the nearest site of its witness; a site at
    the sphere center passes by convention.
    """
    cells = tri.cell_ids
    C = tri.centers[cells]
    r = np.sqrt(tri.radius2[cells])
    dirs = S[None, :, :] - C[:, None, :]
    norm = np.sqrt(np.sum(dirs * dirs, axis=2))
    at_center = norm == 0.0
    safe = np.where(at_center, 1.0, norm)
    W = C[:, None, :] + (r[:, None] / safe)[:, :, None] * dirs
    passed = np.empty((cells.size, len(S)), dtype=bool)
    chunk = max(1, 2_000_000 // max(1, len(S) * len(S) * S.shape[1]))
    for a in range(0, cells.size, chunk):
        Wc = W[a:a + chunk]
        D = np.sum((Wc[:, :, None, :] - S[None, None, :, :]) ** 2, axis=3)
        own = np.diagonal(D, axis1=1, axis2=2)
        passed[a:a + chunk] = own <= (1.0 + TAU_WITNESS) * D.min(axis=2)
    passed |= at_center
    return cells, W, passed


def _ldp(G, h):
    """Least-distance program ``min |z|`` subject to ``G z >= h``.

    Lawson-Hanson reduction to a nonnegative least-squares problem, solved
    with the bounded-variable active-set method. Returns ``None`` when
    infeasible.
    """
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(E.shape[0])
    f[-1] = 1.0
    u = lsq_linear(E, f, bounds=(0.0, np.inf), method="bvls").x
    r = E @ u - f
    if np.linalg.norm(r) <= 1e-9 or r[-1] >= 0.0:
        return None
    return -r[:-1] / r[-1]


def _slab_polyhedron(S, s, nbrs, scale):
    """Rows ``(U, beta)`` with slab(s) = {x : U (x - S[s]) / scale <= beta}."""
    D = S[nbrs] - S[s]
    norm = np.sqrt(np.sum(D * D, axis=1))
    return D / norm[:, None], norm / (2.0 * scale)


def _complete(S, tri, cells, passed, U):
    """Exact closure of the witness rules; mutates and returns ``U``."""
    N, d = S.shape
    scale = float(np.max(S.max(axis=0) - S.min(axis=0))) or 1.0
    C, R = tri.centers[cells], np.sqrt(tri.radius2[cells])
    V = tri.verts[cells]
    hull = tri.hull_face_normals()
    if hull:
        FS = np.array([tri.facet_sites(c, k) for (c, k), _ in hull])
        Hn = np.array([u for _, u in hull])
    for s in range(N):
        nbrs = sorted(tri.neighbors_of(s))
        A, beta = _slab_polyhedron(S, s, nbrs, scale)
        Cs, Rs = (C - S[s]) / scale, R / scale * (1.0 + 1e-7) + 1e-12
        # balls: a single bisector halfspace missing the ball rules it out
        todo = ~passed[:, s] & ~U[s][V].all(axis=1)
        todo &= (Cs @ A.T - beta[None, :]).max(axis=1) <= Rs
        for c in np.flatnonzero(todo).tolist():
            if U[s][V[c]].all():
                continue
            z = _ldp(-A, A @ Cs[c] - beta)
            if z is not None and float(z @ z) <= Rs[c] * Rs[c]:
                U[s, V[c]] = True
        # hull facets: can the slab reach the far side of the facet plane?
        if not hull:
            continue
        open_f = ~((FS == s).any(axis=1) | U[s][FS].all(axis=1))
        for f in np.flatnonzero(open_f).tolist():
            fs = FS[f]
            if U[s, fs].all():
                continue
            p = (S[fs[0]] - S[s]) / scale
            G = np.vstack([-A, Hn[f][None, :]])
            h = np.concatenate([A @ p - beta, [0.0]])
            if _ldp(G, h) is not None:
                U[s, fs] = True
    return U


def friends_fast(S, tri=None, complete: bool = True) -> FriendLists:
    """Dataset-independent friend lists from the Delaunay triangulation of ``S``.

    ``complete=False`` keeps only the witness and hull-normal rules.
    """
    S = _sites(S)
    N, d = S.shape
    if d > MAX_FAST_DIM:
        raise ValueError(f"friends_fast supports d <= {MAX_FAST_DIM}, got d = {d}")
    tri = _triangulation(S, tri)
    cells, _, passed = witnesses(S, tri)
    member = np.zeros((cells.size, N))
    np.put_along_axis(member, tri.verts[cells], 1.0, axis=1)
    # U[s, t]: t belongs to UPI(s)
    U = (passed.T.astype(np.float64) @ member) > 0
    U |= (member.T @ member) > 0
    normals = tri.hull_face_normals()
    if normals:
        G = np.array([u for _, u in normals])
        fm = np.zeros((len(normals), N))
        for f, ((c, k), _) in enumerate(normals):
            fm[f, tri.facet_sites(c, k)] = 1.0
        pair = (G @ G.T >= -TAU_HULL_DOT).astype(np.float64)
        U |= (fm.T @ pair @ fm) > 0
    if complete:
        U = _complete(S, tri, cells, passed, U)
    return FriendLists.from_matrix(U.T)


@dataclass(frozen=True)
class FriendReport:
    queries: int
    failures: int
    worst: dict | None

    @property
    def ok(self) -> bool:
        return self.failures == 0


def validate_friends(fl: FriendLists, S, data, queries, backend=None) -> FriendReport:
    """Replay queries: the slab holding each true NN must be a friend of the query's slab.

    ``worst`` describes the failing query whose best friend-reachable point
    is farthest (in squared distance) behind the true NN.
    """
    from .search.brute import BruteForce

    S = _sites(S)
    X = np.ascontiguousarray(data, dtype=np.float64)
    Q = np.ascontiguousarray(queries, dtype=np.float64)
    q_owner = assign(Q, S, backend).labels
    p_owner = assign(X, S, backend).labels
    nn, nn_d2, _ = BruteForce(X).query_batch(Q, backend=backend)
    M = fl.as_matrix()
    bad = np.flatnonzero(~M[q_owner, p_owner[nn]])
    worst = None
    if bad.size:
        gaps = []
        for i in bad.tolist():
            reach = M[q_owner[i], p_owner]
            d2 = np.sum((X[reach] - Q[i]) ** 2, axis=1)
            gaps.append(float(d2.min() - nn_d2[i]) if d2.size else np.inf)
        k = int(np.argmax(gaps))
        i = int(bad[k])
        worst = {"query": i, "query_site": int(q_owner[i]), "nn": int(nn[i]),
                 "nn_site": int(p_owner[nn[i]]), "gap": gaps[k]}
    return FriendReport(int(Q.shape[0]), int(bad.size), worst)
