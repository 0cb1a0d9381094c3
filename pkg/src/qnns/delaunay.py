"""Incremental Delaunay triangulation in general dimension.

The triangulation is a simplex graph: cell ``c`` stores ``d+1`` site ids
in ``verts[c]`` and, in ``nbrs[c, k]``, the cell across the facet obtained
by deleting ``verts[c, k]`` (``-1`` on the convex hull). Every alive cell
is positively oriented. Each cell caches its circumsphere and the affine
map giving barycentric coordinates, so walking, in-sphere and visibility
tests are one matrix-vector product each.

Insertion is the classic cavity scheme. With ``K`` the cells whose
circumsphere contains the new site ``x`` and ``V`` the hull facets visible
from ``x``, the new cells are cones from ``x`` over

* facets of ``K`` cells whose neighbor is outside ``K``,
* hull facets of ``K`` cells that ``x`` does not see,
* visible hull facets of cells outside ``K``.

An inside-hull ``x`` has ``V`` empty; an outside ``x`` hitting no sphere has
``K`` empty. Deleted cells stay allocated with ``alive = False`` until
:meth:`Triangulation.compact`.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import DegenerateInput, DuplicateSite, GeneralPositionViolation
from .geometry import TAU_ORIENT, TAU_SPHERE

OUTSIDE_HULL = -1
TAU_BARY = 1e-12


class Triangulation:
    def __init__(self, points, capacity: int = 64):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        self.dim = d = pts.shape[1]
        self.points = np.array(pts, copy=True)
        self.present = np.zeros(len(pts), dtype=bool)
        self.verts = np.empty((capacity, d + 1), dtype=np.int64)
        self.nbrs = np.full((capacity, d + 1), -1, dtype=np.int64)
        self.centers = np.empty((capacity, d))
        self.radius2 = np.empty(capacity)
        self.binv = np.empty((capacity, d, d))
        self.alive = np.zeros(capacity, dtype=bool)
        self.n_alloc = 0

    # ------------------------------------------------------------------ storage

    def _reserve(self, extra: int) -> None:
        need = self.n_alloc + extra
        cap = self.verts.shape[0]
        if need <= cap:
            return
        while cap < need:
            cap *= 2
        d = self.dim
        for name, fill, shape in (("verts", 0, (d + 1,)), ("nbrs", -1, (d + 1,)),
                                  ("centers", 0.0, (d,)), ("radius2", 0.0, ()),
                                  ("binv", 0.0, (d, d)), ("alive", False, ())):
            old = getattr(self, name)
            new = np.full((cap,) + shape, fill, dtype=old.dtype)
            new[: self.n_alloc] = old[: self.n_alloc]
            setattr(self, name, new)

    def _add_site(self, x) -> int:
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        if x.shape[1] != self.dim:
            raise ValueError("dimension mismatch")
        self.points = np.vstack([self.points, x])
        self.present = np.append(self.present, False)
        return len(self.points) - 1

    def copy(self) -> "Triangulation":
        t = Triangulation.__new__(Triangulation)
        t.dim = self.dim
        for name in ("points", "present", "verts", "nbrs", "centers", "radius2", "binv", "alive"):
            setattr(t, name, getattr(self, name).copy())
        t.n_alloc = self.n_alloc
        return t

    def compact(self) -> None:
        """Drop dead cells and renumber the alive ones contiguously."""
        ids = np.flatnonzero(self.alive[: self.n_alloc])
        remap = np.full(self.n_alloc + 1, -1, dtype=np.int64)  # slot -1 maps to -1
        remap[ids] = np.arange(ids.size)
        for name in ("verts", "centers", "radius2", "binv"):
            setattr(self, name, getattr(self, name)[ids].copy())
        self.nbrs = remap[self.nbrs[ids]]
        self.alive = np.ones(ids.size, dtype=bool)
        self.n_alloc = ids.size

    # ---------------------------------------------------------------- geometry

    @property
    def cell_ids(self) -> np.ndarray:
        return np.flatnonzero(self.alive[: self.n_alloc])

    @property
    def n_sites(self) -> int:
        return int(self.present.sum())

    def site_ids(self) -> np.ndarray:
        return np.flatnonzero(self.present)

    def _geometry(self, vert_lists: np.ndarray):
        """Orientation sign, circumspheres and barycentric maps for new cells."""
        P = self.points[vert_lists]
        T = P[:, 1:, :] - P[:, :1, :]
        det = np.linalg.det(T)
        ext = (P.max(axis=1) - P.min(axis=1)).max(axis=1)
        degenerate = np.abs(det) <= TAU_ORIENT * ext ** self.dim
        if degenerate.any():
            raise GeneralPositionViolation("degenerate simplex during triangulation")
        Tinv = np.linalg.inv(T)
        rhs = 0.5 * np.einsum("mij,mij->mi", T, T)
        off = np.einsum("mij,mj->mi", Tinv, rhs)
        return det, P[:, 0, :] + off, np.einsum("mi,mi->m", off, off), Tinv.transpose(0, 2, 1)

    def barycentric(self, c: int, x) -> np.ndarray:
        lam = self.binv[c] @ (x - self.points[self.verts[c, 0]])
        return np.concatenate(([1.0 - lam.sum()], lam))

    def _barycentric_all(self, cells, x) -> np.ndarray:
        rel = x - self.points[self.verts[cells, 0]]
        lam = np.einsum("mij,mj->mi", self.binv[cells], rel)
        return np.concatenate((1.0 - lam.sum(axis=1, keepdims=True), lam), axis=1)

    def conflict_mask(self, x) -> np.ndarray:
        """Alive cells whose circumsphere holds ``x`` (INSIDE or ON), over all allocated ids."""
        n = self.n_alloc
        d2 = np.sum((self.centers[:n] - x) ** 2, axis=1)
        return self.alive[:n] & (d2 <= self.radius2[:n] * (1.0 + TAU_SPHERE))

    def hull_facets(self) -> list[tuple[int, int]]:
        ids = self.cell_ids
        cells, ks = np.nonzero(self.nbrs[ids] < 0)
        return [(int(ids[c]), int(k)) for c, k in zip(cells, ks)]

    def facet_sites(self, c: int, k: int) -> np.ndarray:
        return np.delete(self.verts[c], k)

    def visible_facets(self, x) -> list[tuple[int, int]]:
        ids = self.cell_ids
        hull = ids[(self.nbrs[ids] < 0).any(axis=1)]
        if hull.size == 0:
            return []
        lam = self._barycentric_all(hull, x)
        vis = (self.nbrs[hull] < 0) & (lam < -TAU_BARY)
        cells, ks = np.nonzero(vis)
        return [(int(hull[c]), int(k)) for c, k in zip(cells, ks)]

    # -------------------------------------------------------------- operations

    def locate(self, x, rng: np.random.Generator | None = None) -> int:
        """Cell whose closure contains ``x``, or ``OUTSIDE_HULL``.

        Stochastic walk from a random alive cell through a randomly chosen
        violated facet; falls back to a full scan after ``10 * cells`` steps.
        """
        x = np.asarray(x, dtype=np.float64)
        rng = rng if rng is not None else np.random.default_rng(0)
        ids = self.cell_ids
        c = int(ids[rng.integers(ids.size)])
        for _ in range(10 * ids.size):
            lam = self.barycentric(c, x)
            bad = np.flatnonzero(lam < -TAU_BARY)
            if bad.size == 0:
                return c
            k = int(bad[rng.integers(bad.size)]) if bad.size > 1 else int(bad[0])
            nxt = int(self.nbrs[c, k])
            if nxt < 0:
                return OUTSIDE_HULL
            c = nxt
        lam = self._barycentric_all(ids, x)
        inside = np.flatnonzero((lam >= -TAU_BARY).all(axis=1))
        return int(ids[inside[0]]) if inside.size else OUTSIDE_HULL

    def _cavity(self, x, loc: int) -> set[int]:
        mask = self.conflict_mask(x)
        if loc != OUTSIDE_HULL:
            seeds = [loc]
            mask[loc] = True
        else:
            ids = self.cell_ids
            hull = ids[(self.nbrs[ids] < 0).any(axis=1)]
            seeds = hull[mask[hull]].tolist()
        seen = set(seeds)
        todo = deque(seeds)
        while todo:
            c = todo.popleft()
            for nb in self.nbrs[c].tolist():
                if nb >= 0 and nb not in seen and mask[nb]:
                    seen.add(nb)
                    todo.append(nb)
        return seen

    def incircle_list(self, x, rng=None) -> set[int]:
        x = np.asarray(x, dtype=np.float64)
        return self._cavity(x, self.locate(x, rng))

    def _check_new_site(self, x) -> None:
        pts = self.points[self.present]
        if np.any(np.all(pts == x, axis=1)):
            raise DuplicateSite("site already present")

    def pseudo_insert(self, x, rng=None) -> set[int]:
        """Sites that would become Delaunay neighbors of ``x``; no mutation."""
        x = np.asarray(x, dtype=np.float64)
        self._check_new_site(x)
        loc = self.locate(x, rng)
        cavity = self._cavity(x, loc)
        out = set(self.verts[list(cavity)].ravel().tolist()) if cavity else set()
        if loc == OUTSIDE_HULL:
            for c, k in self.visible_facets(x):
                out.update(self.facet_sites(c, k).tolist())
        return out

    def insert(self, x, rng=None) -> int:
        """Insert a new point, returning its site id."""
        x = np.asarray(x, dtype=np.float64)
        self._check_new_site(x)
        i = self._add_site(x)
        try:
            self._insert_index(i, rng)
        except Exception:
            self.points = self.points[:-1]
            self.present = self.present[:-1]
            raise
        return i

    def _insert_index(self, i: int, rng=None) -> None:
        x = self.points[i]
        loc = self.locate(x, rng)
        cavity = self._cavity(x, loc)
        visible = self.visible_facets(x) if loc == OUTSIDE_HULL else []
        vis_set = set(visible)
        if not cavity and not visible:
            raise GeneralPositionViolation("new site neither in a circumsphere nor outside the hull")

        # cone facets: (source cell, facet slot, outside neighbor)
        cones = []
        for c in cavity:
            for k, nb in enumerate(self.nbrs[c].tolist()):
                if nb < 0:
                    if (c, k) not in vis_set:
                        cones.append((c, k, -1))
                elif nb not in cavity:
                    cones.append((c, k, nb))
        for c, k in visible:
            if c not in cavity:
                cones.append((c, k, c))
        if not cones:
            raise GeneralPositionViolation("empty cavity boundary")

        d = self.dim
        m = len(cones)
        new_verts = np.empty((m, d + 1), dtype=np.int64)
        for r, (c, k, _) in enumerate(cones):
            new_verts[r, 0] = i
            new_verts[r, 1:] = np.delete(self.verts[c], k)
        det = np.linalg.det(self.points[new_verts[:, 1:]] - self.points[new_verts[:, :1]])
        flip = det < 0
        if flip.any():
            a, b = (d - 1, d) if d >= 2 else (0, 1)
            new_verts[flip, a], new_verts[flip, b] = new_verts[flip, b], new_verts[flip, a].copy()
        _, centers, r2, binv = self._geometry(new_verts)

        base = self.n_alloc
        new_nbrs = np.full((m, d + 1), -1, dtype=np.int64)
        ridges: dict[tuple, tuple[int, int]] = {}
        for r in range(m):
            row = new_verts[r].tolist()
            for j, v in enumerate(row):
                if v == i:
                    new_nbrs[r, j] = cones[r][2]
                    continue
                key = tuple(sorted(row[:j] + row[j + 1:]))
                other = ridges.pop(key, None)
                if other is None:
                    ridges[key] = (r, j)
                else:
                    if new_nbrs[other[0], other[1]] != -1:
                        raise GeneralPositionViolation("non-manifold ridge in cavity")
                    new_nbrs[r, j] = base + other[0]
                    new_nbrs[other[0], other[1]] = base + r

        # commit
        self._reserve(m)
        sl = slice(base, base + m)
        self.verts[sl] = new_verts
        self.nbrs[sl] = new_nbrs
        self.centers[sl] = centers
        self.radius2[sl] = r2
        self.binv[sl] = binv
        self.alive[sl] = True
        self.n_alloc = base + m
        for c in cavity:
            self.alive[c] = False
        for r, (c, k, out) in enumerate(cones):
            if out < 0:
                continue
            if out == c:  # visible hull facet of a kept cell
                self.nbrs[c, k] = base + r
            else:
                slot = np.flatnonzero(self.nbrs[out] == c)
                self.nbrs[out, slot[0]] = base + r
        self.present[i] = True

    # ------------------------------------------------------------- inspection

    def hull_face_normals(self) -> list[tuple[tuple[int, int], np.ndarray]]:
        """Outward unit normal of every hull facet."""
        out = []
        for c, k in self.hull_facets():
            g = self.binv[c]
            grad = -g.sum(axis=0) if k == 0 else g[k - 1]
            out.append(((c, k), -grad / np.linalg.norm(grad)))
        return out

    def delaunay_edges(self) -> set[tuple[int, int]]:
        edges = set()
        for row in self.verts[self.cell_ids].tolist():
            for a in range(len(row)):
                for b in range(a + 1, len(row)):
                    u, v = row[a], row[b]
                    edges.add((u, v) if u < v else (v, u))
        return edges

    def neighbors_of(self, site: int) -> set[int]:
        star = self.verts[self.cell_ids]
        rows = star[(star == site).any(axis=1)]
        return set(rows.ravel().tolist()) - {site}

    def cell_set(self) -> set[tuple[int, ...]]:
        return {tuple(sorted(row)) for row in self.verts[self.cell_ids].tolist()}

    def dump(self) -> str:
        """One alive cell per line: ``cell_id: site_ids | neighbor_ids``."""
        lines = []
        for c in self.cell_ids.tolist():
            sites = " ".join(map(str, self.verts[c].tolist()))
            nb = " ".join("-" if v < 0 else str(v) for v in self.nbrs[c].tolist())
            lines.append(f"{c}: {sites} | {nb}")
        return "\n".join(lines) + "\n"

    def empty_sphere_violations(self) -> list[tuple[int, int]]:
        """Brute force: (cell, site) pairs with the site strictly inside the circumsphere."""
        bad = []
        sites = self.site_ids()
        P = self.points[sites]
        for c in self.cell_ids.tolist():
            d2 = np.sum((P - self.centers[c]) ** 2, axis=1)
            inside = d2 < self.radius2[c] * (1.0 - TAU_SPHERE)
            own = np.isin(sites, self.verts[c])
            bad.extend((c, int(s)) for s in sites[inside & ~own])
        return bad

    def local_delaunay_violations(self) -> list[tuple[int, int]]:
        """(cell, neighbor) pairs whose opposite vertex is strictly inside the circumsphere."""
        bad = []
        for c in self.cell_ids.tolist():
            for nb in self.nbrs[c].tolist():
                if nb < 0:
                    continue
                opp = set(self.verts[nb].tolist()) - set(self.verts[c].tolist())
                v = opp.pop()
                d2 = float(np.sum((self.points[v] - self.centers[c]) ** 2))
                if d2 < self.radius2[c] * (1.0 - TAU_SPHERE):
                    bad.append((c, nb))
        return bad

    def adjacency_errors(self) -> list[str]:
        errs = []
        for c in self.cell_ids.tolist():
            mine = self.verts[c].tolist()
            for k, nb in enumerate(self.nbrs[c].tolist()):
                if nb < 0:
                    continue
                if not self.alive[nb]:
                    errs.append(f"{c}->{nb} dead")
                    continue
                facet = set(mine[:k] + mine[k + 1:])
                back = np.flatnonzero(self.nbrs[nb] == c)
                if back.size != 1:
                    errs.append(f"{c}->{nb} not reciprocal")
                    continue
                theirs = self.verts[nb].tolist()
                j = int(back[0])
                if set(theirs[:j] + theirs[j + 1:]) != facet:
                    errs.append(f"{c}<->{nb} facet mismatch")
        return errs

    # --------------------------------------------------------- batch queries

    def pseudo_insert_batch(self, P) -> np.ndarray:
        """Boolean ``(len(P), n_points)`` matrix of pseudo-insertion sets.

        Brute-force equivalent of :meth:`pseudo_insert` for many points:
        every cell whose closed circumsphere holds the point contributes its
        sites, plus visible hull facets for points outside the hull.
        """
        P = np.ascontiguousarray(P, dtype=np.float64)
        ids = self.cell_ids
        verts = self.verts[ids]
        n_pts = len(self.points)
        member = np.zeros((ids.size, n_pts), dtype=np.float64)
        np.put_along_axis(member, verts, 1.0, axis=1)
        hull_c, hull_k = np.nonzero(self.nbrs[ids] < 0)
        fmember = member[hull_c].copy()
        fmember[np.arange(hull_c.size), verts[hull_c, hull_k]] = 0.0
        # facet k of cell c is visible from p iff lambda_k(p) < 0
        g = self.binv[ids[hull_c]]
        grads = np.where((hull_k == 0)[:, None], -g.sum(axis=1), g[np.arange(hull_c.size), np.maximum(hull_k - 1, 0)])
        p0 = self.points[verts[hull_c, 0]]
        is0 = (hull_k == 0).astype(np.float64)
        out = np.zeros((P.shape[0], n_pts), dtype=bool)
        C, R2 = self.centers[ids], self.radius2[ids] * (1.0 + TAU_SPHERE)
        chunk = max(1, 4_000_000 // max(1, ids.size * self.dim, hull_c.size * self.dim))
        for s in range(0, P.shape[0], chunk):
            Pc = P[s:s + chunk]
            d2 = np.sum((Pc[:, None, :] - C[None, :, :]) ** 2, axis=2)
            acc = (d2 <= R2[None, :]).astype(np.float64) @ member
            if hull_c.size:
                lam = is0[None, :] + np.einsum("fj,pfj->pf", grads, Pc[:, None, :] - p0[None, :, :])
                acc += (lam < -TAU_BARY).astype(np.float64) @ fmember
            out[s:s + chunk] = acc > 0
        return out


def _initial_simplex(X: np.ndarray, order: np.ndarray) -> list[int]:
    d = X.shape[1]
    scale = float(np.max(X.max(axis=0) - X.min(axis=0))) or 1.0
    chosen = [int(order[0])]
    for i in order[1:].tolist():
        trial = chosen + [i]
        E = X[trial[1:]] - X[trial[0]]
        sv = np.linalg.svd(E, compute_uv=False)
        if sv.min() > 1e-10 * scale:
            chosen = trial
            if len(chosen) == d + 1:
                break
    if len(chosen) < d + 1:
        raise DegenerateInput(f"need {d + 1} affinely independent sites")
    return chosen


def build(sites, rng_seed: int | np.random.Generator = 0) -> Triangulation:
    """Delaunay triangulation of ``sites`` by randomized incremental insertion.

    Site ids are row indices of ``sites``. Deterministic for a fixed seed.
    """
    X = np.ascontiguousarray(sites, dtype=np.float64)
    n, d = X.shape
    if n < d + 1:
        raise DegenerateInput(f"need at least {d + 1} sites in dimension {d}")
    if np.unique(X, axis=0).shape[0] != n:
        raise DuplicateSite("sites must be pairwise distinct")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    order = rng.permutation(n)
    first = _initial_simplex(X, order)
    t = Triangulation(X, capacity=max(16, 4 * n))
    verts = np.array([first], dtype=np.int64)
    det = np.linalg.det(X[verts[:, 1:]] - X[verts[:, :1]])
    if det[0] < 0:
        verts[0, [0, 1]] = verts[0, [1, 0]]
    _, centers, r2, binv = t._geometry(verts)
    t._reserve(1)
    t.verts[0], t.centers[0], t.radius2[0], t.binv[0] = verts[0], centers[0], r2[0], binv[0]
    t.alive[0] = True
    t.n_alloc = 1
    t.present[first] = True
    placed = set(first)
    for i in order.tolist():
        if i not in placed:
            t._insert_index(i, rng)
    t.compact()
    return t


def locate(t: Triangulation, x, rng_seed: int = 0) -> int:
    return t.locate(x, np.random.default_rng(rng_seed))


def incircle_list(t: Triangulation, x, rng_seed: int = 0) -> set[int]:
    return t.incircle_list(x, np.random.default_rng(rng_seed))


def insert(t: Triangulation, x, rng_seed: int = 0) -> int:
    return t.insert(x, np.random.default_rng(rng_seed))


def pseudo_insert(t: Triangulation, x, rng_seed: int = 0) -> set[int]:
    return t.pseudo_insert(x, np.random.default_rng(rng_seed))


def hull_face_normals(t: Triangulation):
    return t.hull_face_normals()
