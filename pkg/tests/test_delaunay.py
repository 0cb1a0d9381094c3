import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnns import delaunay as dl
from qnns.delaunay import OUTSIDE_HULL
from qnns.errors import DegenerateInput, DuplicateSite


def random_sites(n, d, seed):
    return np.random.default_rng(seed).standard_normal((n, d))


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull_vertices_2d(P):
    # monotone chain, independent of the triangulation
    pts = sorted(map(tuple, P))

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower, upper = half(pts), half(reversed(pts))
    return lower[:-1] + upper[:-1]


def test_single_triangle():
    t = dl.build([[0, 0], [1, 0], [0, 1]])
    assert len(t.cell_ids) == 1
    assert len(t.hull_facets()) == 3
    assert t.locate([1 / 3, 1 / 3]) == t.cell_ids[0]
    assert t.locate([50, 50]) == OUTSIDE_HULL


def test_square_with_center():
    t = dl.build([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]])
    assert len(t.cell_ids) == 4
    assert all(4 in row for row in t.verts[t.cell_ids].tolist())
    assert t.empty_sphere_violations() == []


@pytest.mark.parametrize("d,n", [(2, 50), (3, 40), (4, 30), (5, 20)])
def test_empty_sphere_and_adjacency(d, n):
    t = dl.build(random_sites(n, d, d))
    assert t.adjacency_errors() == []
    assert t.empty_sphere_violations() == []
    assert t.local_delaunay_violations() == []
    # each internal facet is shared by two cells, hull facets by one
    facets = {}
    for c in t.cell_ids.tolist():
        row = t.verts[c].tolist()
        for k in range(d + 1):
            key = tuple(sorted(row[:k] + row[k + 1:]))
            facets[key] = facets.get(key, 0) + 1
    assert sum(1 for v in facets.values() if v == 1) == len(t.hull_facets())
    assert max(facets.values()) == 2


def test_matches_scipy_cell_set():
    scipy_spatial = pytest.importorskip("scipy.spatial")
    for d, n in [(2, 60), (3, 40), (5, 25)]:
        X = random_sites(n, d, 10 + d)
        ref = {tuple(sorted(s)) for s in scipy_spatial.Delaunay(X).simplices}
        assert dl.build(X).cell_set() == ref


def test_euler_count_2d():
    for seed in range(10):
        X = random_sites(35, 2, seed)
        t = dl.build(X)
        h = len(hull_vertices_2d(X))
        assert len(t.cell_ids) == 2 * len(X) - h - 2


def test_positive_orientation_and_cached_spheres():
    t = dl.build(random_sites(30, 3, 1))
    for c in t.cell_ids.tolist():
        P = t.points[t.verts[c]]
        assert np.linalg.det(P[1:] - P[0]) > 0
        r2 = np.sum((P - t.centers[c]) ** 2, axis=1)
        assert np.allclose(r2, t.radius2[c], rtol=1e-9)


def test_permutation_invariance():
    X = random_sites(40, 3, 2)
    assert dl.build(X, rng_seed=0).cell_set() == dl.build(X, rng_seed=99).cell_set()
    perm = np.random.default_rng(0).permutation(len(X))
    relabeled = {tuple(sorted(perm[list(c)])) for c in dl.build(X[perm]).cell_set()}
    assert relabeled == dl.build(X).cell_set()


def test_locate_containment():
    X = random_sites(50, 2, 3)
    t = dl.build(X)
    rng = np.random.default_rng(4)
    for x in rng.standard_normal((200, 2)):
        c = dl.locate(t, x, rng_seed=int(rng.integers(1000)))
        inside = any(np.all(t.barycentric(k, x) >= -1e-9) for k in t.cell_ids)
        if c == OUTSIDE_HULL:
            assert not inside
        else:
            assert np.all(t.barycentric(c, x) >= -1e-9)


def test_incircle_list_matches_brute_force():
    X = random_sites(40, 3, 5)
    t = dl.build(X)
    rng = np.random.default_rng(6)
    for x in rng.standard_normal((100, 3)) * 1.5:
        brute = {c for c in t.cell_ids.tolist()
                 if np.sum((t.centers[c] - x) ** 2) <= t.radius2[c] * (1 + 1e-9)}
        assert dl.incircle_list(t, x) == brute
    far = np.array([1e3, 1e3, 1e3])
    assert dl.incircle_list(t, far) == set()


def test_insert_cases():
    t = dl.build([[0, 0], [1, 0], [0, 1]])
    dl.insert(t, [0.25, 0.25])
    assert len(t.cell_ids) == 3 and t.n_sites == 4
    t = dl.build([[0, 0], [1, 0], [0, 1]])
    dl.insert(t, [0.5, -10.0])  # sees only the bottom edge, outside the circumcircle
    assert len(t.cell_ids) == 2
    assert t.adjacency_errors() == [] and t.empty_sphere_violations() == []
    with pytest.raises(DuplicateSite):
        dl.insert(t, [0, 0])


def test_incremental_inserts_stay_delaunay():
    X = random_sites(30, 2, 7)
    t = dl.build(X[:5])
    for x in X[5:]:
        dl.insert(t, x)
    assert t.empty_sphere_violations() == [] and t.adjacency_errors() == []
    assert t.cell_set() == dl.build(X).cell_set()


def test_pseudo_insert_examples():
    t = dl.build([[0, 0], [1, 0], [0, 1]])
    assert dl.pseudo_insert(t, [0.3, 0.3]) == {0, 1, 2}
    assert dl.pseudo_insert(t, [0.5, -10.0]) == {0, 1}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_pseudo_insert_equals_insert_on_copy(seed, d):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((int(rng.integers(d + 2, 40)), d))
    t = dl.build(X, rng_seed=seed)
    x = rng.standard_normal(d) * 2.0
    before = t.cells_snapshot() if hasattr(t, "cells_snapshot") else t.verts[t.cell_ids].copy()
    pi = dl.pseudo_insert(t, x)
    assert np.array_equal(t.verts[t.cell_ids], before)
    c = t.copy()
    j = c.insert(x)
    assert pi == c.neighbors_of(j)
    assert np.array_equal(t.pseudo_insert_batch(x[None, :])[0].nonzero()[0], sorted(pi))


def test_hull_normals():
    t = dl.build([[0, 0], [1, 0], [0, 1]])
    normals = {tuple(sorted(t.facet_sites(c, k).tolist())): u for (c, k), u in dl.hull_face_normals(t)}
    assert np.allclose(normals[(0, 1)], [0, -1])
    X = random_sites(40, 2, 8)
    t = dl.build(X)
    centroid = X.mean(axis=0)
    hull = hull_vertices_2d(X)
    edges = {tuple(sorted((hull[i], hull[(i + 1) % len(hull)]))) for i in range(len(hull))}
    for (c, k), u in t.hull_face_normals():
        fs = t.facet_sites(c, k)
        assert abs(np.linalg.norm(u) - 1) < 1e-12
        assert np.dot(centroid - X[fs[0]], u) < 0
        assert tuple(sorted((tuple(X[fs[0]]), tuple(X[fs[1]])))) in edges
    assert len(t.hull_facets()) == len(edges)


def test_dump_format_and_compaction():
    t = dl.build(random_sites(12, 2, 9))
    lines = t.dump().strip().splitlines()
    assert len(lines) == len(t.cell_ids)
    for i, line in enumerate(lines):
        cid, rest = line.split(":", 1)
        sites, nbrs = rest.split("|")
        assert int(cid) == i
        assert len(sites.split()) == 3 and len(nbrs.split()) == 3
    dl.insert(t, [5.0, 5.0])
    t.compact()
    assert np.array_equal(t.cell_ids, np.arange(len(t.cell_ids)))
    assert t.adjacency_errors() == []


def test_build_errors():
    with pytest.raises(DegenerateInput):
        dl.build([[0, 0], [1, 1]])
    with pytest.raises(DegenerateInput):
        dl.build([[0, 0], [1, 1], [2, 2], [3, 3]])
    with pytest.raises(DuplicateSite):
        dl.build([[0, 0], [1, 0], [0, 1], [1, 0]])
