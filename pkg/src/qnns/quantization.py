"""Quadratic vector quantization of empirical distributions.

Lloyd's algorithm (k-means) with k-means++ seeding, nearest-neighbor and
centroidal projections, the intraclass/interclass inertia split, and
snapping of a free codebook onto dataset points.

Distortion is always the *mean* squared distance to the assigned site.
Ties between equidistant sites go to the lowest index everywhere.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InfeasibleLevel


class Source(enum.Enum):
    FREE = "free"
    SNAPPED = "snapped"


@dataclass(frozen=True)
class Codebook:
    sites: np.ndarray
    indices: np.ndarray | None = None  # dataset rows, when snapped

    @property
    def source(self) -> Source:
        return Source.FREE if self.indices is None else Source.SNAPPED

    def __len__(self) -> int:
        return self.sites.shape[0]


@dataclass(frozen=True)
class Assignment:
    labels: np.ndarray
    counts: np.ndarray
    dist2: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class InertiaReport:
    variance: float
    intraclass: float
    interclass: float

    @property
    def relative_residual(self) -> float:
        if self.variance == 0.0:
            return abs(self.intraclass + self.interclass)
        return abs(self.variance - self.intraclass - self.interclass) / self.variance


@dataclass(frozen=True)
class LloydResult:
    codebook: Codebook
    assignment: Assignment
    inertia: InertiaReport
    distortions: list[float]
    iterations: int

    def __iter__(self):
        return iter((self.codebook, self.assignment, self.inertia))


def _as_data(data) -> np.ndarray:
    X = np.ascontiguousarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return X


def assign(data, sites, backend=None) -> Assignment:
    X, C = _as_data(data), _as_data(sites)
    lab = np.empty(X.shape[0], dtype=np.int64)
    d2 = np.empty(X.shape[0], dtype=np.float64)
    kernels.get_backend(backend).assign(X, C, lab, d2)
    return Assignment(lab, np.bincount(lab, minlength=C.shape[0]), d2)


def nn_project(cb: Codebook, x) -> tuple[int, float]:
    """Index of and squared distance to the nearest site (lowest index on ties)."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    asn = assign(x, cb.sites)
    return int(asn.labels[0]), float(asn.dist2[0])


def centroids(data, labels, n_cells: int) -> np.ndarray:
    """Cell means; an empty cell gets the zero vector."""
    X = _as_data(data)
    sums = np.zeros((n_cells, X.shape[1]))
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=n_cells)
    out = np.zeros_like(sums)
    full = counts > 0
    out[full] = sums[full] / counts[full, None]
    return out


def inertia(data, asn: Assignment, cb: Codebook | None = None) -> InertiaReport:
    """Huyghens split of the empirical variance for the partition ``asn``.

    Centroids are those of the partition cells, not the codebook sites, so
    ``cb`` only fixes the number of cells.
    """
    X = _as_data(data)
    n_cells = len(cb) if cb is not None else int(asn.labels.max()) + 1
    G = centroids(X, asn.labels, n_cells)
    mean = X.mean(axis=0)
    variance = float(np.mean(np.sum((X - mean) ** 2, axis=1)))
    intra = float(np.mean(np.sum((X - G[asn.labels]) ** 2, axis=1)))
    counts = np.bincount(asn.labels, minlength=n_cells)
    inter = float(np.sum(counts * np.sum((G - mean) ** 2, axis=1)) / X.shape[0])
    return InertiaReport(variance, intra, inter)


def count_distinct(data) -> int:
    return int(np.unique(_as_data(data), axis=0).shape[0])


def kmeanspp_init(data, N: int, rng: np.random.Generator) -> np.ndarray:
    X = _as_data(data)
    chosen = [int(rng.integers(X.shape[0]))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, N):
        total = d2.sum()
        if total <= 0.0:
            raise InfeasibleLevel("not enough distinct points to seed the codebook")
        nxt = int(rng.choice(X.shape[0], p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[chosen].copy()


def empty_cell_repair(cb: Codebook, asn: Assignment, data) -> Codebook:
    """Reseed every empty cell at a badly represented data point.

    Points are taken in decreasing order of their squared distance to their
    current site; zero-distance points and coordinates already used are
    skipped, so the new sites are distinct from all existing ones.
    """
    X = _as_data(data)
    empty = np.flatnonzero(asn.counts == 0)
    if empty.size == 0:
        return cb
    sites = cb.sites.copy()
    taken = {row.tobytes() for row in sites}
    order = np.lexsort((np.arange(X.shape[0]), -asn.dist2))
    it = iter(order.tolist())
    for cell in empty.tolist():
        for i in it:
            if asn.dist2[i] <= 0.0:
                continue
            key = X[i].tobytes()
            if key in taken:
                continue
            sites[cell] = X[i]
            taken.add(key)
            break
    return Codebook(sites)


def _repaired(X, cb: Codebook, backend) -> tuple[Codebook, Assignment]:
    asn = assign(X, cb.sites, backend)
    for _ in range(len(cb)):
        if asn.counts.min() > 0:
            break
        cb = empty_cell_repair(cb, asn, X)
        asn = assign(X, cb.sites, backend)
    return cb, asn


def lloyd(data, N: int, max_iters: int = 100, rel_tol: float = 1e-6,
          rng_seed: int | np.random.Generator = 0, backend=None) -> LloydResult:
    """Lloyd iterations from a k-means++ seed.

    Stops when the relative distortion improvement drops below ``rel_tol``
    or after ``max_iters`` centroid steps. A step that would increase the
    distortion (rounding at convergence) is discarded, so the recorded
    distortion sequence is non-increasing.
    """
    X = _as_data(data)
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > X.shape[0] or count_distinct(X) < N:
        raise InfeasibleLevel(f"level {N} exceeds the number of distinct points")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    cb, asn = _repaired(X, Codebook(kmeanspp_init(X, N, rng)), backend)
    D = float(asn.dist2.mean())
    history = [D]
    it = 0
    while it < max_iters and D > 0.0:
        it += 1
        new_cb, new_asn = _repaired(X, Codebook(centroids(X, asn.labels, N)), backend)
        Dn = float(new_asn.dist2.mean())
        if Dn > D:
            break
        cb, asn = new_cb, new_asn
        history.append(Dn)
        if D - Dn <= rel_tol * D:
            break
        D = Dn
    return LloydResult(cb, asn, inertia(X, asn, cb), history, it)


def snap_to_dataset(cb: Codebook, data) -> Codebook:
    """Move every site onto a dataset point, keeping the sites distinct.

    Greedy matching: (site, point) pairs are claimed in increasing squared
    distance; a site whose nearest point is already claimed moves on to its
    next-nearest unclaimed point. Points sharing the coordinates of a
    claimed point count as claimed.
    """
    X = _as_data(data)
    S = cb.sites
    N = S.shape[0]
    if N > X.shape[0]:
        raise InfeasibleLevel("more sites than data points")
    D = np.zeros((N, X.shape[0]))
    for k in range(X.shape[1]):
        diff = S[:, k, None] - X[None, :, k]
        D += diff * diff
    ranked = np.argsort(D, axis=1, kind="stable")
    cursor = np.zeros(N, dtype=np.int64)
    heap = [(D[s, ranked[s, 0]], s, int(ranked[s, 0])) for s in range(N)]
    heapq.heapify(heap)
    taken: set[bytes] = set()
    out = np.full(N, -1, dtype=np.int64)
    while heap:
        _, s, i = heapq.heappop(heap)
        key = X[i].tobytes()
        if key not in taken:
            taken.add(key)
            out[s] = i
            continue
        cursor[s] += 1
        if cursor[s] >= X.shape[0]:
            raise InfeasibleLevel("not enough distinct data points to snap onto")
        j = int(ranked[s, cursor[s]])
        heapq.heappush(heap, (D[s, j], s, j))
    return Codebook(X[out].copy(), out)
