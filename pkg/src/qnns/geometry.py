"""Dimension-generic Euclidean primitives and geometric predicates.

Everything here works on plain 1-d ``float64`` arrays and is side-effect free.
Predicates use double precision with explicit relative tolerances rather
than exact arithmetic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSimplex, DimensionMismatch

#: relative tolerance of the in-sphere ON band
TAU_SPHERE = 1e-9
#: determinant tolerance, relative to (bounding-box extent) ** d
TAU_ORIENT = 1e-12


class Location(enum.IntEnum):
    INSIDE = -1
    ON = 0
    OUTSIDE = 1


class Orientation(enum.IntEnum):
    NEGATIVE = -1
    DEGENERATE = 0
    POSITIVE = 1


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius2: float

    def __post_init__(self):
        if not self.radius2 >= 0.0:
            raise ValueError("radius2 must be nonnegative")


@dataclass(frozen=True)
class HalfspaceCoeff:
    """Leibniz halfspace H(a, b) with its precomputed ``1 / (2 |a - b|)``."""

    a_index: int
    b_index: int
    inv_2ab: float

    @classmethod
    def between(cls, a_index: int, b_index: int, a, b) -> "HalfspaceCoeff":
        if a_index == b_index:
            raise ValueError("halfspace needs two distinct sites")
        ab2 = squared_distance(a, b)
        if ab2 == 0.0:
            raise ValueError("sites coincide")
        return cls(a_index, b_index, 0.5 / math.sqrt(ab2))


def _as_point(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _check_dims(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionMismatch(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")


def squared_distance(x, y) -> float:
    x, y = _as_point(x), _as_point(y)
    _check_dims(x, y)
    acc = 0.0
    for xi, yi in zip(x.tolist(), y.tolist()):
        diff = xi - yi
        acc += diff * diff
    return acc


def partial_distance(x, y, bound: float) -> float | None:
    """Squared distance with early exit.

    Returns ``None`` (aborted) as soon as the running partial sum reaches
    ``bound``; otherwise the full squared distance, which is then < bound.
    """
    if bound < 0:
        raise ValueError("bound must be nonnegative")
    x, y = _as_point(x), _as_point(y)
    _check_dims(x, y)
    acc = 0.0
    for xi, yi in zip(x.tolist(), y.tolist()):
        diff = xi - yi
        acc += diff * diff
        if acc >= bound:
            return None
    return acc


def leibniz_margin(q, qa2: float, qb2: float, h: HalfspaceCoeff) -> float:
    """Signed distance from ``q`` to the bisector of (a, b); positive on a's side.

    ``q`` is not used numerically: the margin only needs the two cached
    squared distances, which is the point of the formula.
    """
    return (qb2 - qa2) * h.inv_2ab


def _extent(pts: np.ndarray) -> float:
    return float(np.max(pts.max(axis=0) - pts.min(axis=0)))


def _edge_matrix(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] != pts.shape[1] + 1:
        raise DimensionMismatch("expected d+1 points in dimension d")
    return pts


def orientation(points) -> Orientation:
    pts = _edge_matrix(points)
    d = pts.shape[1]
    det = float(np.linalg.det(pts[1:] - pts[0]))
    scale = _extent(pts)
    if scale == 0.0 or abs(det) <= TAU_ORIENT * scale**d:
        return Orientation.DEGENERATE
    return Orientation.POSITIVE if det > 0 else Orientation.NEGATIVE


def circumsphere(points) -> Sphere:
    """Sphere through d+1 affinely independent points.

    Solves ``<c - p0, pi - p0> = |pi - p0|^2 / 2`` for the center.
    """
    pts = _edge_matrix(points)
    if orientation(pts) is Orientation.DEGENERATE:
        raise DegenerateSimplex("simplex is degenerate")
    edges = pts[1:] - pts[0]
    rhs = 0.5 * np.einsum("ij,ij->i", edges, edges)
    try:
        offset = np.linalg.solve(edges, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSimplex("singular circumsphere system") from exc
    return Sphere(pts[0] + offset, float(offset @ offset))


def classify_sphere(dist2: float, radius2: float) -> Location:
    band = TAU_SPHERE * radius2
    if dist2 < radius2 - band:
        return Location.INSIDE
    if dist2 > radius2 + band:
        return Location.OUTSIDE
    return Location.ON


def in_sphere(s: Sphere, x) -> Location:
    return classify_sphere(squared_distance(s.center, x), s.radius2)


def barycentric(points, x) -> np.ndarray:
    """Barycentric coordinates of ``x`` in the simplex spanned by ``points``."""
    pts = _edge_matrix(points)
    lam = np.linalg.solve((pts[1:] - pts[0]).T, _as_point(x) - pts[0])
    return np.concatenate(([1.0 - lam.sum()], lam))
