"""Exact nearest-neighbor structures sharing one query interface."""

from .brute import BruteForce, brute_query
from .kdtree import KdTree, kd_build, kd_query
from .pat import PrincipalAxisTree, pat_build, pat_query, principal_axis
from .qtree import Mode, QuantizationTree, qtree_build, qtree_query, waydown_query
from .stats import STAT_FIELDS, QueryStats, SearchIndex

__all__ = [
    "BruteForce", "brute_query", "KdTree", "kd_build", "kd_query",
    "PrincipalAxisTree", "pat_build", "pat_query", "principal_axis",
    "Mode", "QuantizationTree", "qtree_build", "qtree_query", "waydown_query",
    "STAT_FIELDS", "QueryStats", "SearchIndex",
]
