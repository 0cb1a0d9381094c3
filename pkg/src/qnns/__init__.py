"""Exact nearest-neighbor search with quantization trees.

Brute force with partial distances, Kd-tree, principal axis tree and the
quantization tree (crude or with friend lists), plus the supporting
geometry: incremental Delaunay triangulation and Lloyd quantization.
"""

from .delaunay import Triangulation
from .errors import (DegenerateInput, DegenerateSimplex, DimensionMismatch, DuplicateSite,
                     GeneralPositionViolation, InfeasibleLevel, QnnsError)
from .friends import FriendLists, friends_fast, friends_first, validate_friends
from .quantization import Codebook, lloyd, snap_to_dataset
from .search import (BruteForce, KdTree, PrincipalAxisTree, QuantizationTree, QueryStats,
                     brute_query, kd_build, kd_query, pat_build, pat_query, qtree_build,
                     qtree_query, waydown_query)

__version__ = "0.1.0"
