from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import kernels

STAT_FIELDS = ("distance_evals", "partial_aborts", "nodes_visited", "hyperplane_tests")


@dataclass
class QueryStats:
    distance_evals: int = 0
    partial_aborts: int = 0
    nodes_visited: int = 0
    hyperplane_tests: int = 0

    @classmethod
    def from_row(cls, row) -> "QueryStats":
        return cls(*(int(v) for v in row))

    def as_row(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in STAT_FIELDS], dtype=np.int64)


class SearchIndex:
    """Common query surface for every exact structure.

    Subclasses implement ``_run(backend, Q, out_idx, out_d2, out_stats)``
    which fills the output buffers for a block of queries.
    """

    data: np.ndarray

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def _check_queries(self, Q) -> np.ndarray:
        Q = np.ascontiguousarray(Q, dtype=np.float64)
        if Q.ndim == 1:
            Q = Q[None, :]
        if Q.shape[1] != self.dim:
            raise ValueError(f"queries have dimension {Q.shape[1]}, index has {self.dim}")
        return Q

    def query_batch(self, Q, backend: str | None = None, threads: int = 1):
        """Exact NN for every row of ``Q``.

        Returns ``(indices, squared distances, stats)`` where ``stats`` is an
        ``(nq, 4)`` int64 array with columns ``STAT_FIELDS``.
        """
        Q = self._check_queries(Q)
        nq = Q.shape[0]
        out_idx = np.empty(nq, dtype=np.int64)
        out_d2 = np.empty(nq, dtype=np.float64)
        out_stats = np.zeros((nq, 4), dtype=np.int64)
        k = kernels.get_backend(backend)
        if threads <= 1 or nq < 2 * threads:
            self._run(k, Q, out_idx, out_d2, out_stats)
        else:
            bounds = np.linspace(0, nq, threads + 1).astype(int)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                jobs = [
                    pool.submit(self._run, k, Q[s:e], out_idx[s:e], out_d2[s:e], out_stats[s:e])
                    for s, e in zip(bounds[:-1], bounds[1:])
                ]
                for job in jobs:
                    job.result()
        return out_idx, out_d2, out_stats

    def query(self, q, backend: str | None = None):
        idx, d2, stats = self.query_batch(q, backend=backend)
        return int(idx[0]), float(d2[0]), QueryStats.from_row(stats[0])

    def _run(self, k, Q, out_idx, out_d2, out_stats):
        raise NotImplementedError
