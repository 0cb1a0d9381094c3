"""Linear scan with partial distance search."""

import numpy as np

from .stats import SearchIndex


class BruteForce(SearchIndex):
    def __init__(self, data):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] == 0:
            raise ValueError("data must be a nonempty (n, d) array")

    def _run(self, k, Q, out_idx, out_d2, out_stats):
        k.brute_batch(self.data, Q, out_idx, out_d2, out_stats)


def brute_query(data, q, backend=None):
    """Exact NN of ``q`` in ``data``: ``(index, dist2, QueryStats)``; lowest index wins ties."""
    return BruteForce(data).query(q, backend=backend)
