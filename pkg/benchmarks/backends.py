"""Compare the compiled (numba) and pure-numpy query backends.

    python benchmarks/backends.py --n 5000 --dim 2 --queries 2000

The numpy backend runs the tree searches as interpreted loops, so it is far
slower there; both backends must return identical answers.
"""

import argparse
import time

import numpy as np

from qnns import kernels
from qnns.bench import BenchConfig, build_index
from qnns.datasets import gen_dataset, gen_queries


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--queries", type=int, default=2000)
    p.add_argument("--method", action="append",
                   default=None, help="repeatable; default brute, kd, pat, qtree-crude")
    args = p.parse_args(argv)
    if not kernels.numba_available():
        raise SystemExit("numba is not installed; nothing to compare")
    methods = args.method or ["brute", "kd", "pat", "qtree-crude"]
    X = gen_dataset("gaussian", args.n, args.dim)
    Q = gen_queries("gaussian", args.queries, args.dim)
    print(f"{'method':<14}{'numba qps':>14}{'numpy qps':>14}{'speedup':>10}  same")
    for m in methods:
        index = build_index(m, X, BenchConfig())
        index.query_batch(Q[:10], backend="numba")
        rows = {}
        for backend in ("numba", "numpy"):
            t0 = time.perf_counter()
            rows[backend] = index.query_batch(Q, backend=backend)
            rows[backend + "_s"] = time.perf_counter() - t0
        same = all(np.array_equal(a, b) for a, b in zip(rows["numba"], rows["numpy"]))
        fast, slow = len(Q) / rows["numba_s"], len(Q) / rows["numpy_s"]
        print(f"{m:<14}{fast:>14.0f}{slow:>14.0f}{fast / slow:>9.0f}x  {same}")


if __name__ == "__main__":
    main()
