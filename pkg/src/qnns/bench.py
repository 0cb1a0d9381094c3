"""Benchmark and audit harness behind the ``qnns`` command line."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .datasets import DISTRIBUTIONS, gen_dataset, gen_queries, streams
from .friends import MAX_FAST_DIM
from .search.brute import BruteForce
from .search.kdtree import KdTree
from .search.pat import PrincipalAxisTree
from .search.qtree import QuantizationTree
from .search.stats import STAT_FIELDS

METHODS = ("brute", "kd", "pat", "qtree-crude", "qtree-friends")
WAYDOWN_METHODS = ("pat", "qtree-crude")
DEFAULT_NC = {"pat": 7, "qtree-crude": 35, "qtree-friends": 35}
CSV_COLUMNS = ("method", "n", "d", "n_c", "seconds", "qps", "mean_distance_evals", "mean_nodes_visited")
LABELS = {"brute": "Brute force", "kd": "Kd-tree", "pat": "Principal axis tree",
          "qtree-crude": "Quantization tree", "qtree-friends": "Quantization tree (friends)"}


class ConfigError(ValueError):
    pass


@dataclass
class BenchConfig:
    methods: tuple = METHODS
    dist: str = "gaussian"
    n: int = 5000
    dims: tuple = (2,)
    q_count: int | None = None
    n_c: dict = field(default_factory=dict)
    leaf_cap: dict = field(default_factory=dict)
    seed: int = 0
    jitter: float = 0.0
    out: str | None = None
    fmt: str = "table"
    threads: int = 1
    data: np.ndarray | None = None  # imported dataset replaces generation

    def check(self, allowed=METHODS) -> None:
        bad = [m for m in self.methods if m not in allowed]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; expected a subset of {list(allowed)}")
        if self.dist not in DISTRIBUTIONS:
            raise ConfigError(f"unknown distribution {self.dist!r}")
        if self.n < 1 or self.q_count is not None and self.q_count < 1 or min(self.dims) < 1:
            raise ConfigError("n, d and queries must all be >= 1")
        if "qtree-friends" in self.methods and max(self.dims) > MAX_FAST_DIM:
            raise ConfigError(f"qtree-friends needs d <= {MAX_FAST_DIM}: friend lists are "
                              f"not computed in higher dimension; use qtree-crude instead")

    def nc_for(self, method: str):
        return self.n_c.get(method, DEFAULT_NC.get(method))

    def dataset(self, d: int) -> np.ndarray:
        if self.data is not None:
            return self.data
        return gen_dataset(self.dist, self.n, d, self.seed, self.jitter)

    def queries(self, d: int, count: int) -> np.ndarray:
        return gen_queries(self.dist, count, d, self.seed)


@dataclass
class MethodResult:
    method: str
    n: int
    d: int
    n_c: int | None
    build_seconds: float
    seconds: float
    qps: float
    mean_stats: dict
    failures: int = 0
    failed_queries: list = field(default_factory=list)

    def csv_row(self) -> dict:
        return {"method": self.method, "n": self.n, "d": self.d,
                "n_c": "" if self.n_c is None else self.n_c,
                "seconds": f"{self.seconds:.6f}", "qps": f"{self.qps:.1f}",
                "mean_distance_evals": f"{self.mean_stats['distance_evals']:.3f}",
                "mean_nodes_visited": f"{self.mean_stats['nodes_visited']:.3f}"}


@dataclass
class BenchReport:
    config: BenchConfig
    results: list

    @property
    def failures(self) -> int:
        return sum(r.failures for r in self.results)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.results:
            w.writerow(r.csv_row())
        return buf.getvalue()

    def to_table(self, value: str = "seconds") -> str:
        """Methods as rows, dimensions as columns."""
        dims = sorted({r.d for r in self.results})
        methods = [m for m in METHODS if any(r.method == m for r in self.results)]
        cell = {(r.method, r.d): r for r in self.results}
        head = [""] + [f"d = {d}" for d in dims]
        rows = [head]
        for m in methods:
            row = [LABELS[m]]
            for d in dims:
                r = cell.get((m, d))
                row.append("-" if r is None else (f"{r.seconds:.3f}s" if value == "seconds" else f"{getattr(r, value):.0f}"))
            rows.append(row)
        width = [max(len(r[j]) for r in rows) for j in range(len(head))]
        fmt = lambda r: "| " + " | ".join(v.ljust(w) for v, w in zip(r, width)) + " |"
        sep = "|" + "|".join("-" * (w + 2) for w in width) + "|"
        return "\n".join([fmt(rows[0]), sep] + [fmt(r) for r in rows[1:]]) + "\n"

    def render(self) -> str:
        return self.to_csv() if self.config.fmt == "csv" else self.to_table()


def build_index(method: str, X: np.ndarray, cfg: BenchConfig):
    nc, lc = cfg.nc_for(method), cfg.leaf_cap.get(method)
    rng = streams(cfg.seed)["lloyd"]
    if method == "brute":
        return BruteForce(X)
    if method == "kd":
        return KdTree(X, leaf_cap=lc or 2)
    if method == "pat":
        return PrincipalAxisTree(X, n_c=nc, leaf_cap=lc)
    if method in ("qtree-crude", "qtree-friends"):
        mode = "friends" if method == "qtree-friends" else "crude"
        return QuantizationTree(X, n_c=nc, leaf_cap=lc, mode=mode, rng_seed=rng)
    raise ConfigError(f"unknown method {method!r}")


def _mean_stats(stats: np.ndarray) -> dict:
    return {f: float(stats[:, j].mean()) for j, f in enumerate(STAT_FIELDS)}


def _run(cfg: BenchConfig, q_default: int, validate: bool, warmup: bool) -> BenchReport:
    results = []
    count = cfg.q_count or q_default
    for d in cfg.dims:
        X = cfg.dataset(d)
        d = X.shape[1]
        Q = cfg.queries(d, count)
        oracle = BruteForce(X).query_batch(Q)[:2] if validate else None
        for m in cfg.methods:
            t0 = time.perf_counter()
            index = build_index(m, X, cfg)
            built = time.perf_counter() - t0
            if warmup:
                index.query_batch(Q[: min(len(Q), 1000)], threads=cfg.threads)
            t0 = time.perf_counter()
            idx, d2, stats = index.query_batch(Q, threads=cfg.threads)
            secs = time.perf_counter() - t0
            res = MethodResult(m, X.shape[0], d, cfg.nc_for(m) if m in DEFAULT_NC else None,
                               built, secs, len(Q) / secs if secs > 0 else float("inf"), _mean_stats(stats))
            if oracle is not None:
                bad = np.flatnonzero((idx != oracle[0]) | (d2 != oracle[1]))
                res.failures = int(bad.size)
                res.failed_queries = [{"query": int(i), "seed": cfg.seed, "dist": cfg.dist,
                                       "n": X.shape[0], "d": d, "got": int(idx[i]),
                                       "expected": int(oracle[0][i])} for i in bad[:20]]
            results.append(res)
    return BenchReport(cfg, results)


def run_validate(cfg: BenchConfig) -> BenchReport:
    """Check every requested method against the brute-force oracle (default 10^4 queries)."""
    cfg.check()
    return _run(cfg, 10_000, validate=True, warmup=False)


def run_bench(cfg: BenchConfig) -> BenchReport:
    """Time every method on fresh queries (default 10^5) after a warm-up pass."""
    cfg.check()
    return _run(cfg, 100_000, validate=False, warmup=True)


@dataclass
class WaydownReport:
    config: BenchConfig
    rates: dict  # (method, d) -> error fraction

    def render(self) -> str:
        lines = ["method,d,n,n_c,error_rate"] if self.config.fmt == "csv" else []
        for (m, d), rate in self.rates.items():
            nc = self.config.n_c.get(m, 7)
            if self.config.fmt == "csv":
                lines.append(f"{m},{d},{self.config.n},{nc},{rate:.6f}")
            else:
                lines.append(f"{LABELS[m]:<20} d = {d}  n_c = {nc}  false results: {100 * rate:.2f}%")
        return "\n".join(lines) + "\n"


def run_waydown(cfg: BenchConfig) -> WaydownReport:
    """Fraction of queries whose single-leaf descent misses the true NN.

    Both trees use ``n_c = 7`` unless overridden.
    """
    cfg.check(WAYDOWN_METHODS)
    count = cfg.q_count or 100_000
    rates = {}
    for d in cfg.dims:
        X = cfg.dataset(d)
        Q = cfg.queries(X.shape[1], count)
        truth = BruteForce(X).query_batch(Q)[0]
        for m in cfg.methods:
            nc, lc = cfg.n_c.get(m, 7), cfg.leaf_cap.get(m)
            if m == "pat":
                tree = PrincipalAxisTree(X, n_c=nc, leaf_cap=lc)
            else:
                tree = QuantizationTree(X, n_c=nc, leaf_cap=lc, rng_seed=streams(cfg.seed)["lloyd"])
            rates[(m, X.shape[1])] = float(np.mean(tree.waydown_batch(Q) != truth))
    return WaydownReport(cfg, rates)
