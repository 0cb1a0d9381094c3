"""``qnns`` command line: gen, validate, bench, waydown."""

from __future__ import annotations

import argparse
import logging
import sys

from . import datasets
from .bench import METHODS, WAYDOWN_METHODS, BenchConfig, ConfigError, run_bench, run_validate, run_waydown


def _dims(values) -> tuple:
    out = []
    for v in values:
        out.extend(int(x) for x in str(v).split(",") if x)
    return tuple(out)


def _per_method(values, methods) -> dict:
    """``--nc 35`` applies to every tree method; ``--nc pat=7`` to one."""
    out = {}
    for v in values or ():
        if "=" in v:
            m, _, k = v.partition("=")
            out[m] = int(k)
        else:
            out.update({m: int(v) for m in methods if m != "brute"})
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qnns", description="Exact nearest-neighbor search structures and benchmarks.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, methods, default_methods):
        sp.add_argument("--method", action="append", choices=methods, help="repeatable; default: all")
        sp.add_argument("--dist", choices=datasets.DISTRIBUTIONS, default="gaussian")
        sp.add_argument("--n", type=int, default=5000)
        sp.add_argument("--dim", action="append", help="repeatable or comma-separated; default 2")
        sp.add_argument("--queries", type=int, default=None)
        sp.add_argument("--nc", action="append", help="children per node, N or method=N")
        sp.add_argument("--leaf-cap", action="append", help="leaf capacity, N or method=N")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jitter", type=float, default=0.0)
        sp.add_argument("--format", choices=("table", "csv"), default="table")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--data", help="dataset file (QNNS binary or CSV) instead of generating one")
        sp.set_defaults(default_methods=default_methods)

    common(sub.add_parser("validate", help="compare every method against brute force"), METHODS, METHODS)
    common(sub.add_parser("bench", help="time every method"), METHODS, METHODS)
    common(sub.add_parser("waydown", help="error rate of descent without backtracking"),
           WAYDOWN_METHODS, WAYDOWN_METHODS)

    g = sub.add_parser("gen", help="generate a dataset file")
    g.add_argument("--dist", choices=datasets.DISTRIBUTIONS, default="gaussian")
    g.add_argument("--n", type=int, default=5000)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--format", choices=("qnns", "csv"), default=None, help="default: from the file extension")
    g.add_argument("--out", required=True)
    return p


def _config(args) -> BenchConfig:
    methods = tuple(args.method) if args.method else args.default_methods
    data = datasets.load(args.data) if args.data else None
    dims = _dims(args.dim) if args.dim else (2,)
    if data is not None:
        dims = (data.shape[1],)
    if args.cmd == "waydown":
        nc = {m: 7 for m in methods}
        nc.update(_per_method(args.nc, methods))
    else:
        nc = _per_method(args.nc, methods)
    return BenchConfig(methods=methods, dist=args.dist, n=data.shape[0] if data is not None else args.n,
                       dims=dims, q_count=args.queries, n_c=nc,
                       leaf_cap=_per_method(args.leaf_cap, methods), seed=args.seed,
                       jitter=args.jitter, out=args.out, fmt=args.format, threads=args.threads,
                       data=data)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    if args.cmd == "gen":
        X = datasets.gen_dataset(args.dist, args.n, args.dim, args.seed, args.jitter)
        datasets.save(args.out, X, args.format)
        print(f"wrote {args.n} x {args.dim} {args.dist} points to {args.out}")
        return 0
    try:
        cfg = _config(args)
        if args.cmd == "waydown":
            _emit(run_waydown(cfg).render(), cfg.out)
            return 0
        report = run_validate(cfg) if args.cmd == "validate" else run_bench(cfg)
    except ConfigError as exc:
        print(f"qnns {args.cmd}: {exc}", file=sys.stderr)
        return 2
    if args.cmd == "bench":
        _emit(report.render(), cfg.out)
        return 0
    lines = []
    for r in report.results:
        status = "ok" if r.failures == 0 else f"FAILED {r.failures}"
        lines.append(f"{r.method:<14} n={r.n} d={r.d} queries={cfg.q_count or 10_000}: {status}")
        for f in r.failed_queries:
            lines.append(f"    reproduce: --dist {f['dist']} --n {f['n']} --dim {f['d']} --seed {f['seed']}"
                         f" query #{f['query']} got {f['got']} expected {f['expected']}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 1 if report.failures else 0


if __name__ == "__main__":
    sys.exit(main())
