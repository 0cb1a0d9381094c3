"""Synthetic datasets and the on-disk point formats.

Binary layout (little endian): magic ``QNNS``, u32 version, u64 n, u32 d,
then ``n * d`` float64 values row-major. CSV: one point per line,
comma-separated, written with round-trip precision.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"QNNS"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")
DISTRIBUTIONS = ("gaussian", "uniform")
STREAMS = ("data", "queries", "lloyd", "walk", "order", "jitter")


def streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for every stochastic stage, derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.Generator(np.random.PCG64(ss)) for name, ss in zip(STREAMS, children)}


def box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` standard normal draws from pairs of uniforms."""
    pairs = (count + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1], keeps the log finite
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:count]


def sample(dist: str, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if dist == "gaussian":
        return box_muller(rng, n * d).reshape(n, d)
    if dist == "uniform":
        return rng.random((n, d))
    raise ValueError(f"unknown distribution {dist!r}; expected one of {DISTRIBUTIONS}")


def jitter(X: np.ndarray, magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """Add uniform noise in ``[-magnitude, magnitude]`` per coordinate."""
    if magnitude <= 0.0:
        return X
    return X + rng.uniform(-magnitude, magnitude, size=X.shape)


def gen_dataset(dist: str, n: int, d: int, seed: int = 0, jitter_mag: float = 0.0) -> np.ndarray:
    st = streams(seed)
    return jitter(sample(dist, n, d, st["data"]), jitter_mag, st["jitter"])


def gen_queries(dist: str, q: int, d: int, seed: int = 0) -> np.ndarray:
    return sample(dist, q, d, streams(seed)["queries"])


# ---------------------------------------------------------------------- I/O

def write_qnns(path, X) -> None:
    X = np.ascontiguousarray(X, dtype="<f8")
    if X.ndim != 2:
        raise ValueError("expected an (n, d) array")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, X.shape[0], X.shape[1]))
        fh.write(X.tobytes())


def read_qnns(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a QNNS file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n * d:
        raise ValueError(f"{path}: expected {n * d} values, found {len(body) // 8}")
    return np.frombuffer(body, dtype="<f8").reshape(n, d).astype(np.float64)


def write_csv(path, X) -> None:
    np.savetxt(path, np.asarray(X, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def save(path, X, fmt: str | None = None) -> None:
    fmt = fmt or ("csv" if str(path).lower().endswith(".csv") else "qnns")
    (write_csv if fmt == "csv" else write_qnns)(path, X)


def load(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(4)
    return read_qnns(path) if head == MAGIC else read_csv(path)
