"""Compiled and interpreted kernels must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from qnns import kernels
from qnns.search import BruteForce, KdTree, PrincipalAxisTree, QuantizationTree

needs_numba = pytest.mark.skipif(not kernels.numba_available(), reason="numba not installed")


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_flag_selects_numpy():
    code = "from qnns import kernels; print(kernels.active_name)"
    env = dict(os.environ, QNNS_NO_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env.pop("QNNS_NO_JIT")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if kernels.numba_available() else "numpy")


def _structures(X):
    yield BruteForce(X)
    yield KdTree(X)
    yield PrincipalAxisTree(X)
    yield PrincipalAxisTree(X, stacked=False)
    yield QuantizationTree(X, n_c=8)
    yield QuantizationTree(X, n_c=8, stacked=False)
    if X.shape[1] <= 3:
        yield QuantizationTree(X, n_c=8, mode="friends")


@needs_numba
@pytest.mark.parametrize("d", [1, 2, 3, 6])
def test_query_parity(d):
    rng = np.random.default_rng(d)
    X = rng.standard_normal((600, d))
    Q = rng.standard_normal((150, d))
    for index in _structures(X):
        a = index.query_batch(Q, backend="numba")
        b = index.query_batch(Q, backend="numpy")
        name = type(index).__name__
        assert np.array_equal(a[0], b[0]), name
        assert np.array_equal(a[1], b[1]), name
        assert np.array_equal(a[2], b[2]), name


@needs_numba
def test_waydown_and_assign_parity():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((800, 2))
    Q = rng.standard_normal((300, 2))
    for tree in (PrincipalAxisTree(X), QuantizationTree(X, n_c=7)):
        assert np.array_equal(tree.waydown_batch(Q, "numba"), tree.waydown_batch(Q, "numpy"))
    C = rng.standard_normal((20, 2))
    out = []
    for name in kernels.BACKENDS:
        lab, d2 = np.empty(len(X), np.int64), np.empty(len(X))
        kernels.get_backend(name).assign(X, C, lab, d2)
        out.append((lab, d2))
    assert np.array_equal(out[0][0], out[1][0]) and np.array_equal(out[0][1], out[1][1])


def test_threads_match_single_thread():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((2000, 3))
    Q = rng.standard_normal((1000, 3))
    tree = PrincipalAxisTree(X)
    one = tree.query_batch(Q)
    four = tree.query_batch(Q, threads=4)
    for a, b in zip(one, four):
        assert np.array_equal(a, b)
