"""Kernel backend selection.

The compiled (numba) backend is used when numba imports cleanly, unless the
environment sets ``QNNS_NO_JIT=1``, in which case the pure-numpy twin is
used everywhere. Both backends can always be requested explicitly by name.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

BACKENDS = ("numba", "numpy")
_loaded: dict[str, ModuleType] = {}


def _env_disables_jit() -> bool:
    return os.environ.get("QNNS_NO_JIT", "").strip().lower() in ("1", "true", "yes")


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` (``None`` = the active backend)."""
    if name is None:
        return active
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name not in _loaded:
        _loaded[name] = importlib.import_module(f"{__name__}._{name}")
    return _loaded[name]


def numba_available() -> bool:
    try:
        get_backend("numba")
    except ImportError:
        return False
    return True


def _select() -> tuple[str, ModuleType]:
    if not _env_disables_jit():
        try:
            return "numba", get_backend("numba")
        except ImportError:
            pass
    return "numpy", get_backend("numpy")


active_name, active = _select()
