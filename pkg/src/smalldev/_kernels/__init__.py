"""Kernel backend selection.

The hot inner loops (lattice DP sweeps, Crank-Nicolson stepping, Monte
Carlo path survival, Brownian embedding) exist twice: a numba @njit build
and a vectorized numpy/scipy fallback.  Set SMALLDEV_BACKEND=numpy to force
the fallback (or =numba to require the JIT build); the default tries numba
and falls back silently.  benchmarks/benchmark_backends.py compares the two.
"""

from __future__ import annotations

import os
from importlib import import_module

OK = 0
DEAD = 1
NEGATIVE = 2
EXHAUSTED = 3

_KERNEL_NAMES = ("dp_forward", "dp_backward", "cn_sweep", "mc_paths", "skorokhod_run")


def get_backend(name: str):
    """Return the kernel module for an explicit backend name."""
    if name == "numpy":
        return import_module("smalldev._kernels.numpy_backend")
    if name == "numba":
        return import_module("smalldev._kernels.numba_backend")
    raise ValueError(f"unknown backend {name!r} (choose 'numba' or 'numpy')")


def _select():
    choice = os.environ.get("SMALLDEV_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        try:
            return get_backend("numba"), "numba"
        except ImportError:
            return get_backend("numpy"), "numpy"
    return get_backend(choice), choice


_impl, ACTIVE_BACKEND = _select()

dp_forward = _impl.dp_forward
dp_backward = _impl.dp_backward
cn_sweep = _impl.cn_sweep
mc_paths = _impl.mc_paths
skorokhod_run = _impl.skorokhod_run

__all__ = ["ACTIVE_BACKEND", "DEAD", "EXHAUSTED", "NEGATIVE", "OK", "get_backend", *_KERNEL_NAMES]
