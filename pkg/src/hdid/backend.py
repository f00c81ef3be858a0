"""Kernel backend selection.

The hot numeric kernels (RNG primitives and Gibbs sweeps) are plain Python
functions written against scalar numpy semantics. By default they are
compiled with numba; setting ``HDID_NUMBA=0`` in the environment selects the
interpreted pure-numpy fallback. Both paths execute identical arithmetic,
so draw sequences are bit-for-bit the same either way (the fallback is just
slow). ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

USE_NUMBA = os.environ.get("HDID_NUMBA", "1").strip().lower() not in {"0", "false", "no"}

if USE_NUMBA:
    from numba import njit as _numba_njit

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        if func is None:
            return lambda f: _numba_njit(**kwargs)(f)
        return _numba_njit(**kwargs)(func)

else:

    def njit(func=None, **kwargs):  # noqa: ARG001 - mirror the numba signature
        if func is None:
            return lambda f: f
        return func
