"""Numba toggle shared by every kernel module.

Hot loops ship in two flavours: a plain-Python implementation that numba can
compile, and a vectorized NumPy fallback. Set ``MFLAB_NO_NUMBA=1`` to force
the fallbacks (useful on platforms without a working numba, and for the
benchmark in ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

NUMBA_DISABLED = os.environ.get("MFLAB_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via MFLAB_NO_NUMBA")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False
    _njit = None


def jitted(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it unchanged.

    Compiled kernels release the GIL so replicate loops can use threads.
    fastmath stays off: reruns must be bit-for-bit reproducible.
    """
    if NUMBA_ENABLED:
        return _njit(cache=True, nogil=True)(fn)
    return fn


def thread_count() -> int:
    """Worker-pool size, capped by the MFLAB_THREADS environment variable."""
    cap = os.environ.get("MFLAB_THREADS", "").strip()
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n
