"""Numba backend selection for the stepping kernels.

The hot per-step loops in :mod:`awpi.kernels` are written as plain Python
over scalars and numpy arrays so that the same source runs either
JIT-compiled (numba) or interpreted.  The interpreted path is the
reference; compiled kernels must produce bit-identical results (checked
in the test suite).

Set the environment variable ``AWPI_NUMBA=0`` before import to force the
pure-Python path, e.g. for debugging or on platforms without numba.
"""

import os

_FLAG = os.environ.get("AWPI_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "no", "off")

if _WANT_NUMBA:
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


def jit(func):
    """JIT-compile ``func`` in nopython mode, or return it unchanged."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func
