"""Numba switch for the hot kernels.

Kernels are written once as plain Python over numpy arrays.  When numba
is importable and ``DYNPPE_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled with ``njit``; otherwise the same functions run interpreted and
the vectorised numpy fallbacks in :mod:`dynppe.kernels` are used where one
exists.  The flag only selects an execution path; results agree to
floating point round-off.
"""

from __future__ import annotations

import os

_flag = os.environ.get("DYNPPE_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("numba disabled by DYNPPE_DISABLE_NUMBA")
    import numba as _numba
except ImportError:
    _numba = None

NUMBA_ENABLED = _numba is not None


def jit(func):
    """Compile ``func`` with ``njit(cache=True, nogil=True)`` when enabled."""
    if _numba is None:
        return func
    return _numba.njit(cache=True, nogil=True)(func)


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
