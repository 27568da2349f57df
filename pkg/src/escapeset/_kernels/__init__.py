"""Hot loops, compiled when possible.

The Cython extension ``_core`` is preferred; if it was not built (or
``ESCAPESET_PURE_PYTHON=1`` is set) the numpy fallback is used. ``BACKEND``
names the active implementation.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("ESCAPESET_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

FIELD_SPIRAL = 0
FIELD_R3SADDLE = 1
FIELD_RADIAL = 2

rk4_samples = _impl.rk4_samples
hausdorff = _impl.hausdorff
greedy_cluster = _impl.greedy_cluster
rk4_generic = _fallback.rk4_generic

__all__ = [
    "BACKEND",
    "FIELD_R3SADDLE",
    "FIELD_RADIAL",
    "FIELD_SPIRAL",
    "greedy_cluster",
    "hausdorff",
    "rk4_generic",
    "rk4_samples",
]
