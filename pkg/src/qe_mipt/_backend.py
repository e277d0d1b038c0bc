"""Kernel backend selection.

The hot tableau kernels exist twice with identical signatures: a numba
version (scalar loops over packed words, compiled with ``@njit``) and a
vectorized numpy version. ``QE_MIPT_BACKEND=numpy`` forces the numpy path;
otherwise numba is used when it imports.
"""
from __future__ import annotations

import os

_requested = os.environ.get("QE_MIPT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"QE_MIPT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba":
    try:
        from . import _kernels_numba as kernels
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba missing
        from . import _kernels_numpy as kernels
        BACKEND = "numpy"
else:
    from . import _kernels_numpy as kernels
    BACKEND = "numpy"

__all__ = ["kernels", "BACKEND"]
