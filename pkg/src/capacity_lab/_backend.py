"""Kernel backend selection.

The compiled extension is used when importable; setting the environment
variable ``CAPACITY_LAB_PURE=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("CAPACITY_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:  # extension not built
        kernels = _fallback

__all__ = ["BACKEND", "kernels"]
