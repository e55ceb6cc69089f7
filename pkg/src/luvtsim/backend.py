"""Stencil backend selection: compiled extension if available, NumPy otherwise.

Set LUVT_BACKEND=python to force the fallback (used by the benchmark and
the parity tests).
"""

import os

from . import stencil_numpy

_forced = os.environ.get("LUVT_BACKEND", "").strip().lower()

if _forced in ("", "auto", "native"):
    try:
        from . import _stencil as kernels

        BACKEND = "native"
    except ImportError:
        if _forced == "native":
            raise
        kernels = stencil_numpy
        BACKEND = "python"
elif _forced == "python":
    kernels = stencil_numpy
    BACKEND = "python"
else:
    raise ValueError(f"unknown LUVT_BACKEND value {_forced!r}")


def has_native_kernels() -> bool:
    """True when the compiled stencil extension is in use."""
    return BACKEND == "native"
