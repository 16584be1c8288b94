"""Backend selection for the hot per-pixel kernels.

Imports the compiled Cython extension when available, otherwise the
NumPy fallback. Set the environment variable ``FREQFOREST_PURE=1`` to
force the fallback (useful for benchmarking the two side by side).
"""

import os

from . import _kernels_py

if os.environ.get("FREQFOREST_PURE"):
    _impl = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        _impl = _kernels_py
        COMPILED = False

directional_stats = _impl.directional_stats

__all__ = ["directional_stats", "COMPILED"]
