"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``OPTOPRO_PURE=1`` to
force the pure-Python fallback.
"""
import os

from . import _fallback

if os.environ.get("OPTOPRO_PURE"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

lif_euler = _impl.lif_euler
history_features = _impl.history_features

__all__ = ["BACKEND", "lif_euler", "history_features"]
