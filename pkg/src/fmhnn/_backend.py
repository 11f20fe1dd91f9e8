"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over. Setting ``FMHNN_PURE_PYTHON=1`` forces the
fallback for ``"auto"`` requests.
"""

import os

from . import _purepy

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

COMPILED_AVAILABLE = _compiled is not None

if COMPILED_AVAILABLE and os.environ.get("FMHNN_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "compiled"
else:
    BACKEND = "python"


def get(name: str = "auto"):
    """Return the kernel module for ``name`` in {"auto", "compiled", "python"}."""
    if name == "python":
        return _purepy
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    return _compiled if BACKEND == "compiled" else _purepy
