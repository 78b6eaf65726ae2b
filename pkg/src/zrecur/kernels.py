"""Backend selection for the inner loops.

The compiled extension is used when importable; ``ZRECUR_PURE_PYTHON=1``
forces the numpy fallback. ``BACKEND`` names the active choice.
"""

from __future__ import annotations

import os

from . import _kernels_py as fallback

compiled = None
if not os.environ.get("ZRECUR_PURE_PYTHON"):
    try:
        from . import _kernels as compiled
    except ImportError:  # pragma: no cover - depends on the build
        compiled = None

_impl = compiled if compiled is not None else fallback
BACKEND = "cython" if compiled is not None else "numpy"

first_return_times = _impl.first_return_times
first_return_sum = _impl.first_return_sum
zext_scan = _impl.zext_scan
dp_step = _impl.dp_step


def backends() -> dict:
    """Map backend name to module, for cross-checks and benchmarks."""
    out = {"numpy": fallback}
    if compiled is not None:
        out["cython"] = compiled
    return out
