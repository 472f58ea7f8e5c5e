"""Backend selection for the hot kernels.

The compiled extension is preferred; the numpy fallback is used when it is
missing or when ``CCEVAL_PURE_PYTHON`` is set to a non-empty value other
than ``0``.
"""

import os

from . import _kernels_py

_forced = os.environ.get("CCEVAL_PURE_PYTHON", "") not in ("", "0")

if _forced:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

correlate1d_reflect = _impl.correlate1d_reflect
ciede2000 = _impl.ciede2000
power_sums = _impl.power_sums


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["compiled"] = _kernels
    return found
