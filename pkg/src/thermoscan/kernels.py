"""Backend selection for the inner-loop kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``THERMOSCAN_PURE_PYTHON`` is set to a non-empty value,
the numpy implementation is used. Both produce identical results.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("THERMOSCAN_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

valley_filter = _impl.valley_filter
asymmetry_sum = _impl.asymmetry_sum
warp = _impl.warp
warp_abs_diff = _impl.warp_abs_diff


def backends():
    """Map of every importable backend name to its module."""
    found = {"python": _kernels_py}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
