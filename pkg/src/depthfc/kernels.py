"""Backend selection for the hot loops.

Set ``DEPTHFC_PURE_NUMPY=1`` before import to bypass numba. The numba backend
is also skipped when numba cannot be imported.
"""

import os

from depthfc import _kernels_numpy

BACKEND = "numpy"
if os.environ.get("DEPTHFC_PURE_NUMPY", "").strip().lower() not in ("1", "true", "yes"):
    try:
        from depthfc import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover
        _impl = _kernels_numpy
else:
    _impl = _kernels_numpy

mbd_counts = _impl.mbd_counts
greedy_cover = _impl.greedy_cover

__all__ = ["BACKEND", "mbd_counts", "greedy_cover"]
