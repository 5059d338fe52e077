"""Selects the kernel implementation at import time.

The compiled extension is used when importable; the pure-numpy fallback
otherwise. Set ``DFLEARN_BACKEND=python`` or ``DFLEARN_BACKEND=cython`` to
force one (forcing ``cython`` raises if the extension is missing).
"""

import os

_requested = os.environ.get("DFLEARN_BACKEND", "").strip().lower()
if _requested not in ("", "cython", "python"):
    raise ImportError(
        f"DFLEARN_BACKEND={_requested!r} not understood; use 'cython' or 'python'"
    )

if _requested == "python":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise
        from . import _kernels_py as _impl

BACKEND = _impl.NAME
FNV_OFFSET_BASIS = _impl.FNV_OFFSET_BASIS
row_scores = _impl.row_scores
scatter_rows = _impl.scatter_rows
fnv1a64 = _impl.fnv1a64
