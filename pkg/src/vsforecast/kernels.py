"""Backend dispatch for the scan kernels.

The compiled Cython extension is preferred when present; otherwise the
NumPy fallback is used. Setting the environment variable VSF_PURE_PYTHON
to a non-empty value forces the fallback (useful for benchmarking and for
debugging the compiled code against the reference).
"""

import os

if os.environ.get("VSF_PURE_PYTHON"):
    from . import _kernels_np as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_np as _impl

        BACKEND = "numpy"

scan_distances = _impl.scan_distances
scan_distances_rows = _impl.scan_distances_rows
range_hit_counts = _impl.range_hit_counts

__all__ = [
    "BACKEND",
    "scan_distances",
    "scan_distances_rows",
    "range_hit_counts",
]
