"""Kernel backend selection.

The compiled extension is used when it has been built; otherwise the NumPy
implementation takes over transparently. Set ``NFISAC_PURE_PYTHON=1`` to
force the fallback (used by the benchmark and backend-parity tests).
"""

import os

if os.environ.get("NFISAC_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

steering_matrix = _impl.steering_matrix
steering_norm_sq = _impl.steering_norm_sq
