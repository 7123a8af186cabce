"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``GRWGRAPHS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("GRWGRAPHS_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"

diff0 = kernels.diff0
diff1 = kernels.diff1
gradient = kernels.gradient
divergence = kernels.divergence
