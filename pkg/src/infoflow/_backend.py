"""Kernel selection.

The compiled extension is used when it imports; set ``INFOFLOW_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from infoflow import _pykernels

if os.environ.get("INFOFLOW_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pykernels
else:
    try:
        from infoflow import _ckernels as kernels
    except ImportError:
        kernels = _pykernels

BACKEND = "cython" if kernels is not _pykernels else "python"
