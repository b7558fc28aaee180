"""Backend selection for the hot metric kernels.

The compiled extension is used when it was built; setting
``MALNARRATE_PURE_PYTHON=1`` forces the pure-Python implementation.
"""

import os

from . import _lcs_py

if os.environ.get("MALNARRATE_PURE_PYTHON"):
    lcs_length = _lcs_py.lcs_length
    BACKEND = "python"
else:
    try:
        from ._lcs_ext import lcs_length
        BACKEND = "cython"
    except ImportError:
        lcs_length = _lcs_py.lcs_length
        BACKEND = "python"

__all__ = ["BACKEND", "lcs_length"]
