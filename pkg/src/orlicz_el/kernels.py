"""Kernel backend selection.

The compiled extension is used when it is importable; setting the
environment variable ``ORLICZ_EL_KERNELS=python`` forces the pure-Python
fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("ORLICZ_EL_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

stencil = _impl.stencil
scatter = _impl.scatter
cyclic_solve = _impl.cyclic_solve

python = _pykernels
