"""Numerical kernels with a compiled fast path.

The Cython extension ``_ckernels`` is used when it was built; otherwise the
numpy implementations in ``_pykernels`` are used. Setting the environment
variable ``HDRS_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("HDRS_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

matern52 = _impl.matern52
matern52_sym = _impl.matern52_sym
hermite_table = _impl.hermite_table
psi_matrix = _impl.psi_matrix

__all__ = ["BACKEND", "matern52", "matern52_sym", "hermite_table", "psi_matrix"]
