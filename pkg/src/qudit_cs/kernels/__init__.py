"""Hot loops of the recovery solver, with a numba and a pure-numpy backend.

The backend is chosen once at import time from ``QUDIT_CS_BACKEND``
(``numba``, the default, or ``numpy``). If numba cannot be imported the numpy
path is used silently. Both modules stay importable for benchmarking.
"""
import os

from . import _numpy

_requested = os.environ.get("QUDIT_CS_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"QUDIT_CS_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

impl = _numpy
if _requested == "numba":
    try:
        from . import _numba as impl
    except ImportError:  # pragma: no cover - numba missing
        impl = _numpy

BACKEND = "numba" if impl is not _numpy else "numpy"

forward = impl.forward
adjoint = impl.adjoint
project_affine = impl.project_affine
svt = impl.svt
admm = impl.admm

__all__ = ["BACKEND", "forward", "adjoint", "project_affine", "svt", "admm"]
