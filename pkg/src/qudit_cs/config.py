"""Centralized numerical tolerances and size caps.

Every module reads :data:`TOL` at call time, so tests (or callers) can
tighten or loosen thresholds with :func:`override`::

    with config.override(hermitian=1e-14):
        ...
"""
from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12       # ||A - A^H||_F <= tol * max(1, ||A||_F)
    density_min_eig: float = 1e-10
    density_trace: float = 1e-10
    sqrt_neg_eig: float = 1e-8     # psd_sqrt rejects eigenvalues below -tol
    clamp: float = 1e-8            # fidelity clamps eigenvalues above -tol to zero
    rank_rel: float = 1e-10        # eigenvalue > rank_rel * max eigenvalue counts toward rank
    measure_imag: float = 1e-12
    leakage: float = 1e-6
    unitary: float = 1e-10
    max_dim: int = 64


TOL = Tolerances()


@contextlib.contextmanager
def override(**changes):
    """Temporarily replace fields of the global tolerance record."""
    global TOL
    old = TOL
    TOL = dataclasses.replace(old, **changes)
    try:
        yield TOL
    finally:
        TOL = old
