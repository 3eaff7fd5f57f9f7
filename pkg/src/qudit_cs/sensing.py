"""Random measurement settings and the linear map ``rho -> (Tr(w_a rho))_{a in Omega}``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config, kernels
from .bases import BasisKind, OperatorBasis
from .errors import InvalidInputError
from .matcore import as_matrix

__all__ = [
    "MeasurementRecord",
    "SensingOperator",
    "sample_omega",
    "measure",
    "sensing_adjoint",
    "write_record",
    "read_record",
]


def sample_omega(n_elements: int, m: int, rng, replace: bool = False) -> np.ndarray:
    """Sorted indices of ``m`` settings drawn uniformly from ``range(n_elements)``.

    Without replacement (default) every size-m subset is equally likely. With
    ``replace=True`` m draws are made and duplicates collapse, so fewer than m
    distinct settings may come back.
    """
    if not 0 < m <= n_elements:
        raise InvalidInputError(f"m={m} outside (0, {n_elements}]")
    idx = rng.choice(n_elements, size=m, replace=replace)
    return np.unique(idx).astype(np.int64)


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    basis_kind: BasisKind
    dim: int
    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "basis_kind", BasisKind(self.basis_kind))
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)
        if omega.ndim != 1 or omega.shape != values.shape:
            raise InvalidInputError("omega and values must be 1-D of equal length")
        if omega.size and (omega.min() < 0 or omega.max() >= self.dim ** 2):
            raise InvalidInputError(f"indices must lie in [0, {self.dim ** 2})")
        if np.any(np.diff(omega) <= 0):
            raise InvalidInputError("indices must be sorted and distinct")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("values must be finite")

    @property
    def m(self) -> int:
        return int(self.omega.size)


class SensingOperator:
    """The sampled sensing map A and its adjoint on flattened d x d matrices.

    Rows of A are orthonormal, so ``X - A^H(A X - b)`` is the exact projection
    onto the affine constraint set.
    """

    def __init__(self, basis: OperatorBasis, omega):
        self.basis = basis
        self.dim = basis.dim
        self.omega = np.asarray(omega, dtype=np.int64)
        indptr, flat, vals = basis.subset(self.omega)
        self.indptr = np.ascontiguousarray(indptr)
        self.flat = np.ascontiguousarray(flat)
        self.vals = np.ascontiguousarray(vals)

    def __call__(self, X) -> np.ndarray:
        x = np.ascontiguousarray(X, dtype=np.complex128).ravel()
        return kernels.forward(self.indptr, self.flat, self.vals, x)

    def adjoint(self, coeffs) -> np.ndarray:
        coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
        if coeffs.shape != self.omega.shape:
            raise InvalidInputError(f"expected {self.omega.size} coefficients, got {coeffs.size}")
        n = self.dim * self.dim
        return kernels.adjoint(self.indptr, self.flat, self.vals, coeffs, n).reshape(self.dim, self.dim)

    def project(self, X, b) -> np.ndarray:
        x = np.ascontiguousarray(X, dtype=np.complex128).ravel()
        b = np.ascontiguousarray(b, dtype=np.float64)
        return kernels.project_affine(self.indptr, self.flat, self.vals, b, x).reshape(self.dim, self.dim)


def measure(rho, basis: OperatorBasis, omega) -> MeasurementRecord:
    """Exact expectation values ``Tr(w_a rho)`` for ``a`` in ``omega``."""
    rho = as_matrix(rho)
    if rho.shape != (basis.dim, basis.dim):
        raise InvalidInputError(f"state shape {rho.shape} does not match basis dimension {basis.dim}")
    omega = np.asarray(omega, dtype=np.int64)
    indptr, flat, vals = basis.subset(omega)
    # <w, rho> = sum_ij conj(w_ij) rho_ij, which is Tr(w rho) for Hermitian w
    terms = vals.conj() * rho.ravel()[flat]
    values = np.add.reduceat(terms, indptr[:-1]) if omega.size else np.zeros(0, complex)
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    worst = float(np.abs(values.imag).max(initial=0.0))
    if worst > config.TOL.measure_imag * scale:
        raise InvalidInputError(f"expectation values have imaginary part {worst:.3e}; is rho Hermitian?")
    return MeasurementRecord(basis.kind, basis.dim, omega, values.real.copy())


def sensing_adjoint(record: MeasurementRecord, basis: OperatorBasis, coeffs) -> np.ndarray:
    """``sum_k coeffs[k] * w_{omega[k]}`` (Hermitian)."""
    if record.dim != basis.dim or record.basis_kind != basis.kind:
        raise InvalidInputError("record was taken in a different basis")
    return SensingOperator(basis, record.omega).adjoint(coeffs)


def write_record(stream, record: MeasurementRecord) -> None:
    stream.write(f"basis={record.basis_kind.value} d={record.dim} m={record.m}\n")
    for a, v in zip(record.omega.tolist(), record.values.tolist()):
        stream.write(f"{a} {v!r}\n")


def read_record(stream) -> MeasurementRecord:
    lines = [ln.strip() for ln in stream if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InvalidInputError("empty measurement record")
    try:
        head = dict(tok.split("=", 1) for tok in lines[0].split())
        kind, d, m = head["basis"], int(head["d"]), int(head["m"])
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"bad record header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != m:
        raise InvalidInputError(f"header says m={m}, found {len(body)} lines")
    omega = np.empty(m, dtype=np.int64)
    values = np.empty(m)
    for k, ln in enumerate(body):
        a, v = ln.split()
        omega[k], values[k] = int(a), float(v)
    return MeasurementRecord(kind, d, omega, values)
