"""Operator bases (Pauli tensor products, generalized Gell-Mann) and the
coherence parameters nu1 / nu2 of a state with respect to a basis.

Both bases are very sparse: a Pauli word has exactly ``d`` nonzeros and a
Gell-Mann generator at most ``d``. Elements are therefore stored in a CSR-like
layout (``indptr``, flattened positions ``row * d + col``, values); the dense
``(d*d, d, d)`` stack is built on first access of :attr:`OperatorBasis.elements`.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np

from . import config
from .errors import InvalidInputError, ResourceLimitError
from .matcore import as_density, hermitian_eig

__all__ = [
    "BasisKind",
    "OperatorBasis",
    "CoherenceReport",
    "pauli_basis",
    "sud_basis",
    "make_basis",
    "coherence_nu1",
    "coherence_nu2",
    "coherence",
    "support_projector",
    "sud_pure_bound",
]


class BasisKind(str, enum.Enum):
    PAULI = "pauli"
    SUD = "sud"


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Ordered orthonormal Hermitian basis of the d x d matrices.

    Attributes
    ----------
    dim : int
        Matrix dimension ``d``; the basis has ``d**2`` elements.
    kind : BasisKind
    indptr, flat, vals : ndarray
        Element ``a`` has entries ``vals[indptr[a]:indptr[a+1]]`` at flattened
        positions ``flat[indptr[a]:indptr[a+1]]``.
    """

    dim: int
    kind: BasisKind
    indptr: np.ndarray
    flat: np.ndarray
    vals: np.ndarray
    _dense: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.indptr, self.flat, self.vals):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.dim * self.dim

    def element(self, a: int) -> np.ndarray:
        d = self.dim
        if not 0 <= a < d * d:
            raise IndexError(a)
        out = np.zeros(d * d, dtype=np.complex128)
        sl = slice(self.indptr[a], self.indptr[a + 1])
        out[self.flat[sl]] = self.vals[sl]
        return out.reshape(d, d)

    @property
    def elements(self) -> np.ndarray:
        """Dense ``(d**2, d, d)`` array of all elements (read-only, cached)."""
        if "all" not in self._dense:
            d = self.dim
            out = np.zeros((d * d, d * d), dtype=np.complex128)
            owner = np.repeat(np.arange(d * d), np.diff(self.indptr))
            out[owner, self.flat] = self.vals
            out = out.reshape(d * d, d, d)
            out.setflags(write=False)
            self._dense["all"] = out
        return self._dense["all"]

    def subset(self, omega):
        """CSR arrays restricted to the elements listed in ``omega`` (in order)."""
        omega = np.asarray(omega, dtype=np.int64)
        starts = self.indptr[omega]
        counts = self.indptr[omega + 1] - starts
        indptr = np.zeros(len(omega) + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        pos = np.repeat(starts - indptr[:-1], counts) + np.arange(indptr[-1])
        return indptr, self.flat[pos].copy(), self.vals[pos].copy()


def _check_dim(d: int) -> None:
    if d > config.TOL.max_dim:
        raise ResourceLimitError(f"dimension {d} exceeds cap {config.TOL.max_dim}")


# rows: Pauli index (I, X, Y, Z); cols: bit of the row index on that qubit
_PAULI_PHASE = np.array([[1, 1], [1, 1], [-1j, 1j], [1, -1]], dtype=np.complex128)


@functools.lru_cache(maxsize=None)
def pauli_basis(n: int) -> OperatorBasis:
    """Normalized n-qubit Pauli words, base-4 lexicographic in (i1, ..., in).

    Element 0 is ``I/sqrt(d)``; for ``n = 2`` element 5 is ``(X (x) X)/2``.
    """
    if n < 1:
        raise InvalidInputError("need at least one qubit")
    d = 2 ** n
    _check_dim(d)
    digits = np.array(np.unravel_index(np.arange(4 ** n), (4,) * n)).T  # (4^n, n)
    shifts = n - 1 - np.arange(n)
    flips = (digits == 1) | (digits == 2)
    xmask = (flips.astype(np.int64) << shifts).sum(axis=1)
    rows = np.arange(d)
    rowbits = (rows[:, None] >> shifts) & 1  # (d, n)
    vals = np.prod(_PAULI_PHASE[digits[:, None, :], rowbits[None, :, :]], axis=2) / np.sqrt(d)
    cols = rows[None, :] ^ xmask[:, None]
    flat = (rows[None, :] * d + cols).ravel().astype(np.int64)
    indptr = np.arange(0, d * 4 ** n + 1, d, dtype=np.int64)
    return OperatorBasis(d, BasisKind.PAULI, indptr, flat, vals.ravel())


@functools.lru_cache(maxsize=None)
def sud_basis(d: int) -> OperatorBasis:
    """Generalized Gell-Mann basis with unit Frobenius norm.

    Order: ``I/sqrt(d)``; symmetric ``(|j><k| + |k><j|)/sqrt2`` for j<k;
    antisymmetric ``(-i|j><k| + i|k><j|)/sqrt2`` for j<k; diagonal
    ``diag(1,..,1,-l,0,..)/sqrt(l(l+1))`` for l = 1..d-1.
    """
    if d < 2:
        raise InvalidInputError("SU(d) basis needs d >= 2")
    _check_dim(d)
    flat, vals, counts = [], [], []
    diag = np.arange(d) * (d + 1)

    flat.append(diag)
    vals.append(np.full(d, 1 / np.sqrt(d), dtype=np.complex128))
    counts.append(d)

    j, k = np.triu_indices(d, 1)
    s = 1 / np.sqrt(2)
    pairs = np.stack([j * d + k, k * d + j], axis=1)
    flat.append(pairs.ravel())
    vals.append(np.tile([s, s], len(j)).astype(np.complex128))
    counts.extend([2] * len(j))
    flat.append(pairs.ravel())
    vals.append(np.tile([-1j * s, 1j * s], len(j)))
    counts.extend([2] * len(j))

    for l in range(1, d):
        v = np.ones(l + 1, dtype=np.complex128)
        v[l] = -l
        flat.append(diag[: l + 1])
        vals.append(v / np.sqrt(l * (l + 1)))
        counts.append(l + 1)

    indptr = np.zeros(d * d + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return OperatorBasis(
        d, BasisKind.SUD, indptr, np.concatenate(flat).astype(np.int64), np.concatenate(vals)
    )


def make_basis(kind, d: int) -> OperatorBasis:
    kind = BasisKind(kind)
    if kind is BasisKind.PAULI:
        n = int(d).bit_length() - 1
        if d < 2 or 2 ** n != d:
            raise InvalidInputError(f"Pauli basis needs a power-of-two dimension, got {d}")
        return pauli_basis(n)
    return sud_basis(d)


@dataclass(frozen=True)
class CoherenceReport:
    nu1: float
    nu2: float
    nu: float
    argmax_index_nu1: int
    argmax_index_nu2: int
    rank: int

    def lines(self):
        return [
            f"nu1={self.nu1!r}",
            f"nu2={self.nu2!r}",
            f"nu={self.nu!r}",
            f"argmax_index_nu1={self.argmax_index_nu1}",
            f"argmax_index_nu2={self.argmax_index_nu2}",
            f"rank={self.rank}",
        ]


def _is_monomial(basis: OperatorBasis) -> bool:
    d = basis.dim
    owner = np.repeat(np.arange(len(basis)), np.diff(basis.indptr))
    rows, cols = np.divmod(basis.flat, d)
    for lines in (rows, cols):
        keys = owner * d + lines
        if np.unique(keys).size != keys.size:
            return False
    return True


def coherence_nu1(basis: OperatorBasis):
    """``d * max_a ||w_a||^2`` (operator norm) and the maximizing index."""
    if _is_monomial(basis):
        # at most one nonzero per row and column: singular values are |entries|
        owner = np.repeat(np.arange(len(basis)), np.diff(basis.indptr))
        norms = np.zeros(len(basis))
        np.maximum.at(norms, owner, np.abs(basis.vals))
    else:
        norms = np.abs(np.linalg.eigvalsh(basis.elements)).max(axis=1)
    a = int(np.argmax(norms))
    return basis.dim * float(norms[a]) ** 2, a


def support_projector(rho):
    """Projector onto eigenvectors with eigenvalue above the relative rank threshold."""
    w, V = hermitian_eig(rho)
    top = w[-1]
    keep = w > config.TOL.rank_rel * top if top > 0 else np.zeros_like(w, dtype=bool)
    U = V[:, keep]
    return U @ U.conj().T, U


def coherence_nu2(basis: OperatorBasis, rho):
    r"""``(d / 2r) max_a ||P w_a + w_a P - P w_a P||_F^2`` and the maximizing index.

    Uses ``||P w + w P - P w P||^2 = 2||P w||^2 - ||P w P||^2`` (w Hermitian),
    evaluated through the support eigenvectors ``U`` (``P = U U^H``).
    """
    rho = as_density(rho)
    if rho.shape[0] != basis.dim:
        raise InvalidInputError(f"state dimension {rho.shape[0]} != basis dimension {basis.dim}")
    _, U = support_projector(rho)
    r = U.shape[1]
    if r == 0:
        raise InvalidInputError("state has zero rank")
    W = basis.elements
    UW = np.einsum("ij,ajk->aik", U.conj().T, W)        # U^H w_a
    UWU = UW @ U                                         # U^H w_a U
    vals = 2 * np.sum(np.abs(UW) ** 2, axis=(1, 2)) - np.sum(np.abs(UWU) ** 2, axis=(1, 2))
    a = int(np.argmax(vals))
    return basis.dim / (2 * r) * float(vals[a]), a


def coherence(basis: OperatorBasis, rho) -> CoherenceReport:
    nu1, a1 = coherence_nu1(basis)
    nu2, a2 = coherence_nu2(basis, rho)
    _, U = support_projector(as_density(rho))
    return CoherenceReport(nu1, nu2, min(nu1, nu2), a1, a2, U.shape[1])


def sud_pure_bound(rho) -> float:
    """``max_{i != j} rho_ii + rho_jj`` for a rank-1 state."""
    rho = as_density(rho)
    _, U = support_projector(rho)
    if U.shape[1] != 1:
        raise InvalidInputError(f"state has rank {U.shape[1]}, expected 1")
    diag = np.sort(np.diag(rho).real)
    return float(diag[-1] + diag[-2])
