"""Test states, the ancilla swap embedding, and the dilation-Hamiltonian check."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import config
from .errors import BlockLeakageError, InvalidInputError
from .matcore import as_density, as_hermitian, as_matrix, hermitian_eig, load_matrix

__all__ = [
    "StateKind",
    "StateSpec",
    "EmbeddingPlan",
    "DilationReport",
    "make_rng",
    "random_rank_r_density",
    "reference_state",
    "make_state",
    "plan_embedding",
    "build_swap_W",
    "embed",
    "leakage",
    "extract",
    "dilation_check",
]


def make_rng(seed, *keys: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and an optional tuple of stream keys.

    Philox is counter-based, so streams for different ``keys`` are independent
    and reproducible across platforms. A Generator passes through unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def random_rank_r_density(d: int, r: int, seed) -> np.ndarray:
    """Haar-induced rank-r state ``G G^H / Tr(G G^H)``, G a d x r complex Ginibre matrix."""
    if d < 1 or not 1 <= r <= d:
        raise InvalidInputError(f"need 1 <= r <= d, got d={d}, r={r}")
    rng = make_rng(seed)
    G = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


class StateKind(str, enum.Enum):
    HAAR_PURE = "haar"
    HAAR_RANK_R = "haar-rank"
    RHO1 = "rho1"
    RHO2 = "rho2"
    FROM_FILE = "file"


def reference_state(which, d: int = 7) -> np.ndarray:
    """``rho1 = |0><0|`` or ``rho2 = (1/d) sum_ij |i><j|``."""
    which = StateKind(which)
    if d < 2:
        raise InvalidInputError("need d >= 2")
    if which is StateKind.RHO1:
        rho = np.zeros((d, d), dtype=np.complex128)
        rho[0, 0] = 1.0
        return rho
    if which is StateKind.RHO2:
        return np.full((d, d), 1.0 / d, dtype=np.complex128)
    raise InvalidInputError(f"{which.value} is not a fixed reference state")


@dataclass(frozen=True)
class StateSpec:
    dim: int
    rank: int = 1
    kind: StateKind = StateKind.HAAR_PURE
    seed: int = 0
    path: Optional[str] = None
    generalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", StateKind(self.kind))
        if not 1 <= self.rank <= self.dim:
            raise InvalidInputError(f"rank {self.rank} outside [1, {self.dim}]")
        if self.kind in (StateKind.RHO1, StateKind.RHO2) and self.dim != 7 and not self.generalized:
            raise InvalidInputError("rho1/rho2 are defined for d = 7; set generalized=True")
        if self.kind is StateKind.FROM_FILE and not self.path:
            raise InvalidInputError("file state needs a path")


def make_state(spec: StateSpec) -> np.ndarray:
    if spec.kind is StateKind.HAAR_PURE:
        return random_rank_r_density(spec.dim, 1, spec.seed)
    if spec.kind is StateKind.HAAR_RANK_R:
        return random_rank_r_density(spec.dim, spec.rank, spec.seed)
    if spec.kind is StateKind.FROM_FILE:
        rho = as_density(load_matrix(spec.path))
        if rho.shape[0] != spec.dim:
            raise InvalidInputError(f"{spec.path}: dimension {rho.shape[0]} != {spec.dim}")
        return rho
    return reference_state(spec.kind, spec.dim)


@dataclass(frozen=True)
class EmbeddingPlan:
    d1: int
    d2: int

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < self.d1:
            raise InvalidInputError(f"need 1 <= d1 <= d2, got {self.d1}, {self.d2}")
        if self.d2 & (self.d2 - 1):
            raise InvalidInputError(f"ancilla dimension {self.d2} is not a power of two")


def plan_embedding(d1: int) -> EmbeddingPlan:
    """Smallest power-of-two ancilla that holds a d1-dimensional system."""
    if d1 < 2:
        raise InvalidInputError("need d1 >= 2")
    return EmbeddingPlan(d1, 1 << (d1 - 1).bit_length())


def _swap_permutation(plan: EmbeddingPlan) -> np.ndarray:
    """``perm[c]`` is the output index of input basis state ``c = i * d2 + k``."""
    d1, d2 = plan.d1, plan.d2
    i, k = np.divmod(np.arange(d1 * d2), d2)
    return np.where(k < d1, k * d2 + i, i * d2 + k)


def build_swap_W(plan: EmbeddingPlan) -> np.ndarray:
    """``sum_{i,j<d1} |i><j| (x) |j><i| + sum_{k>=d1} 1 (x) |k><k|`` on system (x) ancilla."""
    n = plan.d1 * plan.d2
    W = np.zeros((n, n), dtype=np.complex128)
    W[_swap_permutation(plan), np.arange(n)] = 1.0
    return W


def embed(rho_S, plan: EmbeddingPlan) -> np.ndarray:
    """Zero-pad ``rho_S`` into the top-left block of a ``d2 x d2`` matrix."""
    rho_S = as_matrix(rho_S)
    if rho_S.shape != (plan.d1, plan.d1):
        raise InvalidInputError(f"state shape {rho_S.shape} does not match d1={plan.d1}")
    out = np.zeros((plan.d2, plan.d2), dtype=np.complex128)
    out[: plan.d1, : plan.d1] = rho_S
    return out


def leakage(rho_A, d1: int) -> float:
    """Frobenius norm of everything outside the top-left ``d1 x d1`` block."""
    A = as_matrix(rho_A)
    below, right = A[d1:, :], A[:d1, d1:]
    return float(np.sqrt(np.vdot(below, below).real + np.vdot(right, right).real))


def extract(rho_A, d1: int, tol: float | None = None) -> np.ndarray:
    """Top-left ``d1 x d1`` block of an ancilla state, rescaled to unit trace.

    Raises :class:`BlockLeakageError` when the off-block weight exceeds ``tol``
    (default ``config.TOL.leakage``); pass ``tol=np.inf`` for solver output.
    """
    A = as_hermitian(rho_A)
    if not 1 <= d1 <= A.shape[0]:
        raise InvalidInputError(f"d1={d1} incompatible with ancilla dimension {A.shape[0]}")
    tol = config.TOL.leakage if tol is None else tol
    leaked = leakage(A, d1)
    if leaked > tol:
        raise BlockLeakageError(leaked, tol)
    block = A[:d1, :d1].copy()
    tr = np.trace(block).real
    if tr <= 0:
        raise InvalidInputError(f"system block has non-positive trace {tr!r}")
    return block / tr


@dataclass(frozen=True)
class DilationReport:
    h_squared_residual: float     # ||H^2 - 1||_F
    exp_residual: float           # ||exp(-i H pi/2) + i H||_F
    block_residual: float         # ||H - sigma_x (x) W||_F, zero iff W is Hermitian
    series_residuals: dict        # t -> ||exp(-iHt) - (cos t 1 - i sin t H)||_F

    def ok(self, tol: float = 1e-10) -> bool:
        return (
            self.h_squared_residual <= tol
            and self.exp_residual <= tol
            and all(v <= tol for v in self.series_residuals.values())
        )


def dilation_check(W, times=(0.3, 1.0, np.pi / 2)) -> DilationReport:
    """Verify ``H = [[0, W], [W^H, 0]]`` squares to one and ``exp(-iHt) = cos t - i sin t H``."""
    W = as_matrix(W)
    n = W.shape[0]
    if W.shape != (n, n):
        raise InvalidInputError("W must be square")
    unitary_err = np.linalg.norm(W @ W.conj().T - np.eye(n))
    if unitary_err > config.TOL.unitary:
        raise InvalidInputError(f"W is not unitary (residual {unitary_err:.3e})")
    H = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    H[:n, n:] = W
    H[n:, :n] = W.conj().T
    eye = np.eye(2 * n)
    lam, V = hermitian_eig(H)

    def expm(t):
        return (V * np.exp(-1j * lam * t)) @ V.conj().T

    sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    series = {
        float(t): float(np.linalg.norm(expm(t) - (np.cos(t) * eye - 1j * np.sin(t) * H)))
        for t in times
    }
    return DilationReport(
        h_squared_residual=float(np.linalg.norm(H @ H - eye)),
        exp_residual=float(np.linalg.norm(expm(np.pi / 2) + 1j * H)),
        block_residual=float(np.linalg.norm(H - np.kron(sx, W))),
        series_residuals=series,
    )
