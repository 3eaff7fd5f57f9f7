"""Nuclear-norm recovery: ``min ||sigma||_1  s.t.  Tr(w_a sigma) = b_a, a in Omega``.

:func:`recover` runs ADMM over Hermitian matrices with two blocks:

* X-update: exact affine projection ``X <- V - sum_a (<w_a, V> - b_a) w_a``
  with ``V = Z - U`` (exact because the sampled w_a are orthonormal);
* Z-update: eigenvalue soft-thresholding of ``relax*X + (1-relax)*Z + U`` at
  ``1/penalty``;
* scaled dual update ``U <- U + X - Z``.

Stopping uses the usual primal/dual residual tests. The returned estimate is
the feasible iterate X.

:func:`recover_reference` is an independent oracle for tests: accelerated
proximal gradient on ``||sigma||_1 + ||A sigma - b||^2 / (2 mu)`` over general
complex matrices, using dense basis matrices and SVD, with ``mu -> 0``
continuation.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bases import OperatorBasis
from .errors import InvalidInputError
from .matcore import clamp_to_density, fidelity, frobenius_norm
from .sensing import MeasurementRecord, SensingOperator

__all__ = [
    "SolverOptions",
    "RecoveryResult",
    "SuccessCriterion",
    "recover",
    "recover_reference",
    "success",
]


@dataclass(frozen=True)
class SolverOptions:
    """ADMM settings.

    ``adaptive`` enables residual balancing of the penalty every 10 iterations
    and ``relax`` is the over-relaxation factor (1.0 disables it). ``psd``
    replaces soft-thresholding by its PSD-constrained variant, an extension of
    the plain program; the returned estimate is then the PSD iterate Z.
    """

    penalty: float = 1.0
    max_iters: int = 5000
    eps_abs: float = 1e-7
    eps_rel: float = 1e-6
    constraint_tol: float = 1e-6
    adaptive: bool = True
    relax: float = 1.6
    psd: bool = False

    def __post_init__(self):
        for name in ("penalty", "max_iters", "eps_abs", "eps_rel", "constraint_tol"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if not 0 < self.relax < 2:
            raise InvalidInputError("relax must lie in (0, 2)")


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    sigma_star: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    constraint_residual: float
    nuclear_value: float
    converged: bool
    penalty: float = float("nan")

    def diagnostics(self):
        return [
            f"converged={str(self.converged).lower()}",
            f"iterations={self.iterations}",
            f"primal_residual={self.primal_residual!r}",
            f"dual_residual={self.dual_residual!r}",
            f"constraint_residual={self.constraint_residual!r}",
            f"nuclear_value={self.nuclear_value!r}",
            f"penalty={self.penalty!r}",
        ]


def _check(basis: OperatorBasis, record: MeasurementRecord) -> None:
    if record.dim != basis.dim or record.basis_kind != basis.kind:
        raise InvalidInputError(
            f"record ({record.basis_kind.value}, d={record.dim}) does not match "
            f"basis ({basis.kind.value}, d={basis.dim})"
        )
    if record.m == 0:
        raise InvalidInputError("record has no measurements")


def recover(basis: OperatorBasis, record: MeasurementRecord, opts: SolverOptions = SolverOptions()) -> RecoveryResult:
    _check(basis, record)
    op = SensingOperator(basis, record.omega)
    d = basis.dim
    b = np.ascontiguousarray(record.values, dtype=np.float64)
    X, Z, it, r, s, eps_pri, eps_dual, penalty = kernels.admm(
        op.indptr, op.flat, op.vals, b, d,
        float(opts.penalty), float(opts.relax), bool(opts.adaptive), bool(opts.psd),
        int(opts.max_iters), float(opts.eps_abs), float(opts.eps_rel),
    )
    est = (Z if opts.psd else X).reshape(d, d)
    est = 0.5 * (est + est.conj().T)
    cres = float(np.linalg.norm(op(est) - b))
    nuc = float(np.abs(np.linalg.eigvalsh(est)).sum())
    converged = bool(r <= eps_pri and s <= eps_dual and cres <= opts.constraint_tol)
    return RecoveryResult(est, int(it), float(r), float(s), cres, nuc, converged, float(penalty))


def recover_reference(
    basis: OperatorBasis,
    record: MeasurementRecord,
    opts: SolverOptions = SolverOptions(),
    mu0: float = 1.0,
    mu_min: float = 1e-8,
    shrink: float = 0.3,
    inner_tol: float = 1e-10,
    max_inner: int = 20000,
) -> RecoveryResult:
    """Accelerated proximal gradient with continuation. Slow; meant for tests."""
    _check(basis, record)
    d = basis.dim
    A = basis.elements[record.omega].reshape(record.m, d * d).conj()   # rows conj(w_a)
    b = record.values.astype(np.complex128)

    def grad_step(Y):
        # step mu on ||A y - b||^2/(2 mu): rows of A are orthonormal
        y = Y.ravel()
        return (y - A.conj().T @ (A @ y - b)).reshape(d, d)

    def prox(Y, tau):
        U, s, Vh = np.linalg.svd(Y)
        s = np.maximum(s - tau, 0.0)
        return (U * s) @ Vh

    x = np.zeros((d, d), dtype=np.complex128)
    mu = mu0
    total = 0
    while True:
        y, t = x.copy(), 1.0
        for _ in range(max_inner):
            x_new = prox(grad_step(y), mu)
            t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            y = x_new + ((t - 1) / t_new) * (x_new - x)
            step = np.linalg.norm(x_new - x)
            x, t = x_new, t_new
            total += 1
            if step <= inner_tol * max(1.0, np.linalg.norm(x)):
                break
        if mu <= mu_min:
            break
        mu = max(mu * shrink, mu_min)

    est = 0.5 * (x + x.conj().T)
    cres = float(np.linalg.norm(A @ est.ravel() - b))
    nuc = float(np.linalg.svd(est, compute_uv=False).sum())
    return RecoveryResult(est, total, cres, float("nan"), cres, nuc, cres <= 1e-4)


class CriterionKind(str, enum.Enum):
    FIDELITY = "fidelity"
    FROBENIUS = "frobenius"


@dataclass(frozen=True)
class SuccessCriterion:
    """``fidelity``: F(truth, clamp(sigma)) >= threshold.
    ``frobenius``: ||truth - sigma||_F <= threshold."""

    kind: CriterionKind = CriterionKind.FIDELITY
    threshold: float = 0.999

    def __post_init__(self):
        object.__setattr__(self, "kind", CriterionKind(self.kind))

    def __str__(self):
        return f"{self.kind.value}:{self.threshold!r}"

    @classmethod
    def parse(cls, text: str) -> "SuccessCriterion":
        kind, _, thr = text.partition(":")
        return cls(kind, float(thr)) if thr else cls(kind)


def success(truth, result: RecoveryResult, criterion: SuccessCriterion = SuccessCriterion()) -> bool:
    """Whether a converged result meets the criterion. Non-converged runs fail."""
    if not result.converged:
        return False
    if criterion.kind is CriterionKind.FROBENIUS:
        return frobenius_norm(np.asarray(truth) - result.sigma_star) <= criterion.threshold
    return fidelity(truth, clamp_to_density(result.sigma_star)) >= criterion.threshold
