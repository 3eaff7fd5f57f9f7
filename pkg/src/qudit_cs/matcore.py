"""Dense complex matrix helpers: validation, norms, eigendecomposition,
PSD square root, Uhlmann fidelity, and the plain-text / binary matrix formats.

Matrices are plain ``numpy.ndarray`` objects (complex128). "Hermitian" and
"density matrix" are contracts checked by :func:`as_hermitian` and
:func:`as_density`, not wrapper classes.
"""
from __future__ import annotations

from typing import List

import numpy as np

from . import config
from .errors import InvalidInputError

__all__ = [
    "as_matrix",
    "as_hermitian",
    "as_density",
    "is_hermitian",
    "nuclear_norm",
    "frobenius_norm",
    "operator_norm",
    "singular_values",
    "hermitian_eig",
    "psd_sqrt",
    "clamp_to_density",
    "fidelity",
    "numerical_rank",
    "write_text",
    "read_text",
    "write_binary",
    "read_binary",
    "save_matrix",
    "load_matrix",
]


def as_matrix(X) -> np.ndarray:
    """Return ``X`` as a finite 2-D complex128 array."""
    A = np.asarray(X)
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    A = A.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def _hermitian_defect(A: np.ndarray) -> float:
    return float(np.linalg.norm(A - A.conj().T))


def is_hermitian(X, tol: float | None = None) -> bool:
    A = as_matrix(X)
    if A.shape[0] != A.shape[1]:
        return False
    tol = config.TOL.hermitian if tol is None else tol
    return _hermitian_defect(A) <= tol * max(1.0, float(np.linalg.norm(A)))


def as_hermitian(X, tol: float | None = None) -> np.ndarray:
    """Validate Hermiticity and return the exactly symmetrized matrix."""
    A = as_matrix(X)
    if A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    tol = config.TOL.hermitian if tol is None else tol
    defect = _hermitian_defect(A)
    if defect > tol * max(1.0, float(np.linalg.norm(A))):
        raise InvalidInputError(f"matrix is not Hermitian (||A - A^H||_F = {defect:.3e})")
    return 0.5 * (A + A.conj().T)


def as_density(X) -> np.ndarray:
    """Validate a density matrix: Hermitian, PSD (to tolerance), unit trace."""
    A = as_hermitian(X)
    tol = config.TOL
    tr = np.trace(A).real
    if abs(tr - 1.0) > tol.density_trace:
        raise InvalidInputError(f"trace {tr!r} differs from 1")
    lam_min = np.linalg.eigvalsh(A)[0]
    if lam_min < -tol.density_min_eig:
        raise InvalidInputError(f"minimum eigenvalue {lam_min:.3e} is negative")
    return A


def singular_values(X) -> np.ndarray:
    """Singular values in descending order.

    Hermitian input goes through the eigensolver (``|lambda|``); anything else
    uses an SVD.
    """
    A = as_matrix(X)
    if A.shape[0] == A.shape[1] and is_hermitian(A):
        w = np.abs(np.linalg.eigvalsh(0.5 * (A + A.conj().T)))
        return np.sort(w)[::-1]
    return np.linalg.svd(A, compute_uv=False)


def nuclear_norm(X) -> float:
    return float(np.sum(singular_values(X)))


def frobenius_norm(X) -> float:
    A = as_matrix(X)
    return float(np.sqrt(np.vdot(A, A).real))


def operator_norm(X) -> float:
    return float(singular_values(X)[0])


def hermitian_eig(A):
    """Eigendecomposition ``A = V diag(w) V^H`` with ``w`` ascending."""
    H = as_hermitian(A)
    w, V = np.linalg.eigh(H)
    return w, V


def numerical_rank(A, rel_tol: float | None = None) -> int:
    """Count eigenvalues above ``rel_tol`` times the largest one."""
    w, _ = hermitian_eig(A)
    rel_tol = config.TOL.rank_rel if rel_tol is None else rel_tol
    top = w[-1]
    if top <= 0:
        return 0
    return int(np.count_nonzero(w > rel_tol * top))


def psd_sqrt(A) -> np.ndarray:
    """Principal square root of a PSD matrix; tiny negative eigenvalues are clamped."""
    w, V = hermitian_eig(A)
    if w[0] < -config.TOL.sqrt_neg_eig:
        raise InvalidInputError(f"matrix has a negative eigenvalue {w[0]:.3e}")
    s = np.sqrt(np.clip(w, 0.0, None))
    return (V * s) @ V.conj().T


def clamp_to_density(sigma) -> np.ndarray:
    """Project a Hermitian estimate onto the density matrices.

    Negative eigenvalues are zeroed and the result is rescaled to unit trace.
    An estimate with no positive spectrum maps to the zero matrix, for which
    :func:`fidelity` returns 0.
    """
    w, V = hermitian_eig(sigma)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        return np.zeros_like(V)
    return (V * (w / total)) @ V.conj().T


def _sqrt_factor(A) -> np.ndarray:
    """``F`` with ``F F^H = A`` restricted to the numerical support of a PSD ``A``.

    Eigenvalues within round-off of zero are dropped rather than square-rooted,
    which would inflate ``1e-16`` noise to ``1e-8``.
    """
    w, V = hermitian_eig(A)
    if w[0] < -config.TOL.clamp:
        raise InvalidInputError(f"matrix has a negative eigenvalue {w[0]:.3e}")
    keep = w > A.shape[0] * np.finfo(float).eps * max(abs(w[-1]), abs(w[0]))
    return V[:, keep] * np.sqrt(w[keep])


def fidelity(rho, sigma) -> float:
    r"""Uhlmann fidelity :math:`F = (\mathrm{Tr}\sqrt{\sqrt\rho\,\sigma\sqrt\rho})^2`.

    Evaluated as the squared nuclear norm of ``F_rho^H F_sigma`` for square-root
    factors on each support, which equals ``||sqrt(rho) sqrt(sigma)||_1``. Both
    arguments must be PSD up to the clamp tolerance; solver output should go
    through :func:`clamp_to_density` first.
    """
    R = as_matrix(rho)
    S = as_matrix(sigma)
    if R.shape != S.shape:
        raise InvalidInputError(f"dimension mismatch: {R.shape} vs {S.shape}")
    FR, FS = _sqrt_factor(R), _sqrt_factor(S)
    if FR.shape[1] == 0 or FS.shape[1] == 0:
        return 0.0
    s = np.linalg.svd(FR.conj().T @ FS, compute_uv=False)
    return float(np.sum(s) ** 2)


# --------------------------------------------------------------------------
# file formats

def _format_row(row: np.ndarray) -> str:
    return " ".join(f"{z.real!r},{z.imag!r}" for z in row.tolist())


def write_text(stream, X) -> None:
    """Write one matrix block: ``d <rows> <cols>`` then rows of ``re,im`` pairs."""
    A = as_matrix(X)
    stream.write(f"d {A.shape[0]} {A.shape[1]}\n")
    for row in A:
        stream.write(_format_row(row) + "\n")


def _parse_pair(tok: str) -> complex:
    try:
        re_, im_ = tok.split(",")
        return complex(float(re_), float(im_))
    except ValueError as exc:
        raise InvalidInputError(f"bad matrix entry {tok!r}") from exc


def read_text(stream) -> List[np.ndarray]:
    """Read every matrix block in a text stream."""
    blocks: List[np.ndarray] = []
    lines = [ln for ln in (s.strip() for s in stream) if ln and not ln.startswith("#")]
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if len(head) != 3 or head[0] != "d":
            raise InvalidInputError(f"expected 'd <rows> <cols>' header, got {lines[i]!r}")
        rows, cols = int(head[1]), int(head[2])
        body = lines[i + 1:i + 1 + rows]
        if len(body) != rows:
            raise InvalidInputError("truncated matrix block")
        A = np.empty((rows, cols), dtype=np.complex128)
        for r, ln in enumerate(body):
            toks = ln.split()
            if len(toks) != cols:
                raise InvalidInputError(f"row {r} has {len(toks)} entries, expected {cols}")
            A[r] = [_parse_pair(t) for t in toks]
        blocks.append(as_matrix(A))
        i += 1 + rows
    return blocks


def write_binary(stream, X) -> None:
    """Raw little-endian float64 pairs (re, im), row-major, no header."""
    stream.write(as_matrix(X).astype("<c16").tobytes())


def read_binary(stream, shape=None) -> np.ndarray:
    """Inverse of :func:`write_binary`; a square shape is inferred when omitted."""
    data = np.frombuffer(stream.read(), dtype="<c16")
    if shape is None:
        n = int(round(np.sqrt(data.size)))
        if n * n != data.size:
            raise InvalidInputError(f"{data.size} entries do not form a square matrix")
        shape = (n, n)
    if data.size != shape[0] * shape[1]:
        raise InvalidInputError(f"{data.size} entries do not match shape {shape}")
    return as_matrix(data.reshape(shape).astype(np.complex128))


def save_matrix(path, X, fmt: str | None = None) -> None:
    fmt = fmt or ("binary" if str(path).endswith(".bin") else "text")
    if fmt == "binary":
        with open(path, "wb") as fh:
            write_binary(fh, X)
    else:
        with open(path, "w") as fh:
            write_text(fh, X)


def load_matrix(path, fmt: str | None = None) -> np.ndarray:
    fmt = fmt or ("binary" if str(path).endswith(".bin") else "text")
    if fmt == "binary":
        with open(path, "rb") as fh:
            return read_binary(fh)
    with open(path) as fh:
        blocks = read_text(fh)
    if len(blocks) != 1:
        raise InvalidInputError(f"{path}: expected one matrix block, found {len(blocks)}")
    return blocks[0]
