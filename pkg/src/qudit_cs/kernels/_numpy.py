"""Pure-numpy kernels. Reference path and fallback when numba is unavailable.

Matrices are passed flattened (length ``d*d``, row-major). The sensing
operators are given in CSR form: element ``k`` occupies
``flat[indptr[k]:indptr[k+1]]`` / ``vals[...]``.
"""
import numpy as np


def forward(indptr, flat, vals, y):
    """``out[k] = Re <w_k, Y> = Re sum conj(w_k) * Y``."""
    prod = (vals.conj() * y[flat]).real
    return np.add.reduceat(prod, indptr[:-1])


def adjoint(indptr, flat, vals, coeffs, n):
    """``sum_k coeffs[k] * w_k`` as a flat length-``n`` complex vector."""
    w = np.repeat(coeffs, np.diff(indptr)) * vals
    return np.bincount(flat, w.real, n) + 1j * np.bincount(flat, w.imag, n)


def project_affine(indptr, flat, vals, b, y):
    """Orthogonal projection of ``y`` onto ``{X : <w_k, X> = b_k}`` (orthonormal w_k)."""
    return y - adjoint(indptr, flat, vals, forward(indptr, flat, vals, y) - b, y.size)


def svt(v, d, tau, psd):
    """Eigenvalue soft-thresholding of a Hermitian matrix; returns (flat result, nuclear norm)."""
    V = v.reshape(d, d)
    lam, U = np.linalg.eigh(0.5 * (V + V.conj().T))
    if psd:
        lam = np.maximum(lam - tau, 0.0)
    else:
        lam = np.sign(lam) * np.maximum(np.abs(lam) - tau, 0.0)
    Z = (U * lam) @ U.conj().T
    return Z.ravel(), np.abs(lam).sum()


def admm(indptr, flat, vals, b, d, rho, relax, adaptive, psd, max_iters, eps_abs, eps_rel):
    """ADMM for ``min ||X||_* s.t. <w_k, X> = b_k`` over Hermitian X.

    Returns ``(X, Z, iterations, r_norm, s_norm, eps_pri, eps_dual, rho)``.
    """
    n = d * d
    sqrt_n = np.sqrt(n)
    Z = np.zeros(n, dtype=np.complex128)
    U = np.zeros(n, dtype=np.complex128)
    X = Z
    r_norm = s_norm = eps_pri = eps_dual = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        X = project_affine(indptr, flat, vals, b, Z - U)
        Xh = relax * X + (1.0 - relax) * Z
        Z_old = Z
        Z, _ = svt(Xh + U, d, 1.0 / rho, psd)
        U = U + Xh - Z
        r_norm = np.linalg.norm(X - Z)
        s_norm = rho * np.linalg.norm(Z - Z_old)
        eps_pri = sqrt_n * eps_abs + eps_rel * max(np.linalg.norm(X), np.linalg.norm(Z))
        eps_dual = sqrt_n * eps_abs + eps_rel * rho * np.linalg.norm(U)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            break
        if adaptive and it % 10 == 0:
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
                U = U / 2.0
            elif s_norm > 10.0 * r_norm:
                rho /= 2.0
                U = U * 2.0
    return X, Z, it, r_norm, s_norm, eps_pri, eps_dual, rho
