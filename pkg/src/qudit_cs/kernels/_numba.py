"""numba-compiled kernels; same signatures and semantics as ``_numpy``."""
import numpy as np
from numba import njit


@njit(cache=True)
def forward(indptr, flat, vals, y):
    m = indptr.size - 1
    out = np.empty(m)
    for k in range(m):
        acc = 0.0
        for e in range(indptr[k], indptr[k + 1]):
            v = vals[e]
            z = y[flat[e]]
            acc += v.real * z.real + v.imag * z.imag
        out[k] = acc
    return out


@njit(cache=True)
def adjoint(indptr, flat, vals, coeffs, n):
    out = np.zeros(n, dtype=np.complex128)
    for k in range(indptr.size - 1):
        c = coeffs[k]
        for e in range(indptr[k], indptr[k + 1]):
            out[flat[e]] += c * vals[e]
    return out


@njit(cache=True)
def _project_into(indptr, flat, vals, b, y, out):
    out[:] = y
    for k in range(indptr.size - 1):
        acc = 0.0
        for e in range(indptr[k], indptr[k + 1]):
            v = vals[e]
            z = y[flat[e]]
            acc += v.real * z.real + v.imag * z.imag
        c = acc - b[k]
        for e in range(indptr[k], indptr[k + 1]):
            out[flat[e]] -= c * vals[e]


@njit(cache=True)
def project_affine(indptr, flat, vals, b, y):
    out = np.empty_like(y)
    _project_into(indptr, flat, vals, b, y, out)
    return out


@njit(cache=True)
def _svt_into(v, d, tau, psd, out):
    V = v.reshape((d, d))
    H = 0.5 * (V + V.conj().T)
    lam, U = np.linalg.eigh(H)
    nuc = 0.0
    for i in range(d):
        x = lam[i]
        if psd:
            x = max(x - tau, 0.0)
        elif x > tau:
            x -= tau
        elif x < -tau:
            x += tau
        else:
            x = 0.0
        lam[i] = x
        nuc += abs(x)
    Us = U * lam.astype(np.complex128)
    Z = Us @ np.ascontiguousarray(U.conj().T)
    out[:] = Z.ravel()
    return nuc


@njit(cache=True)
def svt(v, d, tau, psd):
    out = np.empty(d * d, dtype=np.complex128)
    nuc = _svt_into(v, d, tau, psd, out)
    return out, nuc


@njit(cache=True)
def _norm(x):
    acc = 0.0
    for i in range(x.size):
        acc += x[i].real * x[i].real + x[i].imag * x[i].imag
    return np.sqrt(acc)


@njit(cache=True)
def admm(indptr, flat, vals, b, d, rho, relax, adaptive, psd, max_iters, eps_abs, eps_rel):
    n = d * d
    sqrt_n = np.sqrt(n)
    X = np.zeros(n, dtype=np.complex128)
    Z = np.zeros(n, dtype=np.complex128)
    U = np.zeros(n, dtype=np.complex128)
    Z_old = np.zeros(n, dtype=np.complex128)
    W = np.empty(n, dtype=np.complex128)
    r_norm = np.inf
    s_norm = np.inf
    eps_pri = np.inf
    eps_dual = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        for i in range(n):
            W[i] = Z[i] - U[i]
        _project_into(indptr, flat, vals, b, W, X)
        for i in range(n):
            Z_old[i] = Z[i]
            W[i] = relax * X[i] + (1.0 - relax) * Z[i] + U[i]
        _svt_into(W, d, 1.0 / rho, psd, Z)
        r2 = 0.0
        s2 = 0.0
        for i in range(n):
            xh = relax * X[i] + (1.0 - relax) * Z_old[i]
            U[i] += xh - Z[i]
            dr = X[i] - Z[i]
            ds = Z[i] - Z_old[i]
            r2 += dr.real * dr.real + dr.imag * dr.imag
            s2 += ds.real * ds.real + ds.imag * ds.imag
        r_norm = np.sqrt(r2)
        s_norm = rho * np.sqrt(s2)
        eps_pri = sqrt_n * eps_abs + eps_rel * max(_norm(X), _norm(Z))
        eps_dual = sqrt_n * eps_abs + eps_rel * rho * _norm(U)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            break
        if adaptive and it % 10 == 0:
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
                for i in range(n):
                    U[i] *= 0.5
            elif s_norm > 10.0 * r_norm:
                rho *= 0.5
                for i in range(n):
                    U[i] *= 2.0
    return X, Z, it, r_norm, s_norm, eps_pri, eps_dual, rho
