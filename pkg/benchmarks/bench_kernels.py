#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--dims 7 16 32] [--repeat 5]

Each kernel is timed on the same inputs for both backends (numba is compiled
once before timing) and the results are checked to agree.
"""
import argparse
import time

import numpy as np

from qudit_cs.bases import make_basis
from qudit_cs.kernels import _numba, _numpy
from qudit_cs.sensing import SensingOperator, measure, sample_omega
from qudit_cs.states import make_rng, plan_embedding, random_rank_r_density


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def problem(d):
    # sensing at a power-of-two d uses Pauli words, otherwise SU(d)
    kind = "pauli" if plan_embedding(d).d2 == d else "sud"
    basis = make_basis(kind, d)
    rho = random_rank_r_density(d, 1, make_rng(d, 0))
    m = min(d * d, d * int(np.ceil(np.log(d) ** 2)))
    rec = measure(rho, basis, sample_omega(d * d, m, make_rng(d, 1)))
    return kind, SensingOperator(basis, rec.omega), rec.values


def bench(d, repeat):
    kind, op, b = problem(d)
    rng = np.random.default_rng(d)
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    y = (0.5 * (G + G.conj().T)).ravel()
    csr = (op.indptr, op.flat, op.vals)
    admm_args = (*csr, b, d, 1.0, 1.6, True, False, 5000, 1e-7, 1e-6)
    cases = {
        "project_affine": lambda k: k.project_affine(*csr, b, y),
        "svt": lambda k: k.svt(y, d, 0.5, False),
        "admm": lambda k: k.admm(*admm_args),
    }
    rows = []
    for name, call in cases.items():
        call(_numba)   # compile outside the timed region
        t_np, out_np = best_of(lambda: call(_numpy), repeat)
        t_nb, out_nb = best_of(lambda: call(_numba), repeat)
        a = out_np[0] if isinstance(out_np, tuple) else out_np
        c = out_nb[0] if isinstance(out_nb, tuple) else out_nb
        err = float(np.max(np.abs(a - c)))
        rows.append((d, kind, op.omega.size, name, t_np, t_nb, err))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[7, 16, 32])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    print(f"{'d':>3} {'basis':>6} {'m':>5} {'kernel':>15} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max diff':>9}")
    for d in args.dims:
        for d_, kind, m, name, t_np, t_nb, err in bench(d, args.repeat):
            print(f"{d_:>3} {kind:>6} {m:>5} {name:>15} {1e3 * t_np:>11.3f} {1e3 * t_nb:>11.3f} "
                  f"{t_np / t_nb:>7.2f}x {err:>9.1e}")


if __name__ == "__main__":
    main()
