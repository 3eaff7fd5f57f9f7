"""Command-line entry point.

Exit codes: 0 success, 1 invalid arguments or input, 2 runtime failure
(non-converged single-shot recovery, I/O errors). Machine-readable summaries
go to stdout as ``key=value`` lines, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__, kernels
from .bases import coherence, make_basis
from .errors import InvalidInputError
from .experiments import (
    emit_results, dominance_margins, load_config, mid_range_m, preset, run_su7_benchmark, run_sweep,
)
from .matcore import as_density, load_matrix, save_matrix, write_text
from .recovery import SolverOptions, recover
from .sensing import measure, read_record, sample_omega, write_record
from .states import StateSpec, make_rng, make_state

log = logging.getLogger("qudit_cs")

DEFAULT_SEED = 20190101
OUT_ENV = "QUDIT_CS_OUT"
_FILE_COMMANDS = ("basis", "state", "measure", "recover")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _out_dir(args) -> str:
    return args.out or os.environ.get(OUT_ENV) or "results"


def _manifest(args, extra=None) -> dict:
    m = {
        "tool": "qudit-cs",
        "version": __version__,
        "backend": kernels.BACKEND,
        "argv": [a for a in args._argv],
        "seed": getattr(args, "seed", None),
    }
    if extra:
        m.update(extra)
    return m


def _write_manifest(path, manifest) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_basis(args) -> int:
    basis = make_basis(args.kind, args.dim)
    if args.check:
        W = basis.elements
        G = np.einsum("aij,bij->ab", W.conj(), W)
        orth = float(np.abs(G - np.eye(len(basis))).max())
        herm = float(max(np.abs(W - W.conj().transpose(0, 2, 1)).max(), 0.0))
        print(f"kind={basis.kind.value}")
        print(f"dim={basis.dim}")
        print(f"elements={len(basis)}")
        print(f"orthonormality_residual={orth!r}")
        print(f"hermiticity_residual={herm!r}")
        return 0
    stream = open(args.out, "w") if args.out else sys.stdout
    try:
        for a in range(len(basis)):
            stream.write(f"# element {a}\n")
            write_text(stream, basis.element(a))
    finally:
        if stream is not sys.stdout:
            stream.close()
    return 0


def _load_state(args, d):
    if args.state in ("rho1", "rho2"):
        return make_state(StateSpec(d, 1, args.state, generalized=True))
    return as_density(load_matrix(args.state))


def cmd_coherence(args) -> int:
    basis = make_basis(args.kind, args.dim)
    rho = _load_state(args, args.dim)
    for line in coherence(basis, rho).lines():
        print(line)
    return 0


def cmd_state(args) -> int:
    spec = StateSpec(args.dim, args.rank, args.kind, args.seed, generalized=True)
    rho = make_state(spec)
    if args.out:
        save_matrix(args.out, rho, args.format)
        print(f"wrote={args.out}")
    else:
        write_text(sys.stdout, rho)
    return 0


def cmd_measure(args) -> int:
    rho = as_density(load_matrix(args.state))
    basis = make_basis(args.kind, rho.shape[0])
    omega = sample_omega(len(basis), args.m, make_rng(args.seed), replace=args.replace)
    rec = measure(rho, basis, omega)
    if args.out:
        with open(args.out, "w") as fh:
            write_record(fh, rec)
        print(f"wrote={args.out}")
    else:
        write_record(sys.stdout, rec)
    return 0


def _solver_from(args) -> SolverOptions:
    return SolverOptions(
        penalty=args.penalty, max_iters=args.max_iters, eps_abs=args.eps_abs,
        eps_rel=args.eps_rel, adaptive=not args.fixed_penalty, psd=args.psd,
    )


def cmd_recover(args) -> int:
    with open(args.record) as fh:
        rec = read_record(fh)
    basis = make_basis(rec.basis_kind, rec.dim)
    res = recover(basis, rec, _solver_from(args))
    if args.out:
        save_matrix(args.out, res.sigma_star, args.format)
        print(f"wrote={args.out}")
    else:
        write_text(sys.stdout, res.sigma_star)
    for line in res.diagnostics():
        print(line)
    if not res.converged:
        log.error("solver did not converge in %d iterations", res.iterations)
        return 2
    return 0


def _progress(done, total):
    if done % max(1, total // 20) == 0 or done == total:
        log.info("%d/%d trials", done, total)


def _emit_sweep(args, name, result) -> None:
    out = _out_dir(args)
    manifest = _manifest(args, {"config": result.config.echo()})
    paths = emit_results(result.rows, out, name, result.trials, manifest)
    for m, gap in dominance_margins(result.rows).items():
        print(f"margin m={m} ancilla_minus_sud={gap!r}")
    print(f"csv={paths['csv']}")


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    result = run_sweep(cfg, workers=args.workers, progress=_progress)
    _emit_sweep(args, args.name, result)
    return 0


def cmd_reproduce(args) -> int:
    if args.target == "su7":
        trials = args.trials or 500
        report = run_su7_benchmark(trials, args.seed)
        lines = report.lines()
        for line in lines:
            print(line)
        out = _out_dir(args)
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "su7.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        _write_manifest(os.path.join(out, "su7_manifest.json"), _manifest(args, {"trials": trials}))
        return 0
    cfg = preset(args.target, args.trials, args.seed, full=args.full)
    result = run_sweep(cfg, workers=args.workers, progress=_progress)
    _emit_sweep(args, args.target, result)
    print(f"mid_range_m={mid_range_m(cfg.d1, cfg.rank)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qudit-cs", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    b = sub.add_parser("basis", help="dump or check an operator basis")
    b.add_argument("--kind", choices=["pauli", "sud"], required=True)
    b.add_argument("--dim", type=int, required=True)
    b.add_argument("--check", action="store_true", help="print orthonormality residuals only")
    b.add_argument("--out")
    b.set_defaults(func=cmd_basis)

    c = sub.add_parser("coherence", help="nu1 / nu2 of a state in a basis")
    c.add_argument("--kind", choices=["pauli", "sud"], required=True)
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--state", required=True, help="rho1, rho2, or a matrix file")
    c.set_defaults(func=cmd_coherence)

    s = sub.add_parser("state", help="generate a density matrix")
    s.add_argument("--kind", choices=["haar", "haar-rank", "rho1", "rho2"], default="haar")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--rank", type=int, default=1)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--format", choices=["text", "binary"])
    s.add_argument("--out")
    s.set_defaults(func=cmd_state)

    m = sub.add_parser("measure", help="sample settings and record expectation values")
    m.add_argument("--state", required=True)
    m.add_argument("--kind", choices=["pauli", "sud"], required=True)
    m.add_argument("--m", type=int, required=True)
    m.add_argument("--seed", type=int, default=DEFAULT_SEED)
    m.add_argument("--replace", action="store_true", help="sample with replacement")
    m.add_argument("--out")
    m.set_defaults(func=cmd_measure)

    r = sub.add_parser("recover", help="nuclear-norm recovery from a measurement record")
    r.add_argument("--record", required=True)
    r.add_argument("--out")
    r.add_argument("--format", choices=["text", "binary"])
    r.add_argument("--penalty", type=float, default=1.0)
    r.add_argument("--max-iters", type=int, default=5000)
    r.add_argument("--eps-abs", type=float, default=1e-7)
    r.add_argument("--eps-rel", type=float, default=1e-6)
    r.add_argument("--fixed-penalty", action="store_true", help="disable residual balancing")
    r.add_argument("--psd", action="store_true", help="add a PSD constraint (not part of the plain program)")
    r.set_defaults(func=cmd_recover)

    w = sub.add_parser("sweep", help="run a fidelity-vs-m sweep from a config file")
    w.add_argument("--config", required=True)
    w.add_argument("--out")
    w.add_argument("--name", default="sweep")
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    x = sub.add_parser("reproduce", help="replicate the SU(7) rates or a fidelity figure")
    x.add_argument("target", choices=["fig1", "fig2", "su7"])
    x.add_argument("--trials", type=int)
    x.add_argument("--seed", type=int, default=DEFAULT_SEED)
    x.add_argument("--full", action="store_true", help="full-scale trial counts (2000 / 1000)")
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--out")
    x.set_defaults(func=cmd_reproduce)
    return p


def dispatch(argv) -> int:
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        sys.stderr.write(parser.format_usage())
        return 1
    args._argv = argv
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
        format="%(levelname)s %(message)s",
    )
    try:
        code = args.func(args)
        if code == 0 and args.command in _FILE_COMMANDS and getattr(args, "out", None):
            _write_manifest(args.out + ".manifest.json", _manifest(args))
        return code
    except InvalidInputError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("%s", exc)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
