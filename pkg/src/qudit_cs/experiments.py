"""Monte Carlo harness: direct SU(d) sensing vs Pauli sensing after the ancilla swap.

Every trial draws its randomness from Philox streams keyed by
``(master_seed, m, trial, stream)``: stream 0 produces the true state and
stream ``1 + strategy code`` the measurement settings. Both strategies at the
same ``(m, trial)`` therefore see the same true state (a paired comparison),
while their settings are independent. Results never depend on the worker count.
"""
from __future__ import annotations

import csv
import enum
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from .bases import pauli_basis, sud_basis
from .errors import InvalidInputError
from .matcore import clamp_to_density, fidelity
from .recovery import SolverOptions, SuccessCriterion, recover, success
from .sensing import measure, sample_omega
from .states import embed, leakage, make_rng, reference_state, plan_embedding, random_rank_r_density

__all__ = [
    "Strategy",
    "SweepConfig",
    "TrialResult",
    "SweepRow",
    "SweepResult",
    "Su7Case",
    "Su7Report",
    "run_trial",
    "run_sweep",
    "run_su7_benchmark",
    "emit_results",
    "read_rows",
    "load_config",
    "parse_config",
    "dominance_margins",
    "mid_range_m",
    "preset",
]


class Strategy(str, enum.Enum):
    SU_DIRECT = "SuDirect"
    ANCILLA_PAULI = "AncillaPauli"

    @property
    def code(self) -> int:
        return 0 if self is Strategy.SU_DIRECT else 1


STATE_STREAM = 0


def _sensing_dim(strategy: Strategy, d1: int) -> int:
    return d1 if strategy is Strategy.SU_DIRECT else plan_embedding(d1).d2


@dataclass(frozen=True)
class SweepConfig:
    d1: int
    rank: int = 1
    strategies: Tuple[Strategy, ...] = (Strategy.SU_DIRECT, Strategy.ANCILLA_PAULI)
    m_values: Tuple[int, ...] = ()
    trials: int = 200
    master_seed: int = 0
    criterion: SuccessCriterion = SuccessCriterion()
    solver: SolverOptions = SolverOptions()
    replace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(Strategy(s) for s in self.strategies))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        if self.d1 < 2 or not 1 <= self.rank <= self.d1:
            raise InvalidInputError(f"bad dimensions d1={self.d1}, rank={self.rank}")
        if self.trials < 1 or not self.m_values or not self.strategies:
            raise InvalidInputError("need trials >= 1, a non-empty m grid and strategies")
        for s in self.strategies:
            cap = _sensing_dim(s, self.d1) ** 2
            bad = [m for m in self.m_values if not 0 < m <= cap]
            if bad:
                raise InvalidInputError(f"{s.value}: m values {bad} outside (0, {cap}]")

    def echo(self) -> Dict[str, str]:
        out = {
            "d1": str(self.d1),
            "rank": str(self.rank),
            "strategies": ",".join(s.value for s in self.strategies),
            "m_values": ",".join(map(str, self.m_values)),
            "trials": str(self.trials),
            "master_seed": str(self.master_seed),
            "criterion": str(self.criterion),
            "replace": str(self.replace).lower(),
        }
        for f in fields(SolverOptions):
            out[f"solver.{f.name}"] = repr(getattr(self.solver, f.name))
        return out


@dataclass(frozen=True)
class TrialResult:
    strategy: Strategy
    m: int
    trial: int
    fidelity: float       # in the sensing dimension (d2 for the ancilla route)
    fidelity_d1: float    # after cutting the system block
    success: bool
    converged: bool
    iterations: int
    leakage: float


def run_trial(
    strategy,
    d1: int,
    rank: int,
    m: int,
    master_seed: int,
    trial: int,
    solver: SolverOptions = SolverOptions(),
    criterion: SuccessCriterion = SuccessCriterion(),
    replace: bool = False,
) -> TrialResult:
    strategy = Strategy(strategy)
    rho = random_rank_r_density(d1, rank, make_rng(master_seed, m, trial, STATE_STREAM))
    rng = make_rng(master_seed, m, trial, 1 + strategy.code)
    if strategy is Strategy.SU_DIRECT:
        basis, truth = sud_basis(d1), rho
    else:
        plan = plan_embedding(d1)
        basis, truth = pauli_basis(plan.d2.bit_length() - 1), embed(rho, plan)
    omega = sample_omega(len(basis), m, rng, replace=replace)
    result = recover(basis, measure(truth, basis, omega), solver)
    est = result.sigma_star
    f = fidelity(truth, clamp_to_density(est))
    f_d1 = f if strategy is Strategy.SU_DIRECT else fidelity(rho, clamp_to_density(est[:d1, :d1]))
    leak = 0.0 if strategy is Strategy.SU_DIRECT else leakage(est, d1)
    return TrialResult(
        strategy, m, trial, f, f_d1, success(truth, result, criterion),
        result.converged, result.iterations, leak,
    )


@dataclass(frozen=True)
class SweepRow:
    strategy: Strategy
    m: int
    trials: int
    mean_fidelity: float
    std_fidelity: float
    success_rate: float
    mean_fidelity_d1: float


CSV_HEADER = ["strategy", "m", "trials", "mean_fidelity", "std_fidelity", "success_rate", "mean_fidelity_d1"]
TRIAL_HEADER = [f.name for f in fields(TrialResult)]


@dataclass
class SweepResult:
    config: SweepConfig
    rows: List[SweepRow]
    trials: List[TrialResult] = field(repr=False)

    def row(self, strategy, m) -> SweepRow:
        strategy = Strategy(strategy)
        for r in self.rows:
            if r.strategy is strategy and r.m == m:
                return r
        raise KeyError((strategy, m))


def _run_chunk(args):
    cfg, items = args
    return [
        run_trial(s, cfg.d1, cfg.rank, m, cfg.master_seed, t, cfg.solver, cfg.criterion, cfg.replace)
        for s, m, t in items
    ]


def _aggregate(strategy: Strategy, m: int, res: Sequence[TrialResult]) -> SweepRow:
    f = np.array([r.fidelity for r in res])
    f1 = np.array([r.fidelity_d1 for r in res])
    ok = np.array([r.success for r in res], dtype=float)
    return SweepRow(strategy, m, len(res), float(f.mean()), float(f.std()), float(ok.mean()), float(f1.mean()))


def run_sweep(config: SweepConfig, workers: int = 1, progress=None) -> SweepResult:
    """Run every (strategy, m, trial) cell; rows come back sorted by (strategy, m)."""
    items = [
        (s, m, t)
        for s in sorted(config.strategies, key=lambda s: s.value)
        for m in sorted(config.m_values)
        for t in range(config.trials)
    ]
    if workers <= 1:
        results = []
        for k, it in enumerate(items):
            results.extend(_run_chunk((config, [it])))
            if progress is not None:
                progress(k + 1, len(items))
    else:
        size = max(1, len(items) // (8 * workers))
        chunks = [items[i:i + size] for i in range(0, len(items), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_run_chunk, [(config, c) for c in chunks]) for r in part]
    results.sort(key=lambda r: (r.strategy.value, r.m, r.trial))
    rows = []
    i = 0
    while i < len(results):
        j = i
        while j < len(results) and (results[j].strategy, results[j].m) == (results[i].strategy, results[i].m):
            j += 1
        rows.append(_aggregate(results[i].strategy, results[i].m, results[i:j]))
        i = j
    return SweepResult(config, rows, results)


def dominance_margins(rows: Sequence[SweepRow], field_name: str = "mean_fidelity") -> Dict[int, float]:
    """``AncillaPauli - SuDirect`` per m present for both strategies."""
    by = {(r.strategy, r.m): getattr(r, field_name) for r in rows}
    shared = sorted(
        m for (s, m) in by if s is Strategy.ANCILLA_PAULI and (Strategy.SU_DIRECT, m) in by
    )
    return {m: by[(Strategy.ANCILLA_PAULI, m)] - by[(Strategy.SU_DIRECT, m)] for m in shared}


def mid_range_m(d1: int, rank: int = 1) -> int:
    """``d1 * r * ceil(ln(d1)^2)``: the sampling scale at which recovery switches on."""
    return d1 * rank * math.ceil(math.log(d1) ** 2)


# --------------------------------------------------------------------------
# SU(7) reference states


@dataclass(frozen=True)
class Su7Case:
    state: str
    m: int
    trials: int
    successes: int
    rate: float
    ci_low: float
    ci_high: float

    def line(self) -> str:
        return (
            f"state={self.state} m={self.m} trials={self.trials} successes={self.successes} "
            f"rate={self.rate:.4f} ci95=[{self.ci_low:.4f},{self.ci_high:.4f}]"
        )


@dataclass
class Su7Report:
    d: int
    criterion: SuccessCriterion
    cases: List[Su7Case]

    def case(self, state: str, m: int) -> Su7Case:
        for c in self.cases:
            if c.state == state and c.m == m:
                return c
        raise KeyError((state, m))

    def lines(self) -> List[str]:
        return [f"d={self.d} criterion={self.criterion}"] + [c.line() for c in self.cases]


SU7_CASES = (("rho1", 46), ("rho2", 28), ("rho1", 28))


def run_su7_benchmark(
    trials: int = 500,
    master_seed: int = 0,
    solver: SolverOptions = SolverOptions(),
    criterion: SuccessCriterion = SuccessCriterion(),
    cases: Sequence[Tuple[str, int]] = SU7_CASES,
    d: int = 7,
) -> Su7Report:
    """Success rates of recovering rho1 / rho2 from m random SU(d) settings."""
    if trials < 1:
        raise InvalidInputError("need at least one trial")
    basis = sud_basis(d)
    out = []
    for state, m in cases:
        rho = reference_state(state, d)
        code = 1 if state == "rho1" else 2
        hits = 0
        for t in range(trials):
            omega = sample_omega(len(basis), m, make_rng(master_seed, code, m, t))
            hits += success(rho, recover(basis, measure(rho, basis, omega), solver), criterion)
        ci = binomtest(hits, trials).proportion_ci(0.95, method="wilson")
        out.append(Su7Case(state, m, trials, hits, hits / trials, float(ci.low), float(ci.high)))
    return Su7Report(d, criterion, out)


# --------------------------------------------------------------------------
# presets, config files, output


# Exactly recovered states come back with fidelity a few times eps_rel below one,
# so curve comparisons need a tighter stop than the library default.
FIGURE_SOLVER = SolverOptions(eps_abs=1e-9, eps_rel=1e-8, max_iters=20000)


def preset(name: str, trials: int | None = None, master_seed: int = 0, full: bool = False) -> SweepConfig:
    """Standard fidelity-vs-m sweeps: ``fig1`` (d1 = 15) and ``fig2`` (d1 = 31).

    Grids run from d1 to d1**2 in steps of d1; the solver uses
    :data:`FIGURE_SOLVER`.
    """
    if name == "fig1":
        d1, default, full_n = 15, 200, 2000
    elif name == "fig2":
        d1, default, full_n = 31, 100, 1000
    else:
        raise InvalidInputError(f"unknown preset {name!r}")
    n = trials if trials is not None else (full_n if full else default)
    return SweepConfig(
        d1=d1, m_values=tuple(range(d1, d1 * d1 + 1, d1)), trials=n, master_seed=master_seed,
        solver=FIGURE_SOLVER,
    )


_SOLVER_CASTS = {f.name: f.type for f in fields(SolverOptions)}


def _as_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise InvalidInputError(f"not a boolean: {text!r}")


def parse_config(text: str) -> SweepConfig:
    """Parse the flat ``key=value`` sweep format (``#`` starts a comment).

    Keys: ``d1``, ``rank``, ``strategies`` (comma list), ``m_values`` (comma
    list or ``start:stop:step`` inclusive), ``trials``, ``master_seed``,
    ``criterion`` (``fidelity:0.999`` / ``frobenius:1e-3``), ``replace``, and
    ``solver.<field>`` for any :class:`SolverOptions` field.
    """
    kv = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidInputError(f"line {n}: expected key=value, got {raw!r}")
        kv[key.strip()] = value.strip()
    try:
        solver = {}
        for key in [k for k in kv if k.startswith("solver.")]:
            name = key[len("solver."):]
            if name not in _SOLVER_CASTS:
                raise InvalidInputError(f"unknown solver option {name!r}")
            value = kv.pop(key)
            typ = _SOLVER_CASTS[name]
            solver[name] = _as_bool(value) if typ in (bool, "bool") else (
                int(value) if typ in (int, "int") else float(value))
        m_text = kv.pop("m_values")
        if ":" in m_text:
            a, b, c = (int(x) for x in m_text.split(":"))
            m_values = tuple(range(a, b + 1, c))
        else:
            m_values = tuple(int(x) for x in m_text.split(",") if x.strip())
        cfg = SweepConfig(
            d1=int(kv.pop("d1")),
            rank=int(kv.pop("rank", 1)),
            strategies=tuple(s.strip() for s in kv.pop("strategies", "SuDirect,AncillaPauli").split(",")),
            m_values=m_values,
            trials=int(kv.pop("trials", 200)),
            master_seed=int(kv.pop("master_seed", kv.pop("seed", 0))),
            criterion=SuccessCriterion.parse(kv.pop("criterion", "fidelity:0.999")),
            solver=SolverOptions(**solver),
            replace=_as_bool(kv.pop("replace", "false")),
        )
    except KeyError as exc:
        raise InvalidInputError(f"missing required key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from exc
    if kv:
        raise InvalidInputError(f"unknown keys: {sorted(kv)}")
    return cfg


def load_config(path) -> SweepConfig:
    with open(path) as fh:
        return parse_config(fh.read())


_PLOT_TEMPLATE = '''"""Plot mean fidelity +/- one standard deviation against m for each strategy."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv_name!r}
series = defaultdict(list)
with open(path) as fh:
    for row in csv.DictReader(fh):
        series[row["strategy"]].append(
            (int(row["m"]), float(row["mean_fidelity"]), float(row["std_fidelity"]))
        )

fig, ax = plt.subplots()
for name, pts in sorted(series.items()):
    pts.sort()
    m = [p[0] for p in pts]
    mean = [p[1] for p in pts]
    lo = [p[1] - p[2] for p in pts]
    hi = [p[1] + p[2] for p in pts]
    ax.plot(m, mean, label=name)
    ax.fill_between(m, lo, hi, alpha=0.3)
ax.set_xlabel("number of measurement settings m")
ax.set_ylabel("fidelity")
ax.legend()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def emit_results(
    rows: Sequence[SweepRow],
    out_dir,
    name: str = "sweep",
    trials: Sequence[TrialResult] | None = None,
    manifest: dict | None = None,
) -> Dict[str, str]:
    """Write ``<name>.csv`` and ``plot_<name>.py`` (plus the per-trial log and a
    manifest when given). Returns the written paths by role."""
    if not rows:
        raise InvalidInputError("no rows to emit")
    paths = {"csv": os.path.join(out_dir, f"{name}.csv"), "plot": os.path.join(out_dir, f"plot_{name}.py")}
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(paths["csv"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in sorted(rows, key=lambda r: (r.strategy.value, r.m)):
                w.writerow([r.strategy.value, r.m, r.trials, repr(r.mean_fidelity), repr(r.std_fidelity),
                            repr(r.success_rate), repr(r.mean_fidelity_d1)])
        with open(paths["plot"], "w") as fh:
            fh.write(_PLOT_TEMPLATE.format(csv_name=os.path.basename(paths["csv"])))
        if trials is not None:
            paths["trials"] = os.path.join(out_dir, f"{name}_trials.csv")
            with open(paths["trials"], "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(TRIAL_HEADER)
                for t in trials:
                    w.writerow([t.strategy.value, t.m, t.trial, repr(t.fidelity), repr(t.fidelity_d1),
                                int(t.success), int(t.converged), t.iterations, repr(t.leakage)])
        if manifest is not None:
            paths["manifest"] = os.path.join(out_dir, f"{name}_manifest.json")
            with open(paths["manifest"], "w") as fh:
                json.dump(manifest, fh, indent=2, sort_keys=True)
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out_dir}: {exc}") from exc
    return paths


def read_rows(path) -> List[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            SweepRow(
                Strategy(r["strategy"]), int(r["m"]), int(r["trials"]), float(r["mean_fidelity"]),
                float(r["std_fidelity"]), float(r["success_rate"]), float(r["mean_fidelity_d1"]),
            )
            for r in reader
        ]
