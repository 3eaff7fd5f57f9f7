import numpy as np
import pytest

from qudit_cs import kernels
from qudit_cs.bases import make_basis, pauli_basis, sud_basis
from qudit_cs.errors import InvalidInputError
from qudit_cs.matcore import fidelity
from qudit_cs.recovery import (
    CriterionKind, RecoveryResult, SolverOptions, SuccessCriterion, recover, recover_reference, success,
)
from qudit_cs.sensing import MeasurementRecord, SensingOperator, measure, sample_omega
from qudit_cs.states import make_rng, reference_state, random_rank_r_density


def _instance(kind, d, r, m, seed):
    B = make_basis(kind, d)
    rho = random_rank_r_density(d, r, make_rng(seed, 0))
    om = sample_omega(d * d, m, make_rng(seed, 1))
    return B, rho, measure(rho, B, om)


@pytest.mark.parametrize("kind,d", [("sud", 4), ("sud", 7), ("pauli", 8), ("sud", 8)])
@pytest.mark.parametrize("r", [1, 3])
def test_full_basis_is_exact(kind, d, r):
    B, rho, rec = _instance(kind, d, r, d * d, 10 * d + r)
    res = recover(B, rec)
    assert res.converged
    assert np.linalg.norm(res.sigma_star - rho) <= 1e-6


def test_zero_state_recovers_zero():
    B = sud_basis(4)
    rec = MeasurementRecord("sud", 4, [1, 5, 9], np.zeros(3))
    for solver in (recover, recover_reference):
        res = solver(B, rec)
        assert np.linalg.norm(res.sigma_star) <= 1e-8


def test_reference_full_basis_matches_direct_sum():
    B, rho, rec = _instance("sud", 3, 2, 9, 5)
    direct = np.einsum("a,aij->ij", rec.values, B.elements)
    assert np.linalg.norm(recover_reference(B, rec).sigma_star - direct) <= 1e-4


def test_admm_matches_reference_objective_and_exact_instances():
    # the optimal face can contain more than one point, so iterates are compared
    # only where the program has recovered the truth; objective values always
    for k in range(12):
        d = 3 + k % 3
        B, rho, rec = _instance("sud", d, 1, int(np.ceil(d * d / 2)), 500 + k)
        a, ref = recover(B, rec), recover_reference(B, rec)
        assert a.converged and ref.converged
        assert abs(a.nuclear_value - ref.nuclear_value) <= 1e-5
        if np.linalg.norm(a.sigma_star - rho) <= 1e-4:
            assert np.linalg.norm(a.sigma_star - ref.sigma_star) <= 1e-3


@pytest.mark.parametrize("seed", range(10))
def test_converged_results_satisfy_contract(seed):
    opts = SolverOptions()
    B, rho, rec = _instance("sud", 5, 1 + seed % 2, 10 + seed, seed)
    res = recover(B, rec, opts)
    S = res.sigma_star
    assert np.array_equal(S, S.conj().T)
    if res.converged:
        assert res.constraint_residual <= opts.constraint_tol
        assert res.nuclear_value <= 1 + 1e-4      # the truth is feasible with norm 1


def test_iterates_stay_hermitian():
    B, rho, rec = _instance("pauli", 8, 2, 30, 3)
    op = SensingOperator(B, rec.omega)
    d = 8
    Z = np.zeros(d * d, complex)
    U = np.zeros(d * d, complex)
    for _ in range(50):
        X = kernels.project_affine(op.indptr, op.flat, op.vals, rec.values, Z - U)
        Z, _ = kernels.svt(X + U, d, 1.0, False)
        U = U + X - Z
        for v in (X, Z, U):
            M = v.reshape(d, d)
            assert np.abs(M - M.conj().T).max() <= 1e-12


def test_non_convergence_is_reported():
    B, rho, rec = _instance("sud", 6, 1, 20, 1)
    res = recover(B, rec, SolverOptions(max_iters=2))
    assert not res.converged and res.iterations == 2
    assert not success(rho, res)
    assert any(line.startswith("converged=false") for line in res.diagnostics())


def test_psd_variant_returns_psd():
    B, rho, rec = _instance("sud", 5, 1, 15, 8)
    res = recover(B, rec, SolverOptions(psd=True))
    assert np.linalg.eigvalsh(res.sigma_star)[0] >= -1e-10


def test_mismatched_record_rejected():
    rec = MeasurementRecord("pauli", 4, [0], [0.5])
    with pytest.raises(InvalidInputError):
        recover(sud_basis(4), rec)
    with pytest.raises(InvalidInputError):
        recover(pauli_basis(2), MeasurementRecord("pauli", 4, [], []))
    with pytest.raises(InvalidInputError):
        SolverOptions(penalty=0)
    with pytest.raises(InvalidInputError):
        SolverOptions(relax=2.5)


def test_pauli_d8_m40_success_rate():
    B = pauli_basis(3)
    hits = 0
    for t in range(200):
        rho = random_rank_r_density(8, 1, make_rng(8, t, 0))
        om = sample_omega(64, 40, make_rng(8, t, 1))
        hits += success(rho, recover(B, measure(rho, B, om)))
    assert hits / 200 >= 0.9


def _result(S, converged=True):
    return RecoveryResult(S, 1, 0.0, 0.0, 0.0, 1.0, converged)


def test_success_rules():
    rho = reference_state("rho1")
    assert success(rho, _result(rho))
    assert not success(rho, _result(np.eye(7) / 7))
    assert fidelity(rho, np.eye(7) / 7) == pytest.approx(1 / 7)
    assert not success(rho, _result(rho, converged=False))
    # tie at the threshold counts as success
    S = np.diag([0.999, 0.001])
    truth = np.diag([1.0, 0.0])
    f = fidelity(truth, S)
    assert success(truth, _result(S), SuccessCriterion("fidelity", f))
    assert not success(truth, _result(S), SuccessCriterion("fidelity", np.nextafter(f, 2)))
    fro = SuccessCriterion.parse("frobenius:1e-3")
    assert fro.kind is CriterionKind.FROBENIUS and fro.threshold == 1e-3
    assert success(truth, _result(truth + 1e-4 * np.eye(2)), fro)
    assert str(SuccessCriterion()) == "fidelity:0.999"


def test_rho1_m46_fails_exactly_when_h1_missing():
    # rho1 = |0><0| is pinned down by 46 SU(7) settings unless the first diagonal
    # generator h_1 (index 43) is dropped; with it gone the program prefers a
    # state of smaller nuclear norm.
    B = sud_basis(7)
    rho = reference_state("rho1")
    rng = make_rng(4646)
    seen = {True: 0, False: 0}
    for _ in range(150):
        om = sample_omega(49, 46, rng)
        ok = success(rho, recover(B, measure(rho, B, om)))
        assert ok == (43 in om)
        seen[ok] += 1
    missing = [np.setdiff1d(np.arange(49), [43, a, b]) for a, b in [(0, 1), (5, 48), (20, 30)]]
    for om in missing:
        assert not success(rho, recover(B, measure(rho, B, om)))
    assert seen[True] and seen[False]
