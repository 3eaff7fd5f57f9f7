import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ks_2samp, unitary_group

from qudit_cs.errors import BlockLeakageError, InvalidInputError
from qudit_cs.matcore import as_density, numerical_rank
from qudit_cs.states import (
    EmbeddingPlan, StateSpec, build_swap_W, dilation_check, embed, extract, leakage, make_rng,
    make_state, reference_state, plan_embedding, random_rank_r_density,
)

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**63 - 1))
def test_random_state_is_valid_with_exact_rank(d, r, seed):
    r = min(r, d)
    rho = random_rank_r_density(d, r, seed)
    as_density(rho)
    assert numerical_rank(rho) == r
    assert np.array_equal(rho, random_rank_r_density(d, r, seed))


def test_random_state_examples():
    assert np.allclose(random_rank_r_density(1, 1, 3), [[1.0]])
    rho = random_rank_r_density(9, 1, 5)
    assert np.linalg.norm(rho @ rho - rho) <= 1e-10
    with pytest.raises(InvalidInputError):
        random_rank_r_density(3, 4, 0)


def test_full_rank_mean_is_maximally_mixed():
    # average of 1e5 draws; each entry has std <= ~0.15 so the mean is within ~1e-3
    d, n = 4, 100_000
    rng = make_rng(99)
    G = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    R = G @ G.conj().transpose(0, 2, 1)
    R /= np.trace(R, axis1=1, axis2=2).real[:, None, None]
    assert np.abs(R.mean(axis=0) - np.eye(d) / d).max() <= 2e-2
    # the library routine draws from the same law
    lib = np.mean([random_rank_r_density(d, d, k) for k in range(5000)], axis=0)
    assert np.abs(lib - np.eye(d) / d).max() <= 2e-2


def test_unitary_invariance_ks():
    d, r, n = 4, 2, 10_000
    top = np.empty(n)
    rot = np.empty(n)
    U = unitary_group.rvs(d, size=n, random_state=17)
    for k in range(n):
        top[k] = np.linalg.eigvalsh(random_rank_r_density(d, r, 2 * k))[-1]
        rho = random_rank_r_density(d, r, 2 * k + 1)
        rot[k] = np.linalg.eigvalsh(U[k] @ rho @ U[k].conj().T)[-1]
    assert ks_2samp(top, rot).pvalue > 0.01
    # and the diagonal entries are exchangeable: rho_00 vs rho_33
    d00 = [random_rank_r_density(d, r, 50_000 + k)[0, 0].real for k in range(4000)]
    d33 = [random_rank_r_density(d, r, 60_000 + k)[3, 3].real for k in range(4000)]
    assert ks_2samp(d00, d33).pvalue > 0.01


def test_make_rng_streams():
    a = make_rng(1, 2, 3).standard_normal(4)
    assert np.array_equal(a, make_rng(1, 2, 3).standard_normal(4))
    assert not np.array_equal(a, make_rng(1, 2, 4).standard_normal(4))
    g = np.random.default_rng(0)
    assert make_rng(g) is g
    assert make_rng(1).bit_generator.__class__.__name__ == "Philox"


def test_reference_states():
    r1 = reference_state("rho1")
    assert np.array_equal(r1, np.diag([1.0] + [0.0] * 6))
    r2 = reference_state("rho2")
    assert np.allclose(r2, 1 / 7) and np.trace(r2).real == pytest.approx(1.0)
    w, V = np.linalg.eigh(r2)
    assert w[-1] == pytest.approx(1.0) and numerical_rank(r2) == 1
    assert np.allclose(np.abs(V[:, -1]), 1 / np.sqrt(7))


def test_state_spec_rules():
    with pytest.raises(InvalidInputError):
        StateSpec(5, 1, "rho1")
    assert make_state(StateSpec(5, 1, "rho1", generalized=True)).shape == (5, 5)
    with pytest.raises(InvalidInputError):
        StateSpec(3, 4)
    with pytest.raises(InvalidInputError):
        StateSpec(3, 1, "file")
    assert np.array_equal(make_state(StateSpec(6, 2, "haar-rank", 4)), random_rank_r_density(6, 2, 4))


def test_state_from_file(tmp_path):
    from qudit_cs.matcore import save_matrix
    rho = random_rank_r_density(3, 2, 0)
    save_matrix(tmp_path / "s.txt", rho)
    assert np.allclose(make_state(StateSpec(3, 2, "file", path=str(tmp_path / "s.txt"))), rho)
    with pytest.raises(InvalidInputError):
        make_state(StateSpec(4, 2, "file", path=str(tmp_path / "s.txt")))


@pytest.mark.parametrize("d1,d2", [(2, 2), (3, 4), (5, 8), (7, 8), (8, 8), (9, 16), (15, 16), (16, 16), (31, 32)])
def test_plan_embedding(d1, d2):
    p = plan_embedding(d1)
    assert p.d2 == d2 and d1 <= p.d2 < 2 * d1
    with pytest.raises(InvalidInputError):
        EmbeddingPlan(5, 4)
    with pytest.raises(InvalidInputError):
        EmbeddingPlan(5, 12)


def test_swap_examples():
    assert np.array_equal(build_swap_W(EmbeddingPlan(2, 2)), SWAP)
    W = build_swap_W(EmbeddingPlan(2, 4))
    e = np.zeros(8); e[1 * 4 + 0] = 1           # |1_S>|0_A>
    f = np.zeros(8); f[0 * 4 + 1] = 1           # |0_S>|1_A>
    assert np.array_equal(W @ e, f)


@pytest.mark.parametrize("d1", [2, 3, 5, 7, 12])
def test_swap_closed_form(d1):
    plan = plan_embedding(d1)
    d2 = plan.d2
    W = build_swap_W(plan)
    assert np.linalg.norm(W @ W.conj().T - np.eye(d1 * d2)) <= 1e-12
    for i in range(d1):
        for k in range(d2):
            e = np.zeros(d1 * d2); e[i * d2 + k] = 1
            out = W @ e
            target = k * d2 + i if k < d1 else i * d2 + k
            assert out[target] == 1 and np.count_nonzero(out) == 1


def test_embed_extract_roundtrip():
    plan = plan_embedding(7)
    rho = reference_state("rho1")
    assert np.array_equal(embed(rho, plan), np.diag([1.0] + [0.0] * 7))
    for seed in range(10):
        rho = random_rank_r_density(7, 1 + seed % 4, seed)
        E = embed(rho, plan)
        assert numerical_rank(E) == numerical_rank(rho)
        assert leakage(E, 7) == 0.0
        assert np.array_equal(extract(E, 7), rho / np.trace(rho).real)
    with pytest.raises(InvalidInputError):
        embed(np.eye(3) / 3, plan)


def test_extract_leakage():
    plan = plan_embedding(3)
    rho = random_rank_r_density(3, 1, 0)
    E = embed(rho, plan)
    E[0, 3] = E[3, 0] = 1e-9 / np.sqrt(2)
    assert leakage(E, 3) == pytest.approx(1e-9, rel=1e-6)
    assert np.allclose(extract(E, 3), rho)
    E[0, 3] = E[3, 0] = 1e-3
    with pytest.raises(BlockLeakageError) as info:
        extract(E, 3)
    assert info.value.leaked_mass == pytest.approx(np.sqrt(2) * 1e-3)
    assert extract(E, 3, tol=np.inf).shape == (3, 3)


def swap_conjugation_residual(d1, rho):
    plan = plan_embedding(d1)
    d2 = plan.d2
    W = build_swap_W(plan)
    zero_a = np.zeros((d2, d2)); zero_a[0, 0] = 1
    zero_s = np.zeros((d1, d1)); zero_s[0, 0] = 1
    lhs = W @ np.kron(rho, zero_a) @ W.conj().T
    rhs = np.kron(zero_s, embed(rho, plan))
    return float(np.linalg.norm(lhs - rhs))


@pytest.mark.parametrize("d1", [3, 7])
def test_swap_moves_state_onto_ancilla(d1):
    for seed in range(10):
        assert swap_conjugation_residual(d1, random_rank_r_density(d1, 1 + seed % d1, seed)) <= 1e-12


def test_dilation():
    rep = dilation_check(SWAP)
    assert rep.ok() and rep.h_squared_residual == 0.0
    rep = dilation_check(build_swap_W(plan_embedding(7)))
    assert rep.h_squared_residual <= 1e-10
    assert rep.exp_residual <= 1e-10
    assert rep.block_residual <= 1e-10     # W is real symmetric, so H = sigma_x (x) W
    assert max(rep.series_residuals.values()) <= 1e-10
    with pytest.raises(InvalidInputError):
        dilation_check(2 * np.eye(3))
