import itertools
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grouprip.analysis import (
    coherence_mu,
    coherence_omega,
    disjoint_support_check,
    factorization_check,
    gnsp_falsify,
    gric,
    lift_opnorm_V,
    lift_V,
    lift_V_tilde,
)
from grouprip.basis import dft_matrix, make_basis, random_unitary
from grouprip.bounds import grip_to_gnsp
from grouprip.group_model import GroupPartition, group_norm, random_group_sparse
from grouprip.sensing import BlockDiagonalOperator, SubgaussianEnsemble, draw_operator

from conftest import crandn


def mu_oracle(U, P, d):
    # loop over rows and groups of the explicit matrix
    best = 0.0
    for row in U:
        for grp in P.groups:
            best = max(best, float(np.linalg.norm(row[list(grp)])))
    return min(math.sqrt(d) * best, 1.0)


def test_mu_identity_is_one():
    for D, L, g in [(4, 2, 2), (16, 4, 4), (64, 8, 1)]:
        assert coherence_mu(make_basis("identity", D, L), GroupPartition.contiguous(D, g)).mu == 1.0


@pytest.mark.parametrize("D,L,g", [(4, 2, 2), (16, 4, 4), (64, 8, 1), (64, 16, 2)])
def test_mu_dft_closed_form(D, L, g):
    B = make_basis("dft", D, L)
    P = GroupPartition.contiguous(D, g)
    rep = coherence_mu(B, P)
    assert abs(rep.mu - min(math.sqrt(g / L), 1.0)) <= 1e-12
    assert abs(rep.mu - mu_oracle(B.matrix, P, D // L)) <= 1e-12
    assert rep.mu <= 1


def test_mu_f4_worked_example():
    # rows of F_4 have group-inf norm 1/sqrt(2); times sqrt(d) = sqrt(2) gives 1
    rep = coherence_mu(make_basis("dft", 4, 2), GroupPartition.contiguous(4, 2))
    assert rep.mu == pytest.approx(1.0, abs=1e-12)


def omega_oracle(B, P):
    L, d = B.sensors, B.block_dim
    first = max(np.linalg.svd(np.stack([B.partial_block(l)[:, i] for l in range(L)]), compute_uv=False)[0] for i in range(B.dim))
    second = max(
        np.linalg.svd(B.partial_block(l)[:, list(grp)], compute_uv=False)[0] for l in range(L) for grp in P.groups
    )
    return min(math.sqrt(P.max_group_size) * first, math.sqrt(L) * second)


@pytest.mark.parametrize("kind", ["identity", "dft", "random"])
def test_omega_against_svd_oracle(kind):
    B = random_unitary(12, 3, 2) if kind == "random" else make_basis(kind, 12, 3)
    for g in (1, 2, 3):
        P = GroupPartition.contiguous(12, g)
        assert coherence_omega(B, P).omega == pytest.approx(omega_oracle(B, P), rel=1e-12)


def test_omega_singletons():
    B = make_basis("dft", 8, 2)
    P = GroupPartition.singletons(8)
    rep = coherence_omega(B, P)
    first = max(np.linalg.norm(lift_V_tilde(B, e), 2) for e in np.eye(8))
    assert rep.omega == pytest.approx(min(first, rep.branch_taken["omega_second"]), rel=1e-12)
    assert rep.branch_taken["omega_first"] == pytest.approx(first, rel=1e-12)
    assert coherence_omega(make_basis("identity", 8, 2), P).omega == pytest.approx(1.0, abs=1e-12)


def test_omega_single_sensor_at_most_one():
    for kind in ("identity", "dft"):
        assert coherence_omega(make_basis(kind, 6, 1), GroupPartition.contiguous(6, 3)).omega <= 1 + 1e-12
    assert coherence_omega(random_unitary(6, 1, 0), GroupPartition.contiguous(6, 2)).omega <= 1 + 1e-12


def test_coherence_dimension_mismatch_and_json():
    with pytest.raises(ValueError):
        coherence_mu(make_basis("dft", 8, 2), GroupPartition.contiguous(4, 2))
    rep = coherence_omega(make_basis("dft", 8, 2), GroupPartition.contiguous(8, 2))
    assert json.loads(rep.to_json())["mu"] == rep.mu


def test_lift_examples():
    B = make_basis("identity", 4, 2)
    e0 = np.eye(4)[0]
    assert lift_opnorm_V(B, e0) == 1
    Vt = lift_V_tilde(B, e0)
    expected = np.zeros((2, 2))
    expected[0, 0] = 1
    np.testing.assert_array_equal(Vt, expected)
    with pytest.raises(ValueError):
        lift_V_tilde(B, np.zeros(3))


@given(st.integers(0, 10**6), st.sampled_from([(4, 2), (6, 3), (8, 2)]), st.integers(1, 3))
def test_lift_identities(seed, dims, m):
    D, L = dims
    B = random_unitary(D, L, seed)
    x = crandn(np.random.default_rng(seed), D)
    nx = np.linalg.norm(x)
    V = lift_V(B, x, m)
    assert lift_opnorm_V(B, x) == pytest.approx(np.linalg.svd(V, compute_uv=False)[0], rel=1e-10)
    assert lift_opnorm_V(B, x) <= nx * (1 + 1e-12)
    assert np.linalg.norm(V) == pytest.approx(math.sqrt(m) * nx, rel=1e-10)
    Vt = lift_V_tilde(B, x)
    assert np.linalg.norm(Vt) == pytest.approx(nx, rel=1e-10)
    assert np.linalg.norm(Vt, 2) <= nx * (1 + 1e-12)


@given(st.integers(0, 10**6), st.sampled_from(["dft", "identity", "random"]), st.sampled_from([1, 2, 4]))
def test_opnorm_bounds_via_coherence(seed, kind, g):
    D, L = 16, 4
    B = random_unitary(D, L, seed) if kind == "random" else make_basis(kind, D, L)
    P = GroupPartition.contiguous(D, g)
    rep = coherence_omega(B, P)
    r = np.random.default_rng(seed)
    s = int(r.integers(1, P.num_groups + 1))
    x = random_group_sparse(P, s, 0, rng=r).values
    l1 = group_norm(x, P, 1)
    assert lift_opnorm_V(B, x) <= rep.mu * l1 + 1e-10
    assert rep.mu * l1 <= math.sqrt(s) * rep.mu + 1e-10
    assert np.linalg.norm(lift_V_tilde(B, x), 2) <= l1 * rep.omega + 1e-10


def test_factorization_examples():
    d, L = 3, 2
    op = BlockDiagonalOperator(np.stack([np.eye(d)] * L), make_basis("identity", 6, 2), 1.0)
    assert factorization_check(op, crandn(np.random.default_rng(0), 6)) == 0
    op = draw_operator(SubgaussianEnsemble("gaussian", 1), 3, 4, 2, "independent", make_basis("dft", 8, 2))
    assert factorization_check(op, crandn(np.random.default_rng(1), 8)) <= 1e-12
    assert factorization_check(op, np.zeros(8)) == 0
    shared = draw_operator(SubgaussianEnsemble("gaussian", 1), 3, 4, 2, "shared", make_basis("dft", 8, 2))
    assert factorization_check(shared, crandn(np.random.default_rng(2), 8)) <= 1e-12


def brute_gric(A, P, s):
    # sample-free oracle: explicit SVD of every column-restricted submatrix
    worst = 0.0
    for T in itertools.combinations(range(P.num_groups), s):
        idx = P.indices(T)
        sv = np.linalg.svd(A[:, idx], compute_uv=False)
        lo = sv[-1] ** 2 if len(sv) == len(idx) else 0.0
        worst = max(worst, sv[0] ** 2 - 1, 1 - lo)
    return worst


def test_gric_trivial_examples():
    B = make_basis("identity", 6, 2)
    eye = BlockDiagonalOperator(np.stack([np.eye(3)] * 2), B, 1.0)
    P = GroupPartition.contiguous(6, 2)
    for s in (1, 2, 3):
        assert gric(eye, P, s).delta == 0
        assert gric(BlockDiagonalOperator(eye.blocks, B, math.sqrt(2)), P, s).delta == pytest.approx(1.0, abs=1e-12)


def test_gric_exact_vs_mc_and_oracle():
    r = np.random.default_rng(4)
    A = r.standard_normal((3, 4)) / math.sqrt(3)
    P = GroupPartition.contiguous(4, 2)
    exact = gric(A, P, 1)
    mc = gric(A, P, 1, mode="monte_carlo", trials=50, seed=1)
    assert exact.supports_evaluated == 2
    assert mc.delta == pytest.approx(exact.delta, abs=1e-12)
    assert exact.delta == pytest.approx(brute_gric(A, P, 1), abs=1e-12)
    assert len(exact.per_support_extremes) == 2


def test_gric_errors():
    A = np.eye(4)
    P = GroupPartition.contiguous(4, 1)
    with pytest.raises(ValueError):
        gric(A, P, 5)
    with pytest.raises(ValueError, match="cap"):
        gric(A, P, 2, cap=3)
    with pytest.raises(ValueError):
        gric(A, P, 1, mode="monte_carlo", trials=0)
    with pytest.raises(ValueError):
        gric(A, P, 1, mode="annealing")


@given(st.integers(0, 10**6))
def test_gric_properties(seed):
    r = np.random.default_rng(seed)
    D = int(r.choice([6, 8, 12]))
    g = int(r.choice([k for k in (1, 2, 3, 4) if D % k == 0 and D // k <= 6]))
    P = GroupPartition.contiguous(D, g)
    A = crandn(r, int(r.integers(2, D + 3)), D) / math.sqrt(2 * D)
    deltas = [gric(A, P, s).delta for s in range(1, P.num_groups + 1)]
    assert all(a <= b + 1e-12 for a, b in zip(deltas, deltas[1:]))
    s = int(r.integers(1, P.num_groups + 1))
    assert deltas[s - 1] == pytest.approx(brute_gric(A, P, s), abs=1e-10)
    mc = gric(A, P, s, mode="monte_carlo", trials=5, seed=seed)
    assert mc.delta <= deltas[s - 1] + 1e-12
    order = r.permutation(P.num_groups)
    assert gric(A, P.permuted(order), s).delta == pytest.approx(deltas[s - 1], abs=1e-12)


def test_gnsp_falsify_examples():
    P = GroupPartition.contiguous(6, 2)
    assert gnsp_falsify(np.eye(6), P, 1, 0.5, 1.0, trials=300, seed=0) == []
    found = gnsp_falsify(np.zeros((3, 6)), P, 1, 0.5, 1.0, trials=3, seed=0)
    assert found
    with pytest.raises(ValueError):
        gnsp_falsify(np.eye(6), P, 1, 0.5, 1.0, trials=0)


def test_gnsp_falsify_detects_null_space_direction():
    # A kills group 0 entirely: v on group 0 violates for every rho, tau
    P = GroupPartition.contiguous(4, 2)
    A = np.array([[0, 0, 1, 0], [0, 0, 0, 1.0]])
    assert gnsp_falsify(A, P, 1, 0.9, 10.0, trials=30, seed=2)


def test_gnsp_holds_for_tall_gaussian():
    r = np.random.default_rng(8)
    D = 8
    P = GroupPartition.contiguous(D, 2)
    A = r.standard_normal((400, D)) / math.sqrt(400)
    delta = gric(A, P, 2).delta
    c = grip_to_gnsp(delta)
    assert c.valid
    assert gnsp_falsify(A, P, 1, c.rho, c.tau, trials=10**4, seed=3) == []


def test_disjoint_support_examples():
    P = GroupPartition.contiguous(6, 2)
    assert disjoint_support_check(np.eye(6), P, 1, 0.1, trials=20) == 0
    r = np.random.default_rng(6)
    A = crandn(r, 10, 6) / math.sqrt(20)
    delta = gric(A, P, 2).delta
    assert disjoint_support_check(A, P, 1, delta, trials=20, seed=1, exhaustive=True) <= 1
    with pytest.raises(ValueError):
        disjoint_support_check(A, P, 2, delta, trials=5)


def test_disjoint_support_warns_when_delta_too_small():
    r = np.random.default_rng(7)
    A = crandn(r, 4, 6) / math.sqrt(8)
    P = GroupPartition.contiguous(6, 2)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        disjoint_support_check(A, P, 1, 1e-3, trials=10, seed=0)
    assert any(issubclass(x.category, RuntimeWarning) for x in w)
