import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hydrobound.errors import HorizonExceeded, RingTooLarge
from hydrobound.generator import ModelSpec, Term, build, dephasing_only, eval_at, xxz_dephasing
from hydrobound.pauli import LocalOperator
from hydrobound.ring import (RingOperator, charge_sum, current_operator, decay_profile, estimate_A,
                             evolve, lr_cone, ring_generator, ring_pauli, trajectory)

from oracles import PAULI, lindblad_dense

# A at delta=0.5, c=2, L=8 with tau=1/8 over the default 200-point grid, locked once
A_REGRESSION = 11.456575732564465


def ring_dense(label_at: dict, L: int) -> np.ndarray:
    m = np.array([[1.0 + 0j]])
    for s in range(L):
        m = np.kron(m, PAULI[label_at.get(s, "I")])
    return m


def ring_pattern(pattern: str, x: int, L: int) -> np.ndarray:
    return ring_dense({(x + j) % L: ch for j, ch in enumerate(pattern) if ch != "I"}, L)


def dense_ring_lindbladian(ham, jumps, c, L, O):
    H = sum(coef * ring_pattern(p, x, L) for coef, p in ham for x in range(L)) if ham else 0 * O
    Ls = [coef * ring_pattern(p, x, L) for coef, p in jumps for x in range(L)]
    return lindblad_dense(H, Ls, c, O)


def test_ring_too_large():
    with pytest.raises(RingTooLarge):
        ring_generator(xxz_dephasing(1.0, 1.0), 11)


def test_charge_and_identity_annihilated():
    for L in (6, 8):
        gen = ring_generator(xxz_dephasing(0.8, 1.3), L)
        assert np.abs(gen(charge_sum(xxz_dephasing(0.8, 1.3), L))).max() <= 1e-12
        assert np.abs(gen(np.eye(2 ** L, dtype=complex))).max() <= 1e-12


def test_dephasing_on_x():
    L = 6
    gen = ring_generator(dephasing_only(1.0), L)
    X0 = ring_pauli(L, {0: "X"}).toarray()
    np.testing.assert_allclose(gen(X0), -4 * X0, atol=1e-14)


def test_generator_matches_dense_lindbladian():
    rng = np.random.default_rng(3)
    L = 6
    ham = [(1.0, "XX"), (1.0, "YY"), (0.6, "ZZ"), (0.3, "XZX")]
    jumps = [(1.0, "Z")]
    m = ModelSpec([Term(a, p) for a, p in ham], [Term(a, p) for a, p in jumps], c=0.7)
    O = rng.normal(size=(2 ** L, 2 ** L)) + 1j * rng.normal(size=(2 ** L, 2 ** L))
    np.testing.assert_allclose(ring_generator(m, L)(O), dense_ring_lindbladian(ham, jumps, 0.7, L, O), atol=1e-11)


def test_ring_reproduces_sector_generator():
    # translation sums sum_x e^{-ikx} T_x O_a on the 8-site ring, k = 2 pi q / 8
    L, n = 8, 3
    m = xxz_dephasing(0.9, 1.1, n=n)
    g = build(m)
    gen = ring_generator(m, L)
    strings = g.basis.strings

    def tsum(s, k):
        out = np.zeros((2 ** L, 2 ** L), dtype=complex)
        for x in range(L):
            out += np.exp(-1j * k * x) * ring_dense({(x + j) % L: ch for j, ch in s.items}, L)
        return out

    for q in (1, 3):
        k = 2 * np.pi * q / L
        A = eval_at(g, k).toarray()
        for a in np.flatnonzero(g.loss == 0):
            expect = sum(A[b, a] * tsum(strings[b], k) for b in np.flatnonzero(np.abs(A[:, a]) > 0))
            got = gen(tsum(strings[a], k))
            assert np.abs(got - expect).max() <= 1e-12


def test_evolve_zero_time_identity():
    gen = ring_generator(xxz_dephasing(1.0, 1.0), 6)
    J, _ = current_operator(xxz_dephasing(1.0, 1.0))
    O = RingOperator.from_local(J, 6)
    np.testing.assert_array_equal(evolve(gen, O, 0.0).matrix, O.matrix)


@pytest.mark.parametrize("t", [0.3, 1.1])
def test_unitary_evolution_preserves_norm(t):
    m = xxz_dephasing(0.7, 0.0)
    gen = ring_generator(m, 6)
    O = RingOperator.from_local(LocalOperator.from_label("XY"), 6)
    assert abs(evolve(gen, O, t).norm() - O.norm()) <= 1e-8


def test_dephasing_norm_decay():
    c = 0.8
    gen = ring_generator(dephasing_only(c), 6)
    O = RingOperator.from_local(LocalOperator.from_label("X"), 6)
    for t in (0.2, 0.9):
        assert evolve(gen, O, t).norm() == pytest.approx(np.exp(-4 * c * t), rel=1e-8)


def test_current_operator_xxz():
    J, vC = current_operator(xxz_dephasing(1.0, 2.0))
    ref = LocalOperator.from_label("YX", coef=2j) - LocalOperator.from_label("XY", coef=2j)
    assert J.allclose(ref, atol=1e-14)
    assert vC == pytest.approx((4.0, 4.0), abs=1e-12)


def test_current_operator_dephasing_only():
    J, vC = current_operator(dephasing_only(1.0))
    assert len(J) == 0 and vC == (0.0, 0.0)


@pytest.mark.parametrize("c,delta", [(1.0, 0.5), (4.0, 0.5), (1.0, 1.5), (4.0, 1.5)])
def test_current_velocity_independent_of_parameters(c, delta):
    assert current_operator(xxz_dephasing(delta, c))[1] == pytest.approx((4.0, 4.0), abs=1e-12)


def test_decay_profile_initial_rate_nonzero():
    m = xxz_dephasing(1.0, 1.0)
    J, _ = current_operator(m)
    prof = decay_profile(m, J, [0.0, 0.1], L=8)
    assert prof.norms[0] > 0


def test_decay_profile_dephasing_analytic():
    c = 1.5
    ts = np.linspace(0.0, 2.0, 9)
    prof = decay_profile(dephasing_only(c), LocalOperator.from_label("X"), ts, L=6)
    np.testing.assert_allclose(prof.norms, 4 * c * np.exp(-4 * c * ts), rtol=1e-8, atol=1e-11)


def test_decay_profile_horizon():
    m = xxz_dephasing(1.0, 1.0)
    J, _ = current_operator(m)
    with pytest.raises(HorizonExceeded):
        decay_profile(m, J, [0.1, 5.0], L=8)


def test_late_decay_monotone_strong_dephasing():
    m = xxz_dephasing(1.0, 2.0)
    J, _ = current_operator(m)
    prof = decay_profile(m, J, L=8)
    tail = prof.norms[len(prof.norms) // 2:]
    assert np.all(np.diff(tail) < 0)


def test_decay_profile_ring_size_consistency():
    m = xxz_dephasing(0.5, 2.0)
    J, _ = current_operator(m)
    ts = np.linspace(0.02, 0.4, 8)
    a = decay_profile(m, RingOperator.from_local(J, 7), ts, L=7).norms
    b = decay_profile(m, RingOperator.from_local(J, 8), ts, L=8).norms
    np.testing.assert_allclose(a, b, rtol=1e-2)


def test_estimate_A_dephasing_only():
    c = 1.3
    A = estimate_A(dephasing_only(c), 1 / (4 * c), L=6, operator=LocalOperator.from_label("X"))
    assert A == pytest.approx(1.0, rel=1e-7)


def test_estimate_A_regression():
    A = estimate_A(xxz_dephasing(0.5, 2.0), 0.125, L=8)
    assert A == pytest.approx(A_REGRESSION, rel=1e-6)


@settings(max_examples=4, deadline=None)
@given(st.floats(0.2, 1.5), st.floats(0.5, 4.0))
def test_estimate_A_positive(delta, c):
    assert estimate_A(xxz_dephasing(delta, c), 0.2, L=6) > 0


def test_lr_cone_commutator_zero_at_t0():
    cone = lr_cone(xxz_dephasing(1.0, 0.0), times=np.linspace(0, 0.4, 5), L=8)
    assert np.all(cone.norms[0, 1:] == 0)


def test_lr_cone_without_hamiltonian():
    assert lr_cone(dephasing_only(1.0), L=6).velocity == 0


@pytest.mark.xfail(strict=True, reason="the 1% contour of the Frobenius commutator norm is set by early-time "
                   "t^x tails at small x; see notes on the cone probe")
def test_lr_cone_within_analytic_velocity():
    delta = 1.0
    cone = lr_cone(xxz_dephasing(delta, 0.0), L=10)
    assert cone.velocity <= (2 + delta) * 1.2


@settings(max_examples=5, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.05, 0.6))
def test_contraction_with_hermitian_jumps(delta, c, t):
    m = xxz_dephasing(delta, c)
    gen = ring_generator(m, 6)
    O = RingOperator.from_local(LocalOperator.from_label("XZY") + LocalOperator.from_label("X", coef=0.5), 6)
    assert evolve(gen, O, t).norm() <= O.norm() * (1 + 1e-9)


def test_trajectory_order():
    gen = ring_generator(dephasing_only(1.0), 4)
    X0 = ring_pauli(4, {0: "X"}).toarray()
    ts = [0.0, 0.1, 0.5]
    out = list(trajectory(gen, RingOperator(X0, 4, (0,)), ts))
    assert [t for t, _ in out] == ts
    for t, M in out:
        np.testing.assert_allclose(M, np.exp(-4 * t) * X0, rtol=1e-8, atol=1e-12)
