import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hydrobound.errors import WindowTooLarge, WindowTooSmall
from hydrobound.pauli import (LocalOperator, PauliString, anticommutes, commutator, dissipator,
                              multiply, seminorm_bounds, spectral_norm, to_dense)

from oracles import PAULI

P = PauliString.from_label
op = LocalOperator.from_label

letters = st.sampled_from("IXYZ")
labels = st.lists(letters, min_size=1, max_size=4).map("".join)


def dense_label(label, w):
    m = np.array([[1.0 + 0j]])
    for j in range(w):
        m = np.kron(m, PAULI[label[j] if j < len(label) else "I"])
    return m


def test_multiply_single_site():
    assert multiply(P("X"), P("Y")) == (1j, P("Z"))
    ph, r = multiply(P("X"), P("X"))
    assert ph == 1 and r.is_identity()


def test_multiply_two_sites_matches_dense():
    ph, r = multiply(P("XY"), P("YX"))
    assert ph == 1 and r == P("ZZ")
    np.testing.assert_allclose(dense_label("XY", 2) @ dense_label("YX", 2), ph * dense_label(r.label(0), 2))


def test_commutator_examples():
    assert commutator(P("X"), P("Y")).allclose(op("Z", coef=2j))
    assert commutator(P("Z"), P("XY")).allclose(op("YY", coef=2j))
    assert commutator(P("Z"), P("ZZ")).is_zero()


def test_dissipator_examples():
    Z0 = op("Z")
    assert dissipator(Z0, op("X"), 1.0).allclose(op("X", coef=-4))
    both = dissipator(Z0, op("XY"), 1.0) + dissipator(op("Z", 1), op("XY"), 1.0)
    assert both.allclose(op("XY", coef=-8))
    for c in (0.3, 2.0):
        assert dissipator(Z0, op("ZZ"), c).is_zero(1e-15)


def test_to_dense_examples():
    np.testing.assert_array_equal(to_dense(op("Z"), [0]), np.diag([1, -1]))
    np.testing.assert_array_equal(to_dense(LocalOperator.identity(2.0), [0, 1]), 2 * np.eye(4))
    np.testing.assert_array_equal(to_dense(op("XY"), [0, 1]), np.kron(PAULI["X"], PAULI["Y"]))


def test_to_dense_window_errors():
    with pytest.raises(WindowTooSmall):
        to_dense(op("XY"), [0])
    with pytest.raises(WindowTooLarge):
        to_dense(op("X"), range(13))


def test_spectral_norm_examples():
    assert spectral_norm(op("Z")) == pytest.approx(1.0, abs=1e-14)
    J = op("YX", coef=2j) - op("XY", coef=2j)
    assert spectral_norm(J) == pytest.approx(4.0, abs=1e-12)
    assert spectral_norm(op("X") + op("Z")) == pytest.approx(np.sqrt(2), abs=1e-14)


def test_seminorm_examples():
    assert seminorm_bounds(op("Z")) == pytest.approx((1.0, 1.0), abs=1e-12)
    assert seminorm_bounds(LocalOperator.identity(3.0)) == (0.0, 0.0)
    assert seminorm_bounds(op("ZZ")) == pytest.approx((1.0, 1.0), abs=1e-12)


def test_identity_letters_not_stored():
    p = P("XIZ")
    assert p.support == (0, 2) and p.extent == 3


@given(labels, labels)
def test_multiply_agrees_with_dense(a, b):
    ph, r = multiply(P(a), P(b))
    w = max(len(a), len(b))
    rl = r.label(0, w) if not r.is_identity() else "I" * w
    np.testing.assert_allclose(dense_label(a, w) @ dense_label(b, w), ph * dense_label(rl, w), atol=1e-14)


@given(labels, labels)
def test_anticommutation_matches_commutator(a, b):
    assert anticommutes(P(a), P(b)) == (not commutator(P(a), P(b)).is_zero())


@settings(max_examples=40)
@given(st.lists(st.tuples(labels, st.floats(-2, 2)), min_size=1, max_size=4))
def test_seminorm_interval_ordered(terms):
    o = LocalOperator({P(l): c for l, c in terms})
    lo, hi = seminorm_bounds(o)
    assert 0 <= lo <= hi + 1e-12


@settings(max_examples=30)
@given(labels, st.floats(0.1, 3.0))
def test_dissipator_hermitian_jump_is_nonpositive(label, c):
    # (O, D[O]) <= 0 in the Hilbert-Schmidt product for Hermitian jumps
    o = op(label)
    d = dissipator(op("Z"), o, c)
    w = max(len(label), 1)
    val = np.trace(to_dense(o, range(w)).conj().T @ to_dense(d, range(w)) if len(d) else np.zeros((1, 1)))
    assert val.real <= 1e-12
