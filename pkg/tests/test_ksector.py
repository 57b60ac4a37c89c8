import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydrobound.errors import IdentityString, TruncationTooLarge
from hydrobound.ksector import (PhasePolyVector, basis_size, canonical_basis, canonicalize, embed,
                                eval_vector, pullback)
from hydrobound.pauli import LocalOperator, PauliString

from oracles import canonical_strings, exhaustive_canonical

P = PauliString.from_label


def test_small_bases():
    b1 = canonical_basis(1)
    assert [s.label(0) for s in b1.strings] == ["X", "Y", "Z"]
    b2 = canonical_basis(2)
    assert len(b2) == 12
    assert P("XY") in b2.index and P("XX") in b2.index
    assert P("XY", 1) not in b2.index


def test_size_closed_form_n7():
    assert basis_size(7) == 12288
    assert len(canonical_basis(7)) == 12288


def test_ordering_extent_then_letters():
    assert [s.label(0) for s in canonical_basis(4).strings] == canonical_strings(4)


def test_canonicalize_examples():
    assert canonicalize(P("XY", 1)) == (P("XY"), 1)
    assert canonicalize(P("Z")) == (P("Z"), 0)
    assert canonicalize(P("Y", -3)) == (P("Y"), -3)
    with pytest.raises(IdentityString):
        canonicalize(PauliString.identity())


def test_truncation_cap():
    with pytest.raises(TruncationTooLarge):
        canonical_basis(40)


def test_embed_examples():
    b = canonical_basis(3)
    v, loss = embed(LocalOperator.from_label("XY", 1), b)
    assert v.entry(b.position(P("XY"))) == {1: 1} and loss == 0
    v, loss = embed(LocalOperator.identity(2.5), b)
    assert v.entries == {} and loss == 0
    J = LocalOperator.from_label("YX", coef=2j) - LocalOperator.from_label("XY", coef=2j)
    v, _ = embed(J, b)
    assert v.entry(b.position(P("YX"))) == {0: 2j}
    assert v.entry(b.position(P("XY"))) == {0: -2j}


def test_embed_counts_truncation_loss():
    v, loss = embed(LocalOperator.from_label("XIIX", coef=0.5), canonical_basis(3))
    assert loss == 0.5 and v.entries == {}


def test_eval_vector_examples():
    v = PhasePolyVector(1, {0: {1: 1}})
    assert eval_vector(v, 0.0)[0] == pytest.approx(1)
    assert eval_vector(v, np.pi)[0] == pytest.approx(-1)
    w = PhasePolyVector(1, {0: {0: 2j, 2: -1}})
    assert eval_vector(w, np.pi / 2)[0] == pytest.approx(2j + 1)


@pytest.mark.parametrize("n", range(1, 7))
def test_basis_matches_exhaustive_enumeration(n):
    b = canonical_basis(n)
    got = {tuple(s.label(0)) for s in b.strings}
    assert got == exhaustive_canonical(n)
    assert len(b) == 3 * 4 ** (n - 1)


labels = st.lists(st.sampled_from("IXYZ"), min_size=1, max_size=4).map("".join).filter(lambda s: set(s) != {"I"})


@given(labels, st.integers(-5, 5))
def test_canonicalize_inverts_translation(label, shift):
    p = P(label, shift)
    s, m = canonicalize(p)
    assert s.translate(m) == p
    assert s.support[0] == 0 and s.letters[s.support[-1]] != "I"


@given(labels, st.integers(-3, 3), st.floats(-np.pi, np.pi))
def test_embedded_translate_picks_up_phase(label, shift, k):
    b = canonical_basis(4)
    o = LocalOperator.from_label(label)
    v0 = eval_vector(embed(o, b)[0], k)
    v1 = eval_vector(embed(o.translate(shift), b)[0], k)
    np.testing.assert_allclose(v1, np.exp(1j * k * shift) * v0, atol=1e-13)


@given(st.lists(st.tuples(labels, st.floats(-2, 2).filter(lambda x: abs(x) > 1e-3)), min_size=1, max_size=5))
def test_pullback_embed_roundtrip_at_k0(terms):
    b = canonical_basis(4)
    o = LocalOperator({P(l).translate(-P(l).support[0]): c for l, c in terms})
    v = eval_vector(embed(o, b)[0], 0.0)
    assert pullback(v, b).allclose(o.without_identity(), atol=1e-12)
