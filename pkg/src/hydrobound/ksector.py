"""Canonical truncated basis of the momentum-k operator sector.

A basis label is a Pauli string starting at site 0 with non-identity
endpoints. A lattice string ``p`` equals ``T_m[s]`` for a unique canonical
``s`` and shift ``m``; inside the sector its image is ``exp(i k m) |s)``.

Letter codes used by the vectorised paths: 0=I, 1=X, 2=Y, 3=Z.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import IdentityString, TruncationTooLarge
from .pauli import LETTERS, LocalOperator, PauliString, as_operator

TRUNCATION_CAP = 9


def _keys(codes: np.ndarray) -> np.ndarray:
    """Injective integer key of zero-padded canonical code rows (site j has weight 4**j)."""
    w = 4 ** np.arange(codes.shape[1], dtype=np.int64)
    return codes.astype(np.int64) @ w


@dataclass(frozen=True, eq=False)
class KBasis:
    n: int
    codes: np.ndarray = field(repr=False)  # (size, n) uint8, zero padded on the right

    def __len__(self):
        return self.codes.shape[0]

    @cached_property
    def strings(self) -> tuple[PauliString, ...]:
        return tuple(
            PauliString({j: LETTERS[c] for j, c in enumerate(row) if c})
            for row in self.codes
        )

    @cached_property
    def index(self) -> dict[PauliString, int]:
        return {s: i for i, s in enumerate(self.strings)}

    @cached_property
    def extents(self) -> np.ndarray:
        nz = self.codes != 0
        return self.n - np.argmax(nz[:, ::-1], axis=1)

    @cached_property
    def _sorted(self) -> tuple[np.ndarray, np.ndarray]:
        keys = _keys(self.codes)
        order = np.argsort(keys)
        return keys[order], order

    def lookup_codes(self, codes: np.ndarray) -> np.ndarray:
        """Basis indices of canonical code rows (width n); -1 where absent."""
        skeys, order = self._sorted
        keys = _keys(codes)
        pos = np.searchsorted(skeys, keys)
        pos = np.minimum(pos, len(skeys) - 1)
        hit = skeys[pos] == keys
        return np.where(hit, order[pos], -1)

    def position(self, s: PauliString) -> int:
        return self.index[s]

    def unit(self, s: PauliString | int) -> np.ndarray:
        v = np.zeros(len(self))
        v[s if isinstance(s, (int, np.integer)) else self.index[s]] = 1.0
        return v


def basis_size(n: int) -> int:
    return 3 * 4 ** (n - 1)


def canonical_basis(n: int, cap: int = TRUNCATION_CAP) -> KBasis:
    """All canonical strings of extent <= n, ordered by extent then lexicographically (I<X<Y<Z)."""
    if n < 1:
        raise ValueError("truncation length must be >= 1")
    if n > cap:
        raise TruncationTooLarge(f"truncation n={n} exceeds cap {cap}")
    blocks = [np.array([[1], [2], [3]], dtype=np.uint8)]
    for e in range(2, n + 1):
        # endpoints in {X,Y,Z}; interior free
        inner = np.array(list(itertools.product(range(4), repeat=e - 2)), dtype=np.uint8).reshape(4 ** (e - 2), e - 2)
        ends = np.array(list(itertools.product(range(1, 4), repeat=2)), dtype=np.uint8)
        first = np.repeat(ends[:, :1], len(inner), axis=0)
        last = np.repeat(ends[:, 1:], len(inner), axis=0)
        mid = np.tile(inner, (len(ends), 1))
        rows = np.hstack([first, mid, last])
        order = np.lexsort(rows.T[::-1])
        blocks.append(rows[order])
    codes = np.zeros((basis_size(n), n), dtype=np.uint8)
    i = 0
    for b in blocks:
        codes[i:i + len(b), : b.shape[1]] = b
        i += len(b)
    return KBasis(n, codes)


def canonicalize(p: PauliString) -> tuple[PauliString, int]:
    """Return ``(s, shift)`` with ``T_shift[s] == p`` and ``s`` starting at site 0."""
    if p.is_identity():
        raise IdentityString("the identity has no image in a k != 0 sector")
    shift = p.support[0]
    return p.translate(-shift), shift


class PhasePolyVector:
    """Sparse vector whose entries are Laurent polynomials sum_m c_m exp(i k m)."""

    __slots__ = ("size", "entries")

    def __init__(self, size: int, entries: dict[int, dict[int, complex]] | None = None):
        self.size = size
        self.entries = entries or {}

    def add(self, index: int, grade: int, coef: complex):
        row = self.entries.setdefault(index, {})
        row[grade] = row.get(grade, 0) + coef

    def entry(self, index: int) -> dict[int, complex]:
        return dict(self.entries.get(index, {}))

    def __add__(self, other: "PhasePolyVector") -> "PhasePolyVector":
        out = PhasePolyVector(self.size, {i: dict(r) for i, r in self.entries.items()})
        for i, r in other.entries.items():
            for m, c in r.items():
                out.add(i, m, c)
        return out

    def scaled(self, a: complex) -> "PhasePolyVector":
        return PhasePolyVector(self.size, {i: {m: a * c for m, c in r.items()}
                                           for i, r in self.entries.items()})

    def allclose(self, other: "PhasePolyVector", atol: float = 1e-12) -> bool:
        diff = self + other.scaled(-1)
        return all(abs(c) <= atol for r in diff.entries.values() for c in r.values())


@dataclass(frozen=True)
class KVector:
    """Coordinates of an element of the momentum-k sector at a fixed numeric k."""

    basis: KBasis
    k: float
    coeffs: np.ndarray

    def __post_init__(self):
        if len(self.coeffs) != len(self.basis):
            raise ValueError("coefficient length does not match basis size")


def embed(o, basis: KBasis) -> tuple[PhasePolyVector, float]:
    """Image of a local operator in the truncated sector, plus the dropped weight.

    The identity component has no image and is not counted as loss; strings
    longer than the truncation are dropped and their |coefficients| summed.
    """
    o = as_operator(o)
    vec = PhasePolyVector(len(basis))
    loss = 0.0
    index = basis.index
    for p, coef in o.items():
        if p.is_identity():
            continue
        s, m = canonicalize(p)
        if s.extent > basis.n:
            loss += abs(coef)
            continue
        vec.add(index[s], m, coef)
    return vec, loss


def eval_vector(v: PhasePolyVector, k: float) -> np.ndarray:
    out = np.zeros(v.size, dtype=complex)
    for i, row in v.entries.items():
        out[i] = sum(c * np.exp(1j * k * m) for m, c in row.items())
    return out


def pullback(coeffs: np.ndarray, basis: KBasis, atol: float = 1e-14) -> LocalOperator:
    """Local operator sum_a v_a O_a with every label placed at its canonical position."""
    strings = basis.strings
    return LocalOperator({strings[i]: coeffs[i] for i in np.flatnonzero(np.abs(coeffs) > atol)})
