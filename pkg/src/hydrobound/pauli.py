"""Pauli-string algebra on the integer lattice.

A :class:`PauliString` is a finitely supported product of single-site Pauli
matrices; a :class:`LocalOperator` is a finite complex combination of them
(the empty string carries the identity coefficient).

Dense realizations order sites ascending, with the leftmost site as the most
significant tensor factor.
"""
from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .errors import WindowTooLarge, WindowTooSmall

LETTERS = "IXYZ"
DENSE_CAP = 12

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-site products a.b = phase * c
_SITE_PRODUCT = {
    ("X", "Y"): (1j, "Z"),
    ("Y", "Z"): (1j, "X"),
    ("Z", "X"): (1j, "Y"),
    ("Y", "X"): (-1j, "Z"),
    ("Z", "Y"): (-1j, "X"),
    ("X", "Z"): (-1j, "Y"),
}


def pauli_matrix(letter: str) -> np.ndarray:
    return _PAULI[letter]


def _site_product(a: str, b: str) -> tuple[complex, str]:
    if a == "I":
        return 1, b
    if b == "I":
        return 1, a
    if a == b:
        return 1, "I"
    return _SITE_PRODUCT[(a, b)]


class PauliString:
    """Immutable, hashable product of Pauli letters at integer sites."""

    __slots__ = ("_items", "_hash")

    def __init__(self, letters: Mapping[int, str] | None = None):
        items = []
        for site, letter in (letters or {}).items():
            if letter not in LETTERS:
                raise ValueError(f"unknown Pauli letter {letter!r}")
            if letter != "I":
                items.append((int(site), letter))
        self._items = tuple(sorted(items))
        self._hash = hash(self._items)

    @classmethod
    def from_label(cls, label: str, start: int = 0) -> "PauliString":
        """``from_label("XIY", 2)`` is X_2 Y_4."""
        return cls({start + j: s for j, s in enumerate(label)})

    @classmethod
    def identity(cls) -> "PauliString":
        return cls()

    @property
    def letters(self) -> dict[int, str]:
        return dict(self._items)

    @property
    def items(self) -> tuple[tuple[int, str], ...]:
        return self._items

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self._items)

    def is_identity(self) -> bool:
        return not self._items

    @property
    def extent(self) -> int:
        """max support site - min support site + 1 (0 for the identity)."""
        if not self._items:
            return 0
        return self._items[-1][0] - self._items[0][0] + 1

    def translate(self, shift: int) -> "PauliString":
        return PauliString({s + shift: l for s, l in self._items})

    def label(self, start: int | None = None, stop: int | None = None) -> str:
        if not self._items and start is None:
            return "I"
        lo = self._items[0][0] if start is None else start
        hi = self._items[-1][0] if stop is None else stop
        d = dict(self._items)
        return "".join(d.get(s, "I") for s in range(lo, hi + 1))

    def __eq__(self, other):
        return isinstance(other, PauliString) and self._items == other._items

    def __lt__(self, other):
        return self._items < other._items

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if not self._items:
            return "PauliString(I)"
        return "PauliString(" + " ".join(f"{l}{s}" for s, l in self._items) + ")"


def multiply(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, r)`` with ``p @ q == phase * r`` and phase in {+-1, +-i}."""
    a, b = p.letters, q.letters
    phase: complex = 1
    out = {}
    for site in set(a) | set(b):
        ph, letter = _site_product(a.get(site, "I"), b.get(site, "I"))
        phase *= ph
        if letter != "I":
            out[site] = letter
    return phase, PauliString(out)


def anticommutes(p: PauliString, q: PauliString) -> bool:
    a, b = p.letters, q.letters
    n = sum(1 for s, l in a.items() if s in b and b[s] != l)
    return n % 2 == 1


class LocalOperator:
    """Finite linear combination of Pauli strings with complex coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[PauliString, complex] | None = None):
        merged: dict[PauliString, complex] = {}
        for p, c in (terms or {}).items():
            merged[p] = merged.get(p, 0) + complex(c)
        self._terms = {p: c for p, c in merged.items() if c != 0}

    @classmethod
    def from_string(cls, p: PauliString, coef: complex = 1.0) -> "LocalOperator":
        return cls({p: coef})

    @classmethod
    def from_label(cls, label: str, start: int = 0, coef: complex = 1.0) -> "LocalOperator":
        return cls({PauliString.from_label(label, start): coef})

    @classmethod
    def identity(cls, coef: complex = 1.0) -> "LocalOperator":
        return cls({PauliString(): coef})

    @classmethod
    def zero(cls) -> "LocalOperator":
        return cls()

    @property
    def terms(self) -> dict[PauliString, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def coefficient(self, p: PauliString) -> complex:
        return self._terms.get(p, 0)

    @property
    def identity_coefficient(self) -> complex:
        return self._terms.get(PauliString(), 0)

    def without_identity(self) -> "LocalOperator":
        return LocalOperator({p: c for p, c in self._terms.items() if not p.is_identity()})

    @property
    def support(self) -> tuple[int, ...]:
        sites = set()
        for p in self._terms:
            sites.update(p.support)
        return tuple(sorted(sites))

    def is_zero(self, atol: float = 0.0) -> bool:
        return all(abs(c) <= atol for c in self._terms.values())

    def chop(self, atol: float = 1e-14) -> "LocalOperator":
        return LocalOperator({p: c for p, c in self._terms.items() if abs(c) > atol})

    def translate(self, shift: int) -> "LocalOperator":
        return LocalOperator({p.translate(shift): c for p, c in self._terms.items()})

    def dagger(self) -> "LocalOperator":
        return LocalOperator({p: np.conj(c) for p, c in self._terms.items()})

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= atol for c in self._terms.values())

    def norm1(self) -> float:
        return float(sum(abs(c) for c in self._terms.values()))

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        out = dict(self._terms)
        for p, c in other._terms.items():
            out[p] = out.get(p, 0) + c
        return LocalOperator(out)

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        return self + (-1) * other

    def __neg__(self):
        return (-1) * self

    def __mul__(self, scalar: complex) -> "LocalOperator":
        return LocalOperator({p: scalar * c for p, c in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        out: dict[PauliString, complex] = {}
        for p, a in self._terms.items():
            for q, b in other._terms.items():
                ph, r = multiply(p, q)
                out[r] = out.get(r, 0) + ph * a * b
        return LocalOperator(out)

    def __eq__(self, other):
        return isinstance(other, LocalOperator) and self._terms == other._terms

    def allclose(self, other: "LocalOperator", atol: float = 1e-12) -> bool:
        return (self - other).is_zero(atol)

    def __repr__(self):
        if not self._terms:
            return "LocalOperator(0)"
        parts = [f"({c:.6g})*{p.label() if not p.is_identity() else 'I'}@{p.support[:1]}"
                 for p, c in sorted(self._terms.items())]
        return "LocalOperator(" + " + ".join(parts) + ")"


def as_operator(o) -> LocalOperator:
    if isinstance(o, LocalOperator):
        return o
    if isinstance(o, PauliString):
        return LocalOperator.from_string(o)
    raise TypeError(f"cannot interpret {type(o).__name__} as a LocalOperator")


def commutator(p, q) -> LocalOperator:
    """``[p, q] = pq - qp``; for two strings the result is zero or one term of weight 2."""
    if isinstance(p, PauliString) and isinstance(q, PauliString):
        if not anticommutes(p, q):
            return LocalOperator()
        ph, r = multiply(p, q)
        return LocalOperator({r: 2 * ph})
    a, b = as_operator(p), as_operator(q)
    return a @ b - b @ a


def dissipator(jump, o, c: float = 1.0) -> LocalOperator:
    """Heisenberg-picture dissipator ``c (2 L^dag O L - {L^dag L, O})`` for one jump operator."""
    L, O = as_operator(jump), as_operator(o)
    Ld = L.dagger()
    LdL = Ld @ L
    return c * (2 * (Ld @ O @ L) - LdL @ O - O @ LdL)


def to_dense(o, window: Iterable[int] | None = None, cap: int = DENSE_CAP) -> np.ndarray:
    """Kronecker realization of ``o`` on a contiguous window of sites."""
    o = as_operator(o)
    if window is None:
        sup = o.support
        window = range(sup[0], sup[-1] + 1) if sup else range(0, 1)
    sites = list(window)
    if len(sites) > cap:
        raise WindowTooLarge(f"window of {len(sites)} sites exceeds cap {cap}")
    if any(s not in set(sites) for s in o.support):
        raise WindowTooSmall(f"support {o.support} not contained in window {sites[0]}..{sites[-1]}")
    dim = 2 ** len(sites)
    out = np.zeros((dim, dim), dtype=complex)
    for p, coef in o.items():
        letters = p.letters
        m = np.array([[1.0 + 0j]])
        for s in sites:
            m = np.kron(m, _PAULI[letters.get(s, "I")])
        out += coef * m
    return out


def _matrix_norm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    if np.allclose(m, m.conj().T, atol=1e-13, rtol=0):
        return float(np.max(np.abs(np.linalg.eigvalsh(m))))
    if np.allclose(m, -m.conj().T, atol=1e-13, rtol=0):
        return float(np.max(np.abs(np.linalg.eigvalsh(1j * m))))
    return float(np.linalg.norm(m, 2))


def spectral_norm(o, cap: int = DENSE_CAP) -> float:
    """Largest singular value of the dense realization of ``o``."""
    o = as_operator(o)
    if not len(o):
        return 0.0
    return _matrix_norm(to_dense(o, cap=cap))


def bloch_grid(n_theta: int = 12, n_phi: int = 12) -> np.ndarray:
    """Unit Bloch vectors (rows: x, y, z) on a polar/azimuthal grid including the poles."""
    th = np.linspace(0.0, np.pi, n_theta)
    ph = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    T, P = np.meshgrid(th, ph, indexing="ij")
    vecs = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1)
    return vecs.reshape(-1, 3)


def product_state_expectations(o, bloch: np.ndarray) -> np.ndarray:
    """Per-site expectation of ``o`` in the uniform product states with the given Bloch vectors."""
    o = as_operator(o)
    col = {"X": 0, "Y": 1, "Z": 2}
    out = np.zeros(len(bloch), dtype=complex)
    for p, coef in o.items():
        val = np.full(len(bloch), coef, dtype=complex)
        for _, letter in p.items:
            val = val * bloch[:, col[letter]]
        out += val
    return out


def seminorm_bounds(c, n_theta: int = 12, n_phi: int = 12,
                    cap: int = DENSE_CAP) -> tuple[float, float]:
    """Certified interval for the per-site seminorm of the translation sum of ``c``.

    The identity component carries zero seminorm and is dropped first. The upper
    end is the local spectral norm; the lower end maximises the per-site
    expectation over translation-invariant single-site product states.
    """
    c = as_operator(c).without_identity()
    if not len(c):
        return 0.0, 0.0
    upper = spectral_norm(c, cap=cap)
    lower = float(np.max(np.abs(product_state_expectations(c, bloch_grid(n_theta, n_phi)))))
    return min(lower, upper), upper
