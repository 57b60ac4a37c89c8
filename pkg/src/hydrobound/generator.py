"""Time-evolution superoperator restricted to the momentum-k sector.

Column ``a`` of the generator is the image of the local operator
``dO_a/dt``. Each stored entry is kept as a Laurent polynomial in
``exp(ik)``: the matrix is the sum over grades ``m`` of sparse matrices
``G_m`` multiplied by ``exp(ikm)``, so Taylor coefficients in ``k`` are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import NamedTuple, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import ChargeNotConserved, ValidationError
from .ksector import KBasis, canonical_basis, canonicalize, embed, eval_vector
from .pauli import LETTERS, LocalOperator, PauliString, commutator, dissipator

CONSERVATION_TOL = 1e-12

# product table for letter codes 0=I,1=X,2=Y,3=Z: a.b = i**_PH[a,b] * P_{_PROD[a,b]}
_PROD = np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]], dtype=np.uint8)
_PH = np.array([[0, 0, 0, 0], [0, 0, 1, 3], [0, 3, 0, 1], [0, 1, 3, 0]], dtype=np.int64)
_ANTI = (_PH % 2).astype(bool)


class Term(NamedTuple):
    """``coef`` times the Pauli pattern ``pattern`` (letters at offsets 0..r, I allowed)."""

    coef: complex
    pattern: str

    def operator(self, start: int = 0) -> LocalOperator:
        return LocalOperator.from_label(self.pattern, start, self.coef)

    @property
    def span(self) -> int:
        """Extent of the pattern once outer identities are trimmed."""
        s = PauliString.from_label(self.pattern)
        return s.extent


Jump = Union[Term, LocalOperator]


def _codes(pattern: str) -> np.ndarray:
    return np.array([LETTERS.index(ch) for ch in pattern], dtype=np.uint8)


@dataclass(frozen=True)
class ModelSpec:
    """Translation-invariant Lindbladian on a 1D chain.

    ``hamiltonian`` terms and ``jumps`` are anchored at site 0 and summed over
    all translates. A jump may be a :class:`Term` or a general
    :class:`LocalOperator` supported at sites >= 0.
    """

    hamiltonian: tuple[Term, ...]
    jumps: tuple[Jump, ...]
    c: float
    charge: str = "Z"
    n: int = 7
    name: str = "custom"
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "hamiltonian", tuple(Term(complex(t[0]), str(t[1])) for t in self.hamiltonian))
        object.__setattr__(self, "jumps", tuple(j if isinstance(j, LocalOperator) else Term(complex(j[0]), str(j[1]))
                                                for j in self.jumps))
        if not np.isfinite(self.c) or self.c < 0:
            raise ValidationError(f"decoherence strength c must be finite and >= 0, got {self.c}")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"truncation n must be a positive integer, got {self.n}")
        for t in self.hamiltonian + tuple(j for j in self.jumps if isinstance(j, Term)):
            if not t.pattern or any(ch not in LETTERS for ch in t.pattern):
                raise ValidationError(f"invalid pattern {t.pattern!r}")
            if set(t.pattern) == {"I"}:
                raise ValidationError(f"pattern {t.pattern!r} is the identity")
            if not np.isfinite(t.coef):
                raise ValidationError(f"non-finite coefficient in term {t}")
        for t in self.hamiltonian:
            if abs(t.coef.imag) > 0:
                raise ValidationError(f"Hamiltonian coefficient must be real: {t}")
        for j in self.jumps:
            if isinstance(j, LocalOperator):
                if not len(j.without_identity()):
                    raise ValidationError("jump operator has no non-identity part")
                if min(j.support) < 0:
                    raise ValidationError("jump operators must be anchored at sites >= 0")
        if len(self.charge) != 1 or self.charge not in "XYZ":
            raise ValidationError(f"charge must be a single-site Pauli letter, got {self.charge!r}")

    @property
    def hermitian_jumps(self) -> bool:
        for j in self.jumps:
            if isinstance(j, LocalOperator):
                if not j.allclose(j.dagger()):
                    return False
            elif abs(j.coef.imag) > 0:
                # g.P with complex g is still normal with L^dag L ∝ I; dissipator matches |g|^2 P
                continue
        return True

    def jump_operators(self) -> list[LocalOperator]:
        return [j if isinstance(j, LocalOperator) else j.operator() for j in self.jumps]

    @property
    def charge_string(self) -> PauliString:
        return PauliString({0: self.charge})

    def with_(self, **changes) -> "ModelSpec":
        from dataclasses import replace
        return replace(self, **changes)

    def to_dict(self) -> dict:
        def jump_dict(j):
            if isinstance(j, LocalOperator):
                return {"terms": [[p.label(0) if not p.is_identity() else "I", c.real, c.imag]
                                  for p, c in sorted(j.items())]}
            return {"pattern": j.pattern, "coef": [j.coef.real, j.coef.imag]}
        return {
            "name": self.name,
            "params": dict(self.params),
            "hamiltonian": [{"pattern": t.pattern, "coef": t.coef.real} for t in self.hamiltonian],
            "jumps": [jump_dict(j) for j in self.jumps],
            "c": self.c,
            "charge": self.charge,
            "n": self.n,
        }


def xxz_dephasing(delta: float, c: float, n: int = 7) -> ModelSpec:
    """Spin-1/2 XXZ chain ``XX + YY + delta ZZ`` with on-site Z dephasing."""
    return ModelSpec(
        hamiltonian=(Term(1.0, "XX"), Term(1.0, "YY"), Term(delta, "ZZ")),
        jumps=(Term(1.0, "Z"),),
        c=c, charge="Z", n=n, name="xxz_dephasing",
        params=(("delta", float(delta)),),
    )


def dephasing_only(c: float, n: int = 7) -> ModelSpec:
    return ModelSpec(hamiltonian=(), jumps=(Term(1.0, "Z"),), c=c, n=n, name="dephasing")


def local_time_derivative(model: ModelSpec, o) -> LocalOperator:
    """dO/dt for a local operator under the full translation-invariant Lindbladian."""
    o = o if isinstance(o, LocalOperator) else LocalOperator.from_string(o)
    sup = o.support
    if not sup:
        return LocalOperator()
    lo, hi = sup[0], sup[-1]
    out = LocalOperator()
    for t in model.hamiltonian:
        w = len(t.pattern)
        for x in range(lo - w + 1, hi + 1):
            out = out + 1j * commutator(t.operator(x), o)
    if model.c:
        for jop in model.jump_operators():
            jsup = jop.without_identity().support
            for x in range(lo - jsup[-1], hi - jsup[0] + 1):
                out = out + dissipator(jop.translate(x), o, model.c)
    return out.chop(1e-15)


@dataclass(frozen=True, eq=False)
class PhasePolyMatrix:
    """Generator of the truncated sector: ``sum_m exp(ikm) grades[m]``."""

    basis: KBasis
    grades: dict[int, sp.csr_matrix] = field(repr=False)
    loss: np.ndarray = field(repr=False)  # dropped |coefficient| per column
    charge_index: int = 0
    hermitian_jumps: bool = True

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.basis), len(self.basis))

    def entry(self, row: int, col: int) -> dict[int, complex]:
        out = {}
        for m, g in self.grades.items():
            v = g[row, col]
            if v != 0:
                out[m] = complex(v)
        return out

    def column(self, col: int) -> dict[int, dict[int, complex]]:
        out: dict[int, dict[int, complex]] = {}
        for m, g in self.grades.items():
            colv = g[:, col].tocoo()
            for r, v in zip(colv.row, colv.data):
                out.setdefault(int(r), {})[m] = complex(v)
        return out

    @property
    def total_loss(self) -> float:
        return float(self.loss.sum())

    @property
    def nnz(self) -> int:
        return sum(g.nnz for g in self.grades.values())


def _shifted_products(codes: np.ndarray, pattern: np.ndarray, x: int):
    """Products ``T_x[h] . O_a`` for every basis row, on a padded window.

    Returns (anticommute mask, product codes on window, phase exponent, window offset).
    """
    N, n = codes.shape
    w = len(pattern)
    r = w - 1
    W = n + 2 * r
    win = np.zeros((N, W), dtype=np.uint8)
    win[:, r:r + n] = codes
    hrow = np.zeros(W, dtype=np.uint8)
    hrow[x + r:x + r + w] = pattern
    prod = _PROD[hrow[None, :], win]
    phase = _PH[hrow[None, :], win].sum(axis=1)
    anti = _ANTI[hrow[None, :], win].sum(axis=1) % 2 == 1
    return anti, prod, phase, r


def _canonical_rows(prod: np.ndarray, r: int, n: int):
    """Canonical code rows (width n), shifts and extents of window rows."""
    nz = prod != 0
    W = prod.shape[1]
    first = np.argmax(nz, axis=1)
    last = W - 1 - np.argmax(nz[:, ::-1], axis=1)
    extent = last - first + 1
    padded = np.concatenate([prod, np.zeros((len(prod), n), dtype=np.uint8)], axis=1)
    idx = first[:, None] + np.arange(n)[None, :]
    canon = np.take_along_axis(padded, idx, axis=1)
    # clear anything past the string end (only matters when extent > n, which is dropped)
    canon[np.arange(n)[None, :] >= extent[:, None]] = 0
    return canon, first - r, extent


def build(model: ModelSpec, basis: KBasis | None = None, check_charge: bool = True) -> PhasePolyMatrix:
    """Assemble the truncated generator column by column (vectorised over columns)."""
    n = model.n
    basis = basis or canonical_basis(n)
    codes = basis.codes
    N = len(basis)
    cols_all = np.arange(N)
    rows, cols, grades, vals = [], [], [], []
    loss = np.zeros(N)

    def emit(mask, prod, coef, r):
        canon, shift, extent = _canonical_rows(prod[mask], r, n)
        keep = extent <= n
        c_idx = cols_all[mask]
        coef = coef[mask] if np.ndim(coef) else np.full(mask.sum(), coef)
        np.add.at(loss, c_idx[~keep], np.abs(coef[~keep]))
        ridx = basis.lookup_codes(canon[keep])
        assert (ridx >= 0).all()
        rows.append(ridx)
        cols.append(c_idx[keep])
        grades.append(shift[keep])
        vals.append(coef[keep])

    for t in model.hamiltonian:
        pat = _codes(t.pattern)
        w = len(pat)
        for x in range(-(w - 1), n):
            anti, prod, phase, r = _shifted_products(codes, pat, x)
            if not anti.any():
                continue
            # i coef [h, O] = i coef 2 i**phase P for anticommuting pairs
            coef = 2j * t.coef.real * (1j ** (phase % 4))
            emit(anti, prod, coef, r)

    diag = np.zeros(N)
    general = []
    if model.c:
        for j in model.jumps:
            if isinstance(j, LocalOperator):
                general.append(j)
                continue
            pat = _codes(j.pattern)
            w = len(pat)
            for x in range(-(w - 1), n):
                anti, _, _, _ = _shifted_products(codes, pat, x)
                diag -= 4.0 * model.c * abs(j.coef) ** 2 * anti
    nzd = np.flatnonzero(diag)
    rows.append(nzd)
    cols.append(nzd)
    grades.append(np.zeros(len(nzd), dtype=np.int64))
    vals.append(diag[nzd].astype(complex))

    if general:
        _general_jump_columns(model, general, basis, rows, cols, grades, vals, loss)

    rows = np.concatenate(rows) if rows else np.zeros(0, int)
    cols = np.concatenate(cols) if cols else np.zeros(0, int)
    grades = np.concatenate(grades) if grades else np.zeros(0, int)
    vals = np.concatenate(vals) if vals else np.zeros(0, complex)
    out = {}
    for m in np.unique(grades):
        sel = grades == m
        v = vals[sel]
        if np.all(v.imag == 0):
            v = v.real
        g = sp.csr_matrix((v, (rows[sel], cols[sel])), shape=(N, N))
        g.sum_duplicates()
        g.eliminate_zeros()
        if g.nnz:
            out[int(m)] = g
    ci = basis.position(model.charge_string)
    gen = PhasePolyMatrix(basis, out, loss, ci, model.hermitian_jumps)
    residual = np.linalg.norm(eval_at(gen, 0.0)[:, ci].toarray())
    if check_charge and residual > CONSERVATION_TOL:
        raise ChargeNotConserved(
            f"k=0 generator maps the charge {model.charge}_0 to a vector of norm {residual:.3e}"
        )
    return gen


def _general_jump_columns(model, jumps, basis, rows, cols, grades, vals, loss):
    """Slow per-column path for jump operators that are not single Pauli strings."""
    index = basis.index
    for a, s in enumerate(basis.strings):
        o = LocalOperator.from_string(s)
        lo, hi = 0, s.extent - 1
        acc = LocalOperator()
        for jop in jumps:
            jsup = jop.without_identity().support
            for x in range(lo - jsup[-1], hi - jsup[0] + 1):
                acc = acc + dissipator(jop.translate(x), o, model.c)
        for p, coef in acc.chop(1e-15).items():
            if p.is_identity():
                continue
            cs, m = canonicalize(p)
            if cs.extent > basis.n:
                loss[a] += abs(coef)
                continue
            rows.append(np.array([index[cs]]))
            cols.append(np.array([a]))
            grades.append(np.array([m]))
            vals.append(np.array([coef], dtype=complex))


def build_reference(model: ModelSpec, basis: KBasis | None = None) -> PhasePolyMatrix:
    """Column-by-column build via the generic Pauli algebra (slow; for cross-checks)."""
    basis = basis or canonical_basis(model.n)
    N = len(basis)
    rows, cols, grades, vals = [], [], [], []
    loss = np.zeros(N)
    for a, s in enumerate(basis.strings):
        vec, lost = embed(local_time_derivative(model, s), basis)
        loss[a] = lost
        for i, row in vec.entries.items():
            for m, c in row.items():
                rows.append(i); cols.append(a); grades.append(m); vals.append(c)
    rows, cols, grades, vals = map(np.asarray, (rows, cols, grades, vals))
    out = {}
    for m in np.unique(grades) if len(grades) else []:
        sel = grades == m
        g = sp.csr_matrix((vals[sel].astype(complex), (rows[sel], cols[sel])), shape=(N, N))
        g.eliminate_zeros()
        if g.nnz:
            out[int(m)] = g
    return PhasePolyMatrix(basis, out, loss, basis.position(model.charge_string), model.hermitian_jumps)


def eval_at(g: PhasePolyMatrix, k: float) -> sp.csr_matrix:
    """Numeric generator at wavevector k."""
    N = len(g.basis)
    out = sp.csr_matrix((N, N), dtype=complex)
    for m, gm in g.grades.items():
        out = out + np.exp(1j * k * m) * gm
    if k == 0.0 and not any(np.iscomplexobj(gm.data) for gm in g.grades.values()):
        out = out.real.tocsr()
    return out


def taylor_term(g: PhasePolyMatrix, order: int) -> sp.csr_matrix:
    """k**order coefficient: sum_m (i m)**order / order! G_m."""
    N = len(g.basis)
    out = sp.csr_matrix((N, N), dtype=complex)
    for m, gm in g.grades.items():
        if order and m == 0:
            continue
        out = out + ((1j * m) ** order / factorial(order)) * gm
    return out.tocsr()


def charge_vector(g: PhasePolyMatrix) -> np.ndarray:
    return g.basis.unit(g.charge_index)


def column_vector(g: PhasePolyMatrix, col: int, k: float) -> np.ndarray:
    return eval_at(g, k)[:, col].toarray().ravel()


__all__ = [
    "Term", "ModelSpec", "PhasePolyMatrix", "xxz_dephasing", "dephasing_only",
    "local_time_derivative", "build", "build_reference", "eval_at", "taylor_term",
    "charge_vector", "eval_vector",
]
