"""Heisenberg-picture Lindblad dynamics on a small periodic ring.

Operators are dense ``2^L x 2^L`` matrices with site 0 as the most
significant qubit. Pauli strings are applied as signed bit-flip permutations,
so the Hamiltonian and jump operators are cheap sparse matrices.
"""
from __future__ import annotations

import gc
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import DOP853

from .errors import ConeNotResolved, HorizonExceeded, RingTooLarge, SolverDivergence, StepSizeUnderflow
from .generator import ModelSpec, Term, build, taylor_term
from .ksector import pullback
from .pauli import LocalOperator, PauliString, _matrix_norm, as_operator, seminorm_bounds, spectral_norm

log = logging.getLogger(__name__)

MAX_SITES = 10
RTOL = 1e-9
ATOL = 1e-12


# ------------------------------------------------------------------ operators

def ring_pauli(L: int, letters: dict[int, str]) -> sp.csr_matrix:
    """Sparse matrix of a Pauli string on the ring; sites are taken mod L."""
    dim = 2 ** L
    xmask = zmask = 0
    ny = 0
    for site, letter in letters.items():
        bit = 1 << (L - 1 - site % L)
        if letter == "I":
            continue
        if (xmask | zmask) & bit:
            raise ValueError("string wraps onto itself on this ring")
        if letter in "XY":
            xmask |= bit
        if letter in "YZ":
            zmask |= bit
        ny += letter == "Y"
    b = np.arange(dim)
    parity = np.zeros(dim, dtype=np.int64)
    z = b & zmask
    while np.any(z):
        parity ^= z & 1
        z = z >> 1
    vals = (1j ** ny) * (1 - 2 * parity)
    # P|b> = i^ny (-1)^{b.z} |b ^ x>  (Y = i X Z)
    return sp.csr_matrix((vals, (b ^ xmask, b)), shape=(dim, dim))


def ring_embed(o, L: int, shift: int = 0) -> np.ndarray:
    """Dense ring matrix of a local operator translated by ``shift``."""
    o = as_operator(o)
    out = np.zeros((2 ** L, 2 ** L), dtype=complex)
    for p, coef in o.items():
        P = ring_pauli(L, {s + shift: l for s, l in p.items})
        out += coef * P.toarray()
    return out


@dataclass
class RingOperator:
    matrix: np.ndarray
    L: int
    support: tuple[int, ...] = ()

    def __post_init__(self):
        if self.L > MAX_SITES:
            raise RingTooLarge(f"L={self.L} exceeds {MAX_SITES}")
        if self.matrix.shape != (2 ** self.L, 2 ** self.L):
            raise ValueError("matrix dimension does not match the ring size")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("ring operator has non-finite entries")

    @classmethod
    def from_local(cls, o, L: int) -> "RingOperator":
        o = as_operator(o)
        return cls(ring_embed(o, L), L, tuple(o.support))

    @property
    def extent(self) -> int:
        return self.support[-1] - self.support[0] + 1 if self.support else 0

    def norm(self) -> float:
        return _matrix_norm(self.matrix)


def charge_sum(model: ModelSpec, L: int) -> np.ndarray:
    """Total charge sum_x C_x on the ring (diagonal for Z)."""
    out = sp.csr_matrix((2 ** L, 2 ** L), dtype=complex)
    for x in range(L):
        out = out + ring_pauli(L, {x: model.charge})
    return out.toarray()


# ------------------------------------------------------------------ generator

@dataclass
class RingGenerator:
    """Callable ``O -> dO/dt`` for the model on an L-site ring."""

    L: int
    H: sp.csr_matrix
    c: float
    diag_weight: np.ndarray | None = field(default=None, repr=False)
    pauli_jumps: list = field(default_factory=list, repr=False)
    general_jumps: list = field(default_factory=list, repr=False)

    def __call__(self, O: np.ndarray) -> np.ndarray:
        out = 1j * (self.H @ O - (self.H.T @ O.T).T) if self.H.nnz else np.zeros_like(O)
        if self.diag_weight is not None:
            out += self.diag_weight * O
        for w, P in self.pauli_jumps:
            out += w * ((P @ ((P.conj().T @ O.T).T)) - O)
        for Lx, LdL in self.general_jumps:
            Ld = Lx.conj().T
            out += self.c * (2 * (Ld @ ((Lx.T @ O.T).T)) - LdL @ O - (LdL.T @ O.T).T)
        return out


def _translates(pattern_or_op, L: int):
    if isinstance(pattern_or_op, Term):
        w = len(pattern_or_op.pattern)
        if w > L:
            raise ValueError(f"pattern {pattern_or_op.pattern!r} longer than the ring")
        for x in range(L):
            yield pattern_or_op.coef, {x + j: ch for j, ch in enumerate(pattern_or_op.pattern)}
    else:
        yield from ()


def ring_generator(model: ModelSpec, L: int) -> RingGenerator:
    if L > MAX_SITES:
        raise RingTooLarge(f"L={L} exceeds {MAX_SITES}")
    if L < 2:
        raise ValueError("ring needs at least 2 sites")
    dim = 2 ** L
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for t in model.hamiltonian:
        for coef, letters in _translates(t, L):
            H = H + coef.real * ring_pauli(L, letters)
    H.eliminate_zeros()
    gen = RingGenerator(L, H.tocsr(), model.c)
    if not model.c:
        return gen
    diag = np.zeros((dim, dim))
    for j in model.jumps:
        if isinstance(j, LocalOperator):
            sup = j.support
            if sup and sup[-1] - sup[0] + 1 > L:
                raise ValueError("jump operator longer than the ring")
            for x in range(L):
                Lx = sp.csr_matrix(ring_embed(j, L, x))
                gen.general_jumps.append((Lx, sp.csr_matrix(Lx.conj().T @ Lx)))
            continue
        for coef, letters in _translates(j, L):
            P = ring_pauli(L, letters)
            w = 2 * model.c * abs(coef) ** 2
            if set(j.pattern) <= {"I", "Z"}:
                s = P.diagonal().real
                diag += w * (np.outer(s, s) - 1.0)
            else:
                gen.pauli_jumps.append((w, P))
    if diag.any():
        gen.diag_weight = diag
    return gen


# ------------------------------------------------------------------ evolution

def _as_ring(O, L: int | None) -> RingOperator:
    if isinstance(O, RingOperator):
        return O
    if L is None:
        raise ValueError("ring size needed for a local operator")
    return RingOperator.from_local(O, L)


def _integrate(gen: RingGenerator, M: np.ndarray, t0: float, t1: float, rtol: float, atol: float):
    """Step an adaptive DOP853 integrator from t0 to t1 keeping only the current state."""
    if t1 == t0:
        return M
    shape = M.shape
    solver = DOP853(lambda t, y: gen(y.reshape(shape)).ravel(), t0, M.ravel().astype(complex),
                    t1, rtol=rtol, atol=atol)
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflow(f"integration from t={t0:g} to t={t1:g} failed at "
                                    f"t={solver.t:g}: {msg}")
    y = solver.y.reshape(shape)
    del solver
    gc.collect()  # the solver's stage arrays sit in a reference cycle
    return y


def trajectory(gen: RingGenerator, O, times: Sequence[float], rtol: float = RTOL,
               atol: float = ATOL) -> Iterable[tuple[float, np.ndarray]]:
    """Yield (t, O(t)) at increasing times, integrating segment by segment."""
    op = _as_ring(O, gen.L)
    M, t = op.matrix, 0.0
    for tt in times:
        if tt < t:
            raise ValueError("times must be non-decreasing and >= 0")
        M = _integrate(gen, M, t, float(tt), rtol, atol)
        t = float(tt)
        yield t, M


def evolve(gen: RingGenerator, O, t: float, rtol: float = RTOL, atol: float = ATOL,
           check_contraction: bool = True) -> RingOperator:
    """O(t) = exp(t L) O by adaptive DOP853 (local relative error ~ rtol)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    op = _as_ring(O, gen.L)
    M = _integrate(gen, op.matrix, 0.0, float(t), rtol, atol)
    out = RingOperator(M, op.L, op.support)
    if check_contraction:
        n0, n1 = op.norm(), out.norm()
        if n1 > n0 + 1e-8 * max(1.0, n0):
            raise SolverDivergence(f"norm grew from {n0:.12g} to {n1:.12g}")
    return out


# ------------------------------------------------------------------ probes

def _small_generator(model: ModelSpec):
    """Generator on a basis just large enough to hold one column of the charge exactly."""
    spans = [len(t.pattern) for t in model.hamiltonian] + [1]
    g = build(model.with_(n=max(spans) + 1))
    if g.loss[g.charge_index] > 0:
        raise SolverDivergence("small basis truncates the current")
    return g


def current_operator(model: ModelSpec) -> tuple[LocalOperator, tuple[float, float]]:
    """J = pullback of L1 C, and the interval for v_C = |J| / |(C)|."""
    g = _small_generator(model)
    e = np.zeros(len(g.basis))
    e[g.charge_index] = 1.0
    J = pullback(taylor_term(g, 1) @ e, g.basis).chop(1e-14)
    nJ = spectral_norm(J)
    lo, hi = seminorm_bounds(LocalOperator.from_string(model.charge_string))
    if nJ == 0:
        return J, (0.0, 0.0)
    return J, (nJ / hi, nJ / lo)


def reference_velocity(model: ModelSpec) -> float | None:
    """Analytic Lieb-Robinson velocity used for horizons: 2 + |delta| for XXZ, 0 without a Hamiltonian."""
    if not model.hamiltonian:
        return 0.0
    params = dict(model.params)
    if model.name.startswith("xxz") and "delta" in params:
        return 2.0 + abs(params["delta"])
    return None


def validity_horizon(L: int, extent: int, v_ref: float) -> float:
    if v_ref == 0:
        return np.inf
    return (L // 2 - extent) / v_ref


@dataclass
class DecayProfile:
    times: np.ndarray
    norms: np.ndarray
    t_valid: float
    L: int
    v_ref: float

    def __post_init__(self):
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def default_times(t_valid: float, points: int = 200, t_min: float = 0.01, t_max: float = 5.0) -> np.ndarray:
    end = t_valid if np.isfinite(t_valid) else t_max
    if end <= t_min:
        raise HorizonExceeded(f"validity horizon {end:.3g} is shorter than the first sample {t_min}")
    return np.geomspace(t_min, end, points)


def _resolve_v_ref(model, v_ref):
    v = reference_velocity(model) if v_ref is None else float(v_ref)
    if v is None:
        raise ValueError("no analytic reference velocity for this model; pass v_ref")
    return v


def decay_profile(model: ModelSpec, O, times: Sequence[float] | None = None, L: int = 8,
                  v_ref: float | None = None, gen: RingGenerator | None = None) -> DecayProfile:
    """Samples of |dO(t)/dt| on the ring, restricted to the wrap-around horizon."""
    gen = gen or ring_generator(model, L)
    op = _as_ring(O, L)
    v = _resolve_v_ref(model, v_ref)
    t_valid = validity_horizon(L, op.extent, v)
    if t_valid <= 0:
        raise HorizonExceeded(f"operator of extent {op.extent} does not fit the L={L} horizon")
    ts = default_times(t_valid) if times is None else np.asarray(times, dtype=float)
    if len(ts) and ts.max() > t_valid * (1 + 1e-12):
        raise HorizonExceeded(f"sample time {ts.max():.4g} beyond t_valid = {t_valid:.4g}")
    norms = np.array([_matrix_norm(gen(M)) for _, M in trajectory(gen, op, ts)])
    return DecayProfile(ts, norms, t_valid, L, v)


def estimate_A(model: ModelSpec, tau: float, L: int = 8, times: Sequence[float] | None = None,
               operator=None, v_ref: float | None = None, return_profile: bool = False):
    """Sampled max of |dO/dt| tau / (|J| exp(-t/tau)).

    ``operator`` defaults to the current minus its conserved part; then the
    normalisation is |J|. A supplied operator is normalised by its own norm.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if operator is None:
        J, _ = current_operator(model)
        nJ = spectral_norm(J)
        if nJ == 0:
            return (0.0, None) if return_profile else 0.0
        op = RingOperator.from_local(J, L)
        b1 = _conserved_part(model)
        if abs(b1) > 0:
            op = RingOperator(op.matrix - b1 * charge_sum(model, L), L, op.support)
    else:
        op = _as_ring(operator, L)
        nJ = spectral_norm(operator) if not isinstance(operator, RingOperator) else operator.norm()
    prof = decay_profile(model, op, times, L, v_ref)
    ratio = prof.norms * tau / (nJ * np.exp(-prof.times / tau))
    A = float(ratio.max())
    return (A, prof) if return_profile else A


def _conserved_part(model: ModelSpec) -> complex:
    """ell(J) from a cheap truncation; zero for diffusive models."""
    from .hydro import drude_check
    val = drude_check(model.with_(n=min(model.n, 4)))
    return val if abs(val) > 1e-12 else 0.0


@dataclass
class ConeEstimate:
    velocity: float
    sites: np.ndarray
    arrival: np.ndarray
    times: np.ndarray
    norms: np.ndarray = field(repr=False)


def lr_cone(model: ModelSpec, times: Sequence[float] | None = None, L: int = 10,
            operator=None, threshold: float = 0.01, v_ref: float | None = None) -> ConeEstimate:
    """Slope of the ``threshold`` contour of |[O_0(t), Z_x]| in the (x, t) plane.

    The commutator norm is the normalised Frobenius norm |A|_F / sqrt(2^L),
    a cheap stand-in for the operator norm that has the same light cone.
    """
    sites = np.arange(0, L // 2 + 1)
    if not model.hamiltonian:
        z = np.zeros(0)
        return ConeEstimate(0.0, sites, np.full(len(sites), np.nan), z, np.zeros((0, len(sites))))
    gen = ring_generator(model, L)
    op = _as_ring(LocalOperator.from_string(model.charge_string) if operator is None else operator, L)
    if times is None:
        v = _resolve_v_ref(model, v_ref)
        times = np.linspace(0.0, (L // 2) / v, 81)
    ts = np.asarray(times, dtype=float)
    probes = [ring_pauli(L, {int(x): "Z"}).diagonal() for x in sites]
    dim = 2 ** L
    norms = np.zeros((len(ts), len(sites)))
    for i, (_, M) in enumerate(trajectory(gen, op, ts)):
        for j, zd in enumerate(probes):
            comm = M * zd[None, :] - zd[:, None] * M
            norms[i, j] = np.linalg.norm(comm) / np.sqrt(dim)
    peak = norms.max()
    arrival = np.full(len(sites), np.nan)
    if peak > 0:
        level = threshold * peak
        for j in range(len(sites)):
            hit = np.flatnonzero(norms[:, j] >= level)
            if len(hit):
                i = hit[0]
                if i == 0:
                    arrival[j] = ts[0]
                else:
                    f0, f1 = norms[i - 1, j], norms[i, j]
                    arrival[j] = ts[i - 1] + (level - f0) / (f1 - f0) * (ts[i] - ts[i - 1])
    ok = np.isfinite(arrival)
    if ok.sum() < 3:
        raise ConeNotResolved(f"contour reaches only {int(ok.sum())} sites")
    slope = np.polyfit(arrival[ok], sites[ok], 1)[0]
    return ConeEstimate(float(slope), sites, arrival, ts, norms)
