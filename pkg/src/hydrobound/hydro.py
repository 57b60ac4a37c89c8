"""Hydrodynamic slow mode of the truncated sector generator.

The generator is expanded in powers of k as ``L0 + k L1 + k^2 L2 + ...``.
The conserved charge ``C`` lies in the kernel of ``L0``; ``ell`` is the dual
left null vector normalised by ``ell(C) = 1``. The diffusivity follows from
second-order perturbation theory,

    D = -[ ell(L2 C) - ell(L1 x) ],    L0 x = Q (L1 C),  ell(x) = 0,

which is evaluated three ways: a bordered sparse solve (reduced resolvent),
the time integral of ``ell L1 exp(L0 t) L1 C``, and a small-k fit of the
slow eigenvalue itself.

Truncating the operator space leaves ``L0`` with extra null vectors besides
``C`` (pure Z combinations and the longest all-Z string for XXZ). They are
deflated together with ``C``: ``Q`` projects out the whole kernel, and the
other null vectors are taken orthogonal to ``C`` so that ``ell`` is fixed.
When the charge couples to one of them at first order in k the slow
branch becomes linear in k, which is reported as :class:`BallisticTransport`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import (BallisticTransport, DegenerateKernel, GapClosure, ModeTrackingLost,
                     NonDecayingIntegrand, SolverDivergence)
from .generator import ModelSpec, PhasePolyMatrix, build, charge_vector, eval_at, taylor_term
from .krylov import expv_integral
from .ksector import KVector, pullback
from .pauli import LocalOperator, seminorm_bounds
from .sectors import (centered_phases, decoherence_free_mask, is_reflection_symmetric, realifier,
                      reflection_permutation, symmetry_blocks)

log = logging.getLogger(__name__)

BALLISTIC_TOL = 1e-10
KERNEL_RATIO = 1e-8
DENSE_LIMIT = 600          # full-matrix dense eigensolves below this size
DENSE_KERNEL = 1024        # dense null spaces below this size
DENSE_BLOCK = 1024         # dense eigensolves of symmetry blocks up to this size
TRACKING_THRESHOLD = 0.5
DF_WEIGHT = 0.5
GAP_TOL = 1e-6


# ---------------------------------------------------------------- kernel of L0

@dataclass(frozen=True)
class Kernel:
    """Biorthogonal bases of the right and left null spaces of ``L0``.

    ``right[:, 0]`` is the charge and ``left[:, 0]`` is ``ell``; the other right
    vectors are orthonormal and orthogonal to the charge; ``left.T @ right = I``.
    ``components`` holds the index sets of the decoupled diagonal blocks of
    ``L0`` and ``owner[j]`` the block carrying kernel vector j.
    """

    right: np.ndarray
    left: np.ndarray
    components: tuple[np.ndarray, ...] = ()
    owner: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    @property
    def dim(self) -> int:
        return self.right.shape[1]

    @property
    def ell(self) -> np.ndarray:
        return self.left[:, 0]


def _orth(A: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    if A.shape[1] == 0:
        return A
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, s > tol * max(1.0, s[0] if len(s) else 0.0)]


def _scale(A) -> float:
    return max(1.0, float(abs(A).max())) if A.nnz else 1.0


def _splu(A: sp.spmatrix):
    return spla.splu(sp.csc_matrix(A), permc_spec="MMD_AT_PLUS_A")


def _inverse_iteration_null(A: sp.csc_matrix, scale: float, p0: int = 16, sweeps: int = 3):
    """Right and left null spaces of a large sparse block by shifted subspace iteration.

    Null vectors are amplified by 1/sigma per sweep relative to the rest of
    the spectrum; a Rayleigh-Ritz step on |A X| then separates them.
    """
    N = A.shape[0]
    sigma = 1e-7 * scale
    lu = _splu(A - sigma * sp.identity(N, format="csc"))
    rng = np.random.default_rng(1234)
    out = []
    for trans, op in (("N", A), ("T", A.T)):
        p = min(p0, N)
        while True:
            X = rng.standard_normal((N, p))
            for _ in range(sweeps):
                X = np.linalg.qr(lu.solve(X, trans=trans))[0]
            _, s, Wh = np.linalg.svd(op @ X, full_matrices=False)
            null = s < KERNEL_RATIO * scale
            if null.sum() < p or p >= N:
                break
            p = min(2 * p, N)
        out.append(_orth(X @ Wh[null].T))
    return out


def _component_null(A: sp.csc_matrix, scale: float) -> tuple[np.ndarray, np.ndarray]:
    N = A.shape[0]
    if N <= DENSE_KERNEL:
        M = A.toarray()
        if not M.any():
            return np.eye(N), np.eye(N)
        return (_orth(scipy.linalg.null_space(M, rcond=KERNEL_RATIO)),
                _orth(scipy.linalg.null_space(M.T, rcond=KERNEL_RATIO)))
    return tuple(_inverse_iteration_null(A, scale))


def kernel_bases(L0, charge_index: int) -> Kernel:
    """Deflation bases for the zero eigenvalue of ``L0``, found block by block."""
    L0 = sp.csc_matrix(L0)
    if np.iscomplexobj(L0.data):
        if np.abs(L0.data.imag).max(initial=0.0) > 0:
            raise ValueError("L0 must be real")
        L0 = sp.csc_matrix(L0.real)
    N = L0.shape[0]
    scale = _scale(L0)
    C = np.zeros(N)
    C[charge_index] = 1.0
    if np.abs(L0 @ C).max(initial=0.0) > 1e-12 * scale:
        raise DegenerateKernel("the charge is not a null vector of L0")
    ncomp, lab = connected_components(abs(L0) + abs(L0.T), directed=False)
    comps = tuple(np.flatnonzero(lab == c) for c in range(ncomp))
    rights, lefts, owners = [], [], []
    for ci, idx in enumerate(comps):
        A = L0[idx][:, idx].tocsc()
        Rb, Lb = _component_null(A, scale)
        if Rb.shape[1] == 0 and Lb.shape[1] == 0:
            continue
        if Rb.shape[1] != Lb.shape[1]:
            raise DegenerateKernel(
                f"left and right null spaces differ in dimension ({Lb.shape[1]} vs {Rb.shape[1]})")
        if charge_index in idx:
            cb = C[idx]
            Rb = np.hstack([cb[:, None], _orth(Rb - np.outer(cb, cb @ Rb))])
            if Rb.shape[1] != Lb.shape[1]:
                raise DegenerateKernel("charge is not in the numerical null space")
        M = Lb.T @ Rb
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] < KERNEL_RATIO * s[0]:
            raise DegenerateKernel("zero eigenvalue of L0 is not semisimple")
        Lb = Lb @ np.linalg.inv(M).T
        res = max(np.abs(A @ Rb).max(initial=0.0), np.abs(A.T @ Lb).max(initial=0.0))
        if res > 1e-10 * scale * max(1.0, np.abs(Lb).max()):
            raise SolverDivergence(f"null-space residual {res:.3e}")
        r = Rb.shape[1]
        Rf, Lf = np.zeros((N, r)), np.zeros((N, r))
        Rf[idx], Lf[idx] = Rb, Lb
        first = charge_index in idx
        rights.insert(0, Rf) if first else rights.append(Rf)
        lefts.insert(0, Lf) if first else lefts.append(Lf)
        owners.insert(0, np.full(r, ci)) if first else owners.append(np.full(r, ci))
    return Kernel(np.hstack(rights), np.hstack(lefts), comps, np.concatenate(owners))


def left_null_vector(L0, charge_index: int, strict: bool = False) -> np.ndarray:
    """Dual functional ell with ell L0 = 0 and ell(e_charge) = 1.

    With ``strict`` any null vector besides the charge raises
    :class:`DegenerateKernel`; otherwise the extra ones are deflated.
    """
    ker = kernel_bases(L0, charge_index)
    if strict and ker.dim > 1:
        raise DegenerateKernel(f"L0 has a {ker.dim}-dimensional kernel")
    return ker.ell


@dataclass
class SectorExpansion:
    """Generator plus its k-expansion and the factorised bordered system."""

    model: ModelSpec
    generator: PhasePolyMatrix
    L0: sp.csc_matrix
    L1: sp.csr_matrix
    L2: sp.csr_matrix
    charge: np.ndarray
    kernel: Kernel
    _lu: object = field(default=None, repr=False)
    _x: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_model(cls, model: ModelSpec) -> "SectorExpansion":
        return cls.from_generator(model, build(model))

    @classmethod
    def from_generator(cls, model, g: PhasePolyMatrix) -> "SectorExpansion":
        L0 = eval_at(g, 0.0).tocsc()
        ker = kernel_bases(L0, g.charge_index)
        return cls(model, g, L0, taylor_term(g, 1), taylor_term(g, 2), charge_vector(g), ker)

    @property
    def ell(self) -> np.ndarray:
        return self.kernel.ell

    @property
    def dim(self) -> int:
        return self.L0.shape[0]

    @property
    def current(self) -> np.ndarray:
        """L1 C, the current in sector coordinates."""
        return self.L1 @ self.charge

    def bordered_lu(self, component: int):
        """LU of the block [[L0_B, R_B], [Lk_B^T, 0]] of one decoupled component."""
        if self._lu is None:
            self._lu = {}
        if component not in self._lu:
            idx = self.kernel.components[component]
            cols = np.flatnonzero(self.kernel.owner == component)
            A = self.L0[idx][:, idx]
            if len(cols):
                R = self.kernel.right[np.ix_(idx, cols)]
                Lk = self.kernel.left[np.ix_(idx, cols)]
                A = sp.bmat([[A, sp.csc_matrix(R)], [sp.csr_matrix(Lk.T), None]], format="csc")
            try:
                self._lu[component] = _splu(A)
            except RuntimeError as exc:
                raise DegenerateKernel(f"bordered generator is singular: {exc}") from exc
        return self._lu[component]

    def reduced_resolvent(self, b: np.ndarray) -> np.ndarray:
        """x with L0 x = Q b and Lk^T x = 0 (Q removes the whole kernel)."""
        x = np.zeros(self.dim, dtype=np.result_type(b, float))
        for c, idx in enumerate(self.kernel.components):
            bb = b[idx]
            if not np.any(bb):
                continue
            lu = self.bordered_lu(c)
            rhs = np.concatenate([bb, np.zeros(lu.shape[0] - len(idx))])
            if np.iscomplexobj(rhs):
                sol = lu.solve(rhs.real.copy()) + 1j * lu.solve(rhs.imag.copy())
            else:
                sol = lu.solve(rhs)
            x[idx] = sol[: len(idx)]
        return x

    @property
    def first_order_solution(self) -> np.ndarray:
        if self._x is None:
            self._x = self.reduced_resolvent(self.current)
        return self._x

    def dressed_charge(self, k: float) -> np.ndarray:
        return self.charge - k * self.first_order_solution

    def project(self, v: np.ndarray) -> np.ndarray:
        """Remove the kernel component, v - R (Lk^T v)."""
        return v - self.kernel.right @ (self.kernel.left.T @ v)

    def kernel_coupling(self) -> np.ndarray:
        """First-order block Lk^T L1 R within the kernel."""
        return self.kernel.left.T @ (self.L1 @ self.kernel.right)

    @cached_property
    def blocks(self) -> list[np.ndarray]:
        return symmetry_blocks(self.generator)

    @cached_property
    def decoherence_free(self) -> np.ndarray:
        return decoherence_free_mask(self.model, self.generator.basis)

    @cached_property
    def block_realifiers(self) -> list | None:
        """Per-block unitaries making the generator real, if the model is mirror symmetric."""
        perm = reflection_permutation(self.generator.basis)
        if not is_reflection_symmetric(self.generator, perm):
            return None
        out = []
        for idx in self.blocks:
            local = np.full(self.dim, -1)
            local[idx] = np.arange(len(idx))
            lp = local[perm[idx]]
            if (lp < 0).any():
                return None
            out.append(realifier(lp))
        return out


def expansion(model) -> SectorExpansion:
    return model if isinstance(model, SectorExpansion) else SectorExpansion.from_model(model)


@dataclass
class HydroSolution:
    D: float
    method: str
    dressed_charge: KVector | None
    first_order: complex
    residual: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    loss: dict = field(default_factory=dict)


@dataclass
class SpectralScan:
    """Per-k slow eigenvalue and first relaxing eigenvalue above it."""

    k: np.ndarray
    slow: np.ndarray
    E1: np.ndarray
    overlap: np.ndarray
    block: np.ndarray
    method: str = "blocks"

    @property
    def rates(self) -> np.ndarray:
        return -self.E1.real


# ------------------------------------------------------------ transport checks

def drude_check(model) -> complex:
    """First-order dispersion coefficient ell(L1 C); nonzero means ballistic transport."""
    ex = expansion(model)
    return complex(ex.ell @ ex.current)


def _require_diffusive(ex: SectorExpansion) -> complex:
    b1 = drude_check(ex)
    if abs(b1) > BALLISTIC_TOL:
        raise BallisticTransport(b1, BALLISTIC_TOL)
    if ex.kernel.dim > 1:
        K1 = ex.kernel_coupling()
        leak = max(np.abs(K1[1:, 0]).max(), np.abs(K1[0, 1:]).max())
        if leak > BALLISTIC_TOL:
            # first-order mixing with another conserved mode: the slow branch is linear in k
            raise BallisticTransport(leak, BALLISTIC_TOL)
    return b1


def _real_D(value: complex, method: str) -> float:
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        raise SolverDivergence(f"{method}: diffusivity has imaginary part {value.imag:.3e}")
    return float(value.real)


def _loss_summary(ex: SectorExpansion, x: np.ndarray) -> dict:
    loss = ex.generator.loss
    return {"generator": float(loss.sum()), "solution": float(np.abs(x) @ loss)}


def _second_order_block(ex: SectorExpansion) -> np.ndarray:
    """Lk^T (L2 - L1 S L1) R, the k^2 effective generator on the kernel."""
    R, Lk = ex.kernel.right, ex.kernel.left
    cols = [ex.first_order_solution] + [ex.reduced_resolvent(ex.L1 @ R[:, j])
                                        for j in range(1, ex.kernel.dim)]
    X = np.stack(cols, axis=1)
    return Lk.T @ (ex.L2 @ R) - Lk.T @ (ex.L1 @ X)


# ----------------------------------------------------------- diffusivity

def diffusivity_resolvent(model) -> HydroSolution:
    ex = expansion(model)
    b1 = _require_diffusive(ex)
    b = ex.current
    x = ex.first_order_solution
    res = np.linalg.norm(ex.L0 @ x - ex.project(b))
    if res > 1e-10 * max(1.0, np.linalg.norm(b)):
        raise SolverDivergence(f"reduced resolvent residual {res:.3e}")
    val = -(ex.ell @ (ex.L2 @ ex.charge) - ex.ell @ (ex.L1 @ x))
    diag = {"imag": float(np.imag(val)), "ell_x": complex(ex.ell @ x), "kernel_dim": ex.kernel.dim}
    if ex.kernel.dim > 1:
        # branch of the effective kernel matrix that continues the charge
        w, V = np.linalg.eig(_second_order_block(ex))
        diag["D_kernel_branch"] = float(-w[int(np.argmax(np.abs(V[0])))].real)
    return HydroSolution(
        D=_real_D(complex(val), "resolvent"), method="resolvent",
        dressed_charge=KVector(ex.generator.basis, 1.0, ex.charge - x),
        first_order=b1, residual=float(res), diagnostics=diag,
        loss=_loss_summary(ex, x),
    )


def diffusivity_time_integral(model, t_max: float = 1e5, tolerance: float = 1e-12,
                              krylov_dim: int = 30) -> HydroSolution:
    ex = expansion(model)
    b1 = _require_diffusive(ex)
    b = ex.project(ex.current.astype(complex))
    functional = np.asarray(ex.ell @ ex.L1).ravel()
    try:
        integral, t_end, panels = expv_integral(
            lambda v: ex.L0 @ v, b, functional, tol=tolerance, decay_tol=tolerance,
            t_max=t_max, m=min(krylov_dim, ex.dim), project=ex.project,
        )
    except RuntimeError as exc:
        raise NonDecayingIntegrand(str(exc)) from exc
    val = -(ex.ell @ (ex.L2 @ ex.charge) + integral)
    return HydroSolution(
        D=_real_D(complex(val), "integral"), method="integral", dressed_charge=None,
        first_order=b1, diagnostics={"t_end": t_end, "panels": panels, "imag": float(np.imag(val))},
        loss={"generator": ex.generator.total_loss},
    )


def _overlap(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(abs(np.vdot(u, v)) / (nu * nv))


def _eigpairs_near(A, sigma: complex, nev: int, v0=None):
    N = A.shape[0]
    if N <= DENSE_LIMIT:
        w, V = scipy.linalg.eig(A.toarray())
        order = np.argsort(np.abs(w - sigma))[:nev]
        return w[order], V[:, order]
    nev = min(nev, N - 2)
    return spla.eigs(A.astype(complex).tocsc(), k=nev, sigma=sigma, which="LM", v0=v0, tol=1e-13)


def slow_eigenpair(model, k: float, sigma: complex | None = None, nev: int | None = None):
    """Eigenpair of the sector generator at k tracked by overlap with the dressed charge.

    The shift defaults to the second-order estimate ``-D k^2`` (or 0 when the
    resolvent diffusivity is unavailable).
    """
    ex = expansion(model)
    A = eval_at(ex.generator, k)
    d = ex.dressed_charge(k)
    if sigma is None:
        try:
            sigma = -diffusivity_resolvent(ex).D * k * k
        except (BallisticTransport, DegenerateKernel):
            sigma = 0.0
        if sigma == 0.0:
            sigma = -1e-9
    if nev is None:
        nev = ex.kernel.dim + 4
    w, V = _eigpairs_near(A, sigma, nev, v0=d.astype(complex))
    ov = np.array([_overlap(d, V[:, j]) for j in range(len(w))])
    j = int(np.argmax(ov))
    if ov[j] < TRACKING_THRESHOLD:
        raise ModeTrackingLost(f"k={k}: best overlap with the dressed charge is {ov[j]:.3f}")
    return complex(w[j]), V[:, j], float(ov[j])


def dispersion_direct(model, k_values: Sequence[float]) -> list[tuple[float, complex]]:
    """(k, Omega_k) for the slow mode, with eigenvalue -i Omega_k of the generator."""
    ex = expansion(model)
    out = []
    for k in k_values:
        if k == 0:
            out.append((0.0, 0j))
            continue
        lam, _, _ = slow_eigenpair(ex, float(k))
        out.append((float(k), complex(1j * lam)))
    return out


def diffusivity_direct(model, k: float = 0.1) -> HydroSolution:
    """Two-point Richardson fit of -Im(Omega_k)/k^2 using k and k/2."""
    ex = expansion(model)
    b1 = _require_diffusive(ex)
    (k1, om1), (k2, om2) = dispersion_direct(ex, [k, k / 2])
    d1, d2 = -om1.imag / k1 ** 2, -om2.imag / k2 ** 2
    D = (4 * d2 - d1) / 3
    return HydroSolution(
        D=float(D), method="direct", dressed_charge=None, first_order=b1,
        diagnostics={"k": k, "D_k": d1, "D_k2": d2, "re_omega": [om1.real, om2.real]},
        loss={"generator": ex.generator.total_loss},
    )


# ------------------------------------------------------- decoherence time

def df_weight(V: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Fraction of each column's squared norm carried by decoherence-free strings."""
    tot = np.sum(np.abs(V) ** 2, axis=0)
    return np.sum(np.abs(V[mask]) ** 2, axis=0) / np.where(tot > 0, tot, 1.0)


def _real_form(A: sp.spmatrix, T: sp.spmatrix, phases: np.ndarray) -> sp.csc_matrix:
    B = T.conj().T @ (sp.diags(phases) @ A @ sp.diags(1 / phases)) @ T
    B = sp.csc_matrix(B)
    if B.nnz and np.abs(B.data.imag).max() > 1e-10 * max(1.0, np.abs(B.data).max()):
        raise SolverDivergence("mirror-symmetric real form has an imaginary part")
    return sp.csc_matrix(B.real)


def _block_spectrum(A: sp.csc_matrix, df: np.ndarray, extra: int = 6, real_form=None,
                    vectors: bool = True):
    """Eigenpairs of one block covering at least one relaxing (non decoherence-free) mode.

    Returns the full spectrum when dense; otherwise the rightmost eigenvalues,
    enough of them that every eigenvalue right of the rightmost relaxing one
    is included. ``real_form = (T, phases)`` solves the similar real matrix
    instead and maps eigenvectors back. Without ``vectors`` (allowed only for
    blocks free of decoherence-free strings) V is None.
    """
    if real_form is not None:
        T, phases = real_form
        w, VB = _block_spectrum(_real_form(A, T, phases), df, extra, vectors=vectors)
        return w, (None if VB is None else (T @ VB) / phases[:, None])
    N = A.shape[0]
    ndf = int(df.sum())
    if N <= DENSE_BLOCK:
        M = A.toarray()
        if not vectors and not ndf:
            return scipy.linalg.eigvals(M, check_finite=False), None
        return scipy.linalg.eig(M, check_finite=False)
    nev = min(ndf + extra, N - 2)
    while True:
        try:
            w, V = spla.eigs(A, k=nev, which="LR", ncv=min(N - 1, 2 * nev + 20), tol=1e-12,
                             maxiter=20 * N)
        except spla.ArpackNoConvergence as exc:
            raise SolverDivergence(f"Arnoldi did not converge on a block of size {N}") from exc
        if (df_weight(V, df) < DF_WEIGHT).any() or nev >= N - 2:
            return w, V
        nev = min(2 * nev, N - 2)


def _scan_point(ex: SectorExpansion, k: float):
    """(slow, E1, overlap, block index) at one k."""
    A = eval_at(ex.generator, k).astype(complex).tocsr()
    d = ex.dressed_charge(k)
    ci = ex.generator.charge_index
    reals = ex.block_realifiers
    phases = centered_phases(ex.generator.basis, k)
    slow, ov_slow, e1, e1_block = np.nan + 0j, 0.0, None, -1
    for b, idx in enumerate(ex.blocks):
        sub = A[idx][:, idx].tocsc()
        rf = None if reals is None else (reals[b], phases[idx])
        dfb = ex.decoherence_free[idx]
        w, V = _block_spectrum(sub, dfb, real_form=rf, vectors=bool(dfb.any()) or ci in idx)
        cand = np.ones(len(w), bool) if V is None else df_weight(V, dfb) < DF_WEIGHT
        if ci in idx:
            db = d[idx]
            ov = np.array([_overlap(db, V[:, j]) for j in range(len(w))])
            js = int(np.argmax(ov))
            slow, ov_slow = complex(w[js]), float(ov[js])
            if ov_slow >= TRACKING_THRESHOLD:
                cand[js] = False
        if cand.any():
            j = np.flatnonzero(cand)[int(np.argmax(w[cand].real))]
            if e1 is None or w[j].real > e1.real:
                e1, e1_block = complex(w[j]), b
    if e1 is None:
        raise GapClosure(f"k={k}: no relaxing mode found above the slow mode")
    if np.isfinite(slow) and abs(e1 - slow) < GAP_TOL * max(abs(e1), abs(slow)):
        raise GapClosure(f"k={k}: next eigenvalue {e1} indistinguishable from slow mode {slow}")
    return slow, e1, ov_slow, e1_block


def default_k_grid(kpoints: int = 64) -> np.ndarray:
    return np.pi * np.arange(1, kpoints + 1) / kpoints


def decoherence_time(model, k_grid: Sequence[float] | None = None, *, kpoints: int = 64,
                     refine: bool = True):
    """tau = max_k 1/(-Re E1_k).

    E1_k is the rightmost eigenvalue that is neither the slow mode nor dominated
    (weight >= 1/2) by decoherence-free strings; the latter are truncation
    remnants of exactly conserved operators. Symmetry blocks are solved
    separately. With ``refine`` the two midpoints next to the grid maximum
    are added.
    """
    ex = expansion(model)
    ks = np.sort(np.asarray(default_k_grid(kpoints) if k_grid is None else k_grid, dtype=float))
    if len(ks) == 0 or ks[0] <= 0 or ks[-1] > np.pi + 1e-12:
        raise ValueError("k grid must lie in (0, pi]")
    results = {float(k): _scan_point(ex, float(k)) for k in ks}
    if refine and len(ks) > 1:
        kstar = min(results, key=lambda q: -results[q][1].real)
        h = float(np.min(np.diff(ks)))
        for kk in (kstar - h / 2, kstar + h / 2):
            if 0 < kk <= np.pi and kk not in results:
                results[kk] = _scan_point(ex, kk)
    kk = np.array(sorted(results))
    scan = SpectralScan(
        k=kk,
        slow=np.array([results[k][0] for k in kk]),
        E1=np.array([results[k][1] for k in kk]),
        overlap=np.array([results[k][2] for k in kk]),
        block=np.array([results[k][3] for k in kk]),
    )
    if np.any(scan.rates <= 0):
        raise GapClosure("non-positive relaxation rate above the slow mode")
    return float(np.max(1.0 / scan.rates)), scan


def current_coordinates(model) -> LocalOperator:
    ex = expansion(model)
    return pullback(ex.current, ex.generator.basis)


def microscopic_diffusivity(model) -> tuple[float, float]:
    """Interval for |L2 C| / |C| using certified seminorm bounds."""
    ex = expansion(model)
    op = pullback(ex.L2 @ ex.charge, ex.generator.basis)
    lo, hi = seminorm_bounds(op)
    clo, chi = seminorm_bounds(LocalOperator.from_string(ex.model.charge_string))
    return lo / chi, (hi / clo if hi else 0.0)
