"""Pauli-parity symmetry blocks and decoherence-free strings of a sector generator.

Each Pauli string carries two Z2 labels: the parity of letters that
anticommute with X (Y, Z) and of letters that anticommute with Z (X, Y).
Models built from products of Paulis often conserve one or both, which
block-diagonalises the generator. Whether a label is conserved is decided
numerically from the stored grade matrices, so nothing model specific is
assumed.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .generator import ModelSpec, PhasePolyMatrix, build
from .ksector import KBasis

BLOCK_TOL = 1e-13


def parity_labels(basis: KBasis) -> np.ndarray:
    """(size, 2) array of 0/1 labels: #(Y,Z) mod 2 and #(X,Y) mod 2."""
    cd = basis.codes
    a = ((cd == 2) | (cd == 3)).sum(axis=1) % 2
    b = ((cd == 1) | (cd == 2)).sum(axis=1) % 2
    return np.stack([a, b], axis=1).astype(np.int8)


def _label_conserved(g: PhasePolyMatrix, label: np.ndarray) -> bool:
    for gm in g.grades.values():
        coo = gm.tocoo()
        mask = label[coo.row] != label[coo.col]
        if mask.any() and np.abs(coo.data[mask]).max() > BLOCK_TOL:
            return False
    return True


def symmetry_blocks(g: PhasePolyMatrix) -> list[np.ndarray]:
    """Index sets of the blocks left invariant by every grade matrix."""
    labels = parity_labels(g.basis)
    keep = [j for j in range(labels.shape[1]) if _label_conserved(g, labels[:, j])]
    if not keep:
        return [np.arange(len(g.basis))]
    key = labels[:, keep] @ (2 ** np.arange(len(keep)))
    return [np.flatnonzero(key == v) for v in np.unique(key)]


def decoherence_free_mask(model: ModelSpec, basis: KBasis | None = None) -> np.ndarray:
    """Strings annihilated by the dissipator at every k (e.g. Z/I strings under Z dephasing)."""
    dis = build(model.with_(hamiltonian=()), basis, check_charge=False)
    N = len(dis.basis)
    mag = np.zeros(N)
    for gm in dis.grades.values():
        mag += np.asarray(abs(gm).sum(axis=0)).ravel()
    return mag <= BLOCK_TOL


def reflection_permutation(basis: KBasis) -> np.ndarray:
    """Index of each string's mirror image (letters reversed within its extent)."""
    cd, ext = basis.codes, basis.extents
    rev = np.zeros_like(cd)
    cols = np.arange(cd.shape[1])
    src = ext[:, None] - 1 - cols[None, :]
    valid = src >= 0
    rows = np.nonzero(valid)
    rev[rows] = cd[rows[0], src[valid]]
    perm = basis.lookup_codes(rev)
    assert (perm >= 0).all()
    return perm


def centered_phases(basis: KBasis, k: float) -> np.ndarray:
    """exp(ik(e-1)/2) for extent e; conjugating by it places each label about its midpoint."""
    return np.exp(0.5j * k * (basis.extents - 1))


def is_reflection_symmetric(g: PhasePolyMatrix, perm: np.ndarray, k: float = 0.7) -> bool:
    """True when the mirror image maps the generator at k onto its complex conjugate."""
    from .generator import eval_at
    D = centered_phases(g.basis, k)
    A = sp.diags(D) @ eval_at(g, k) @ sp.diags(1 / D)
    P = sp.csr_matrix((np.ones(len(perm)), (np.arange(len(perm)), perm)), shape=A.shape)
    diff = P @ A @ P.T - A.conj()
    return diff.nnz == 0 or abs(diff).max() <= BLOCK_TOL * max(1.0, abs(A).max())


def realifier(perm: np.ndarray) -> sp.csc_matrix:
    """Unitary T with T^H A T real whenever P A P = conj(A) for the involution P.

    Fixed points keep their unit vector; a mirror pair (a, b) becomes
    (e_a + e_b)/sqrt2 and i(e_a - e_b)/sqrt2.
    """
    N = len(perm)
    a = np.arange(N)
    fixed = perm == a
    lo = a[(perm > a)]
    hi = perm[lo]
    s = 1 / np.sqrt(2)
    f = a[fixed]
    rows = np.concatenate([f, lo, hi, lo, hi])
    cols = np.concatenate([f, lo, lo, hi, hi])
    vals = np.concatenate([np.ones(len(f)), np.full(len(lo), s), np.full(len(lo), s),
                           np.full(len(lo), 1j * s), np.full(len(lo), -1j * s)]).astype(complex)
    return sp.csc_matrix((vals, (rows, cols)), shape=(N, N))
