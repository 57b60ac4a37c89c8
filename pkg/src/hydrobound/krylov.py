"""Arnoldi-based action of exp(tA) on a vector, and its time integral."""
from __future__ import annotations

import numpy as np
import scipy.linalg


def arnoldi(matvec, v: np.ndarray, m: int):
    """m-step Arnoldi with modified Gram-Schmidt (one reorthogonalisation pass).

    Returns (V, H, beta, h_next) where V has orthonormal columns, H is the
    (m, m) upper Hessenberg projection, beta = |v| and h_next = H[m, m-1] of
    the extended factorisation. Stops early on (happy) breakdown.
    """
    beta = np.linalg.norm(v)
    N = v.shape[0]
    V = np.zeros((N, m + 1), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    V[:, 0] = v / beta
    for j in range(m):
        w = matvec(V[:, j]).astype(complex)
        for _ in range(2):
            h = V[:, : j + 1].conj().T @ w
            w -= V[:, : j + 1] @ h
            H[: j + 1, j] += h
        H[j + 1, j] = np.linalg.norm(w)
        if H[j + 1, j] < 1e-14 * beta:
            return V[:, : j + 1], H[: j + 1, : j + 1], beta, 0.0
        V[:, j + 1] = w / H[j + 1, j]
    return V[:, :m], H[:m, :m], beta, float(H[m, m - 1].real)


def phi_pair(H: np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray]:
    """``exp(sH) e1`` and ``int_0^s exp(uH) e1 du`` from one augmented exponential."""
    m = H.shape[0]
    aug = np.zeros((m + 1, m + 1), dtype=complex)
    aug[:m, :m] = s * H
    aug[0, m] = s
    E = scipy.linalg.expm(aug)
    # top-right block of expm([[sH, s e1],[0, 0]]) is s*phi1(sH) e1
    return E[:m, 0], E[:m, m]


def expv_integral(matvec, v: np.ndarray, functional: np.ndarray, *, tol: float = 1e-10,
                  decay_tol: float = 1e-12, t_max: float = 1e6, m: int = 30,
                  project=None, max_panels: int = 100000):
    """Integrate ``functional . exp(tA) v`` over t in [0, inf).

    Time is cut into panels whose length is controlled by the Krylov error
    estimate; inside each panel the integral of the Krylov propagator is exact.
    Integration stops once |v(t)| has decayed below ``decay_tol`` times its
    peak. Returns (integral, t_end, panels); raises RuntimeError past t_max.
    """
    total = 0.0 + 0.0j
    t = 0.0
    peak = np.linalg.norm(v)
    s = None
    panels = 0
    while True:
        nv = np.linalg.norm(v)
        if nv <= decay_tol * peak or nv == 0.0:
            return total, t, panels
        if t > t_max or panels >= max_panels:
            raise RuntimeError(f"integrand still {nv / peak:.2e} of its peak at t={t:.4g}")
        V, H, beta, h_next = arnoldi(matvec, v, m)
        wV = functional @ V
        if s is None:
            s = 1.0 / max(np.abs(H).max(), 1e-300)
        while True:
            e1, i1 = phi_pair(H, s)
            err = beta * h_next * abs(e1[-1]) if h_next else 0.0
            if err <= tol * peak or s < 1e-12:
                break
            s *= 0.5
        total += beta * (wV @ i1)
        v = beta * (V @ e1)
        if project is not None:
            v = project(v)
        t += s
        panels += 1
        peak = max(peak, np.linalg.norm(v))
        if err < 0.1 * tol * peak:
            s *= 1.5
