"""Cyclic Jacobi eigenvalues for small symmetric and Hermitian matrices."""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix, ascending."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError("matrix is not symmetric")
    a = (a + a.T) / 2
    scale = np.abs(a).max(initial=0.0)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(a * a * (1 - np.eye(n)))))
        if off <= tol * max(scale, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rot_p = a[:, p].copy()
                rot_q = a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                rot_p = a[p, :].copy()
                rot_q = a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.sort(np.diag(a))


def hermitian_eigenvalues(h: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix via its real ``2n x 2n`` embedding.

    ``[[A, -B], [B, A]]`` with ``H = A + iB`` has every eigenvalue of ``H``
    twice, so every other sorted value is kept.
    """
    h = np.asarray(h, dtype=complex)
    if not np.allclose(h, h.conj().T, atol=1e-12 * max(1.0, np.abs(h).max(initial=0.0))):
        raise ValueError("matrix is not Hermitian")
    a, b = h.real, h.imag
    embedded = np.block([[a, -b], [b, a]])
    return jacobi_eigenvalues(embedded, tol)[::2]
