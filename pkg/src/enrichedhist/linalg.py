"""Small dense symmetric eigenproblems (cyclic Jacobi)."""

from __future__ import annotations

import numpy as np


class NotSymmetricError(ValueError):
    pass


class SingularGramError(np.linalg.LinAlgError):
    pass


def sym_eig(a, tol: float = 1e-13, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.

    Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
    ``tol * ||a||_F``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("square matrix required")
    norm = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-9 * max(norm, 1e-300):
        raise NotSymmetricError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n == 0 or norm == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.linalg.norm(a[~np.eye(n, dtype=bool)])
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


def inv_sqrt_spd(g) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix."""
    w, v = sym_eig(g)
    if w.size and w[0] <= 1e-13 * max(abs(w[-1]), 1e-300):
        raise SingularGramError("numerically singular Gram matrix")
    return (v / np.sqrt(w)) @ v.T


def min_eig(a) -> float:
    return float(sym_eig(a)[0][0])


def cond2(a) -> float:
    """2-norm condition number via the eigenvalues of ``a^T a``."""
    a = np.asarray(a, dtype=float)
    w = sym_eig(a.T @ a)[0]
    if w[0] <= 0.0:
        return float("inf")
    return float(np.sqrt(w[-1] / w[0]))
