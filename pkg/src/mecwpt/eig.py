"""Cyclic Jacobi eigendecomposition for Hermitian matrices.

Rotations zero one off-diagonal pair at a time; sweeps repeat until the
off-diagonal Frobenius norm falls below 1e-11 of the matrix norm. Sized
for the dense matrices of this package (a few hundred rows at most; the
hot path of the charging solver only ever feeds it K x K systems).
"""

from __future__ import annotations

import numpy as np

_OFF_TOL = 1e-11
_MAX_SWEEPS = 60


def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return np.linalg.norm(off)


def eigh_ascending(m):
    """Eigenvalues (ascending) and orthonormal eigenvectors of Hermitian m.

    Returns (w, v) with m @ v[:, j] == w[j] * v[:, j]. Raises ValueError
    if m is not Hermitian within 1e-10 of its norm, RuntimeError if the
    sweep budget is exhausted.
    """
    m = np.asarray(m)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {m.shape}")
    norm = np.linalg.norm(m)
    if norm > 0 and np.linalg.norm(m - m.conj().T) > 1e-10 * norm:
        raise ValueError("matrix is not Hermitian within tolerance")

    a = np.array(m, dtype=complex)
    v = np.eye(n, dtype=complex)
    if n == 1:
        return np.array([a[0, 0].real]), v

    tol = max(_OFF_TOL * norm, 1e-300)
    skip = tol / max(n * n, 1)
    for _ in range(_MAX_SWEEPS):
        if _off_norm(a) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= skip:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = np.sign(theta) if theta != 0 else 1.0
                t = t / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                sp = s * phase
                # columns (a @ J), then rows (J^H @ a)
                colp = a[:, p] * c - a[:, q] * np.conj(sp)
                colq = a[:, p] * sp + a[:, q] * c
                a[:, p], a[:, q] = colp, colq
                rowp = a[p, :] * c - a[q, :] * sp
                rowq = a[p, :] * np.conj(sp) + a[q, :] * c
                a[p, :], a[q, :] = rowp, rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                colp = v[:, p] * c - v[:, q] * np.conj(sp)
                colq = v[:, p] * sp + v[:, q] * c
                v[:, p], v[:, q] = colp, colq
    else:
        raise RuntimeError("Jacobi sweeps did not converge")

    vals = np.real(np.diag(a))
    order = np.argsort(vals, kind="stable")
    return vals[order], v[:, order]
