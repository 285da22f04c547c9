"""Dense two-phase simplex for the small LPs of the beam-power step.

Solves  min c.x  s.t.  a_ge.x >= b_ge,  a_le.x <= b_le,  x >= 0
with Bland's smallest-index pivoting rule (guarantees termination on
degenerate problems). Intended for dense systems of a few dozen
variables; everything is kept in one numpy tableau.
"""

from __future__ import annotations

import numpy as np

from .errors import Infeasible, Unbounded

_TOL = 1e-10


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    colvals = T[:, col].copy()
    colvals[row] = 0.0
    T -= np.outer(colvals, T[row])
    basis[row] = col


def _bland(T, basis, ncols, tol=_TOL):
    """Run simplex pivots on tableau T until optimal; raises Unbounded."""
    m = T.shape[0] - 1
    while True:
        col = -1
        for j in range(ncols):
            if T[-1, j] < -tol:
                col = j
                break
        if col < 0:
            return
        best_row, best_ratio = -1, np.inf
        for r in range(m):
            a = T[r, col]
            if a > tol:
                ratio = T[r, -1] / a
                if best_row < 0 or ratio < best_ratio - 1e-12 or (
                        abs(ratio - best_ratio) <= 1e-12
                        and basis[r] < basis[best_row]):
                    best_ratio, best_row = ratio, r
        if best_row < 0:
            raise Unbounded("no blocking constraint in the pivot column")
        _pivot(T, basis, best_row, col)


def solve_lp(c, a_ge=None, b_ge=None, a_le=None, b_le=None):
    """Optimal x >= 0 minimizing c.x under the given inequality system.

    Raises Infeasible / Unbounded. Rows are equilibrated before solving,
    so mixed physical scales are tolerated.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    rows, rhs = [], []
    if a_ge is not None and len(a_ge):
        a_ge = np.atleast_2d(np.asarray(a_ge, dtype=float))
        rows.append(-a_ge)                      # -a.x <= -b
        rhs.append(-np.atleast_1d(np.asarray(b_ge, dtype=float)))
    if a_le is not None and len(a_le):
        a_le = np.atleast_2d(np.asarray(a_le, dtype=float))
        rows.append(a_le)
        rhs.append(np.atleast_1d(np.asarray(b_le, dtype=float)))
    if not rows:
        if np.any(c < 0):
            raise Unbounded("negative cost with no constraints")
        return np.zeros(n)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    m = A.shape[0]

    # equilibrate rows, then flip signs so b >= 0
    scale = np.maximum(np.max(np.abs(A), axis=1), np.abs(b))
    scale[scale == 0.0] = 1.0
    A = A / scale[:, None]
    b = b / scale
    flip = b < 0
    # each row is a.x <= b; slack has +1 coefficient before flipping
    slack_sign = np.where(flip, -1.0, 1.0)
    A[flip] *= -1.0
    b[flip] *= -1.0

    # tableau columns: [x (n) | slacks (m) | artificials (m) | rhs]
    ncols = n + 2 * m
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.diag(slack_sign)
    T[:m, n + m:n + 2 * m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(n + m, n + 2 * m))

    # phase 1: minimize sum of artificials
    T[-1, :] = 0.0
    T[-1, n + m:n + 2 * m] = 1.0
    for r in range(m):
        T[-1] -= T[r]
    T[-1, n + m:n + 2 * m] = 0.0
    _bland(T, basis, n + m)
    if T[-1, -1] < -1e-8:
        raise Infeasible(f"phase-1 residual {-T[-1, -1]:.3e}")

    # drive remaining artificials out of the basis, drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n + m:
            piv = -1
            for j in range(n + m):
                if abs(T[r, j]) > 1e-9:
                    piv = j
                    break
            if piv >= 0:
                _pivot(T, basis, r, piv)
                keep.append(r)
            # else: redundant zero row, drop it
        else:
            keep.append(r)
    if len(keep) < m:
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
        m = len(keep)

    # phase 2: real objective expressed over the current basis
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r in range(m):
        if T[-1, basis[r]] != 0.0:
            T[-1] -= T[-1, basis[r]] * T[r]
    _bland(T, basis, n + m)

    x = np.zeros(n)
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = T[r, -1]
    return x
