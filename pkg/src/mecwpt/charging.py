"""Energy-beamforming solver: beam directions, beam powers, energy ratios.

The optimal transmit covariance shares eigenvectors with the dual matrix
B = (T_c + lambda5) I - xi T_c sum_i psi_i alpha_i h_i h_i^H, beams
pairing in reverse eigenvalue order, so only the K-dimensional channel
subspace matters: the top-K eigenvectors of the weighted channel
covariance are computed from a K x K reduced problem (exactly equivalent,
and cheap enough for the dual loop). Beam powers solve a small LP with a
descending-order constraint; the energy-ratio vector scales requests down
when the AP power cap binds.

A final global scale keeps every user's received energy at or below its
request (the LP lower-bounds delivery, so slack rows can over-deliver on
spill; the scale restores the fairness cap). Users requesting zero energy
are exempt - incidental spill onto them is not capped.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .eig import eigh_ascending
from .errors import ChargingDisabled, Infeasible
from .simplex import solve_lp

log = logging.getLogger(__name__)

_ORTHO_TOL = 1e-14


@dataclass
class ChargingDuals:
    """Multipliers of the received-energy constraints (psi, per user)
    and of the AP power cap (lambda5)."""

    psi: np.ndarray
    lambda5: float

    def copy(self):
        return ChargingDuals(self.psi.copy(), self.lambda5)


@dataclass
class BeamSolution:
    U_B: np.ndarray        # (N, N) unitary, first K columns are the beams
    lambda_q: np.ndarray   # (K,) beam powers, descending, W
    alpha: np.ndarray      # (K,) delivered fraction of each request, [0, 1]
    W_q: np.ndarray        # (N, N) Hermitian PSD transmit covariance
    B_matrix: np.ndarray   # (N, N) dual matrix at the returned point
    received: np.ndarray   # (K,) harvested energy, J
    converged: bool
    iterations: int
    power_capped: bool     # AP power cap bound the beam-power scaling
    cap_scale: float       # global over-delivery scale applied (1 if none)
    charge_flat: float     # charging energy when the cap is slack, J
    charge_slope: float    # d(charging energy)/dT_c when the cap binds, W

    def charge_energy_at(self, t_c):
        """Charging-energy surrogate at another charging window (exact
        while the beam directions and duals stay fixed)."""
        if t_c <= 0:
            return 0.0
        return min(self.charge_flat, self.charge_slope * t_c)


def build_B(duals, alpha, channels, T_c, params):
    """Dual matrix whose ascending eigenvectors give the beam directions.

    channels: (K, N) rows h_i. Hermitian by construction. Raises
    ChargingDisabled when no charging window exists.
    """
    if T_c <= 0:
        raise ChargingDisabled(f"T_c = {T_c:.3g} s leaves no charging window")
    n = channels.shape[1]
    weights = params.xi * T_c * duals.psi * np.asarray(alpha, dtype=float)
    m = np.einsum("k,kn,km->nm", weights, channels, channels.conj())
    b = (T_c + duals.lambda5) * np.eye(n, dtype=complex) - m
    return 0.5 * (b + b.conj().T)   # exact Hermitian symmetry


@dataclass
class _P4Result:
    lambda_q: np.ndarray   # descending beam powers after the power cap
    alpha: np.ndarray      # energy-ratio rule output, clipped to [0, 1]
    received: np.ndarray   # xi*T_c*(A @ lambda_q), J (before fairness scale)
    power_capped: bool
    stage1_sum: float      # sum of the uncapped beam powers
    a_matrix: np.ndarray   # (K, K) beam-to-user couplings |h_i^H u_j|^2
    relaxed: np.ndarray    # rows dropped as unreachable (bool mask)


def solve_p4(u_beams, channels, e, T_c, params):
    """Beam powers and energy ratios for fixed beam directions.

    u_beams: (N, K) orthonormal beam columns; channels: (K, N) rows h_i.
    Two-stage rule: solve the delivery LP with full requests and no power
    cap; if the summed power fits the AP budget the ratios stay at one,
    otherwise powers are scaled onto the budget and the ratios follow.
    Unreachable requests (channel orthogonal to every beam) are relaxed
    to a zero ratio and logged. Returns (lambda_q, alpha) plus
    diagnostics in a _P4Result.
    """
    if T_c <= 0:
        raise ChargingDisabled(f"T_c = {T_c:.3g} s leaves no charging window")
    e = np.asarray(e, dtype=float)
    K = e.size
    u_beams = u_beams[:, :K]                     # K beams carry all the power
    a = np.abs(channels.conj() @ u_beams) ** 2   # (K, K)
    pi = e / (params.xi * T_c)

    want = pi > 0
    hnorm = np.sum(np.abs(channels) ** 2, axis=1)
    relaxed = want & (np.max(a, axis=1) <= _ORTHO_TOL * np.maximum(hnorm, 1e-300))
    if np.any(relaxed):
        log.warning("relaxing %d unreachable charging request(s): users %s",
                    int(np.sum(relaxed)), np.nonzero(relaxed)[0].tolist())
    keep = want & ~relaxed

    lam = np.zeros(K)
    if np.any(keep):
        order = np.triu(np.ones((K, K)))        # lambda = order @ z, z >= 0
        cost = np.arange(1, K + 1, dtype=float)
        keep_idx = np.nonzero(keep)[0]
        z, dropped = _lp_with_relaxation(cost, a[keep] @ order, pi[keep])
        lam = order @ z
        if dropped:
            relaxed[keep_idx[dropped]] = True
            keep = want & ~relaxed
    stage1_sum = float(np.sum(lam))

    capped = stage1_sum > params.P
    alpha = np.ones(K)
    if capped:
        lam = lam * (params.P / stage1_sum)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(pi > 0, (a @ lam) / np.maximum(pi, 1e-300), 1.0)
        alpha = np.clip(ratio, 0.0, 1.0)
    alpha[relaxed] = 0.0
    received = params.xi * T_c * (a @ lam)
    return _P4Result(lam, alpha, received, capped, stage1_sum, a, relaxed)


def _lp_with_relaxation(cost, rows, rhs):
    """Solve the delivery LP; on numerical infeasibility drop the least
    reachable row and retry. Returns (solution, dropped row indices)."""
    rows = np.array(rows, dtype=float)
    rhs = np.array(rhs, dtype=float)
    live = list(range(rhs.size))
    dropped = []
    while True:
        try:
            return solve_lp(cost, a_ge=rows, b_ge=rhs), dropped
        except Infeasible:
            if rhs.size == 0:
                return np.zeros(cost.size), dropped
            worst = int(np.argmin(np.max(rows, axis=1) / np.maximum(rhs, 1e-300)))
            log.warning("delivery LP infeasible; relaxing row %d", live[worst])
            dropped.append(live.pop(worst))
            rows = np.delete(rows, worst, axis=0)
            rhs = np.delete(rhs, worst)


def solve_p3(channels, e, T_c, params, max_iters=None):
    """Full charging solve: dual subgradient loop over (psi, lambda5),
    rebuilding beam directions and powers each iteration.

    channels: (K, N) rows h_i; e: (K,) requested energies, J. Returns
    the best feasible BeamSolution (received within [alpha*e, e] and
    tr(W_q) <= P). T_c <= 0 disables charging and returns a zero
    covariance with zero ratios.
    """
    e = np.asarray(e, dtype=float)
    K, N = channels.shape
    if T_c <= 0:
        return _zero_solution(channels, e, T_c, params, alpha=0.0)
    if not np.any(e > 0):
        return _zero_solution(channels, e, T_c, params, alpha=1.0)
    if max_iters is None:
        max_iters = params.max_charging_iters

    q_basis, r_tri = np.linalg.qr(channels.T)   # channels.T = q_basis @ r_tri
    duals = ChargingDuals(np.ones(K), 0.0)
    alpha_loop = np.ones(K)

    e_scale = np.maximum(e, 1e-12)
    best = None
    best_key = None
    g_prev = None
    converged = False
    iters = 0

    for k in range(1, max_iters + 1):
        iters = k
        weights = duals.psi * alpha_loop
        if float(np.max(weights)) <= 1e-14:
            # degenerate dual state: fall back to request-weighted directions
            weights = alpha_loop * e
            if float(np.max(weights)) <= 0.0:
                break
        s_mat = (r_tri * weights[None, :]) @ r_tri.conj().T
        _, vecs = eigh_ascending(s_mat)
        u_beams = q_basis @ vecs[:, ::-1]

        res = solve_p4(u_beams, channels, e, T_c, params)

        # fairness cap: nobody receives more than requested (zero requests
        # exempt; spill onto them is incidental)
        over = (e > 0) & (res.received > e)
        cap = 1.0
        if np.any(over):
            cap = float(np.min(e[over] / res.received[over]))
        lam_cap = res.lambda_q * cap
        rec_cap = res.received * cap
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha_rep = np.where(e > 0, np.minimum(rec_cap / e_scale, 1.0), 1.0)
        alpha_rep = np.where(res.relaxed, 0.0, alpha_rep)

        key = (float(np.sum(rec_cap)), -float(np.sum(lam_cap)))
        if best_key is None or key > best_key:
            best_key = key
            best = (u_beams.copy(), lam_cap, rec_cap, alpha_rep, duals.copy(),
                    alpha_loop.copy(), res, cap)

        g_psi = alpha_loop * e - res.received
        g_l5 = float(np.sum(res.lambda_q)) - params.P
        g_vec = np.concatenate([g_psi, [g_l5]])
        if g_prev is not None and np.linalg.norm(g_vec - g_prev) <= params.eps2:
            converged = True
            break
        g_prev = g_vec

        step = params.dual_step / math.sqrt(k)
        duals.psi = np.maximum(0.0, duals.psi + step * g_psi / e_scale)
        duals.lambda5 = max(0.0, duals.lambda5 + step * g_l5 / params.P)
        alpha_loop = res.alpha

    if best is None:
        return _zero_solution(channels, e, T_c, params, alpha=0.0)

    u_beams, lam_cap, rec_cap, alpha_rep, duals_b, alpha_l, res, cap = best
    u_full = _complete_unitary(u_beams)
    w_q = (u_beams * lam_cap[None, :]) @ u_beams.conj().T
    b_matrix = build_B(duals_b, alpha_l, channels, T_c, params)
    charge_flat = cap * T_c * res.stage1_sum
    charge_slope = cap * params.P
    return BeamSolution(
        U_B=u_full, lambda_q=lam_cap, alpha=alpha_rep, W_q=w_q,
        B_matrix=b_matrix, received=rec_cap, converged=converged,
        iterations=iters, power_capped=res.power_capped, cap_scale=cap,
        charge_flat=charge_flat, charge_slope=charge_slope)


def _zero_solution(channels, e, T_c, params, alpha):
    K, N = channels.shape
    return BeamSolution(
        U_B=np.eye(N, dtype=complex),
        lambda_q=np.zeros(K),
        alpha=np.full(K, float(alpha)),
        W_q=np.zeros((N, N), dtype=complex),
        B_matrix=np.zeros((N, N), dtype=complex),
        received=np.zeros(K),
        converged=True, iterations=0, power_capped=False, cap_scale=1.0,
        charge_flat=0.0, charge_slope=0.0)


def _complete_unitary(u_beams):
    """Extend orthonormal columns to a full unitary basis."""
    n, k = u_beams.shape
    if k >= n:
        return u_beams[:, :n]
    q, _ = np.linalg.qr(np.hstack([u_beams, np.eye(n, dtype=complex)]))
    out = np.asarray(q[:, :n], dtype=complex)
    out[:, :k] = u_beams   # qr may rephase; keep the exact beams
    return out


def write_beam_report(path, solution, channels):
    """Beam report CSV: beam index, power, per-user |h_i^H u_j|^2."""
    K = channels.shape[0]
    beams = solution.U_B[:, :solution.lambda_q.size]
    coupling = np.abs(channels.conj() @ beams) ** 2
    with open(path, "w", encoding="utf-8") as fh:
        header = "beam,power_w," + ",".join(f"coupling_user{i}" for i in range(K))
        fh.write(header + "\n")
        for j, p in enumerate(solution.lambda_q):
            row = [str(j), f"{p:.12g}"] + [f"{coupling[i, j]:.12g}" for i in range(K)]
            fh.write(",".join(row) + "\n")
