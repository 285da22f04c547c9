"""Rate, power, time and energy expressions over an allocation.

Everything here is a pure function of (allocation, channel, params).
Bits are treated as nonnegative reals throughout. Uplink spectral
efficiency carries the pilot-overhead factor nu; the downlink does not.
The transmit covariance is complex Hermitian PSD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_EXP_CLIP = 700.0  # ln-domain clip; beyond this the energy is effectively infinite


def _pow2m1(x):
    """2**x - 1 elementwise, accurate for tiny x, no overflow warnings."""
    return np.expm1(np.minimum(np.asarray(x, dtype=float), _EXP_CLIP) * math.log(2.0))


def tx_energy(t, bits_norm, sigma_eff):
    """Transmit energy sigma_eff * t * (2**(bits_norm/t) - 1) per user.

    bits_norm is the exponent scale (bits / bandwidth, with any symbol
    fraction folded in). t = 0 with bits_norm = 0 contributes 0;
    t = 0 with bits_norm > 0 is infinite. Past the overflow clip the
    exact value does not fit a float; a linear-in-exponent extension
    preserves positivity and monotone decrease in t, so optimizers see
    a wall of the right shape instead of a silent fold-back.
    """
    t = np.asarray(t, dtype=float)
    bits_norm = np.asarray(bits_norm, dtype=float)
    idle = bits_norm <= 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(t > 0.0, bits_norm / np.maximum(t, 1e-300), np.inf)
        vals = sigma_eff * t * _pow2m1(z)
        big = 2.0 ** _EXP_CLIP
        ext = sigma_eff * big * (t * (1.0 - math.log(2.0) * _EXP_CLIP)
                                 + math.log(2.0) * bits_norm)
        vals = np.where(z > _EXP_CLIP, ext, vals)
    return np.where(idle, 0.0, np.where(t > 0.0, vals, np.inf))


@dataclass(frozen=True)
class Allocation:
    """Decision variables for one cell.

    s:    (K,) offloaded bits per user
    t_u:  (K,) uplink transmission time, s
    t_d:  (K,) downlink transmission time, s
    T1, T2, T3: phase windows (offload, edge compute, download), s
    T_c:  charging window, s (= T_d - T1 - T3)
    W_q:  (N, N) complex Hermitian PSD transmit covariance, W
    alpha:(K,) delivered fraction of each energy request, in [0, 1]
    """

    s: np.ndarray
    t_u: np.ndarray
    t_d: np.ndarray
    T1: float
    T2: float
    T3: float
    T_c: float
    W_q: np.ndarray
    alpha: np.ndarray

    def validate(self, params, u, tol=1e-9):
        """Raise AssertionError on a violated structural invariant."""
        assert np.all(self.s >= -tol * np.maximum(u, 1.0)), "s_i < 0"
        assert np.all(self.s <= u * (1 + tol) + tol), "s_i > u_i"
        for name in ("T1", "T2", "T3", "T_c"):
            assert getattr(self, name) >= -tol * params.T_d, f"{name} < 0"
        assert np.all(self.t_u >= -tol * params.T_d), "t_u < 0"
        assert np.all(self.t_d >= -tol * params.T_d), "t_d < 0"
        assert abs(self.T_c - (params.T_d - self.T1 - self.T3)) <= tol * params.T_d, \
            "T_c != T_d - T1 - T3"
        tr = float(np.trace(self.W_q).real)
        assert tr <= params.P * (1 + tol) + 1e-15, "tr(W_q) > P"
        wtol = max(tol * max(tr, 0.0), 1e-12)
        assert np.linalg.norm(self.W_q - self.W_q.conj().T) <= wtol, "W_q not Hermitian"
        if tr > 0:
            mineig = float(np.min(np.linalg.eigvalsh(self.W_q)))
            assert mineig >= -tol * tr, "W_q not PSD"


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy ledger, J. E_u = offload + local; E_m = download + edge
    compute + charging; E_total is the weighted sum."""

    E_offload: float
    E_local: float
    E_mec_compute: float
    E_download: float
    E_charge: float
    E_u: float
    E_m: float
    E_total: float
    E_received: np.ndarray  # (K,) harvested energy per user


def uplink_rate(p, chan, params):
    """Uplink spectral efficiency, bit/s/Hz, per user at transmit power p."""
    p = np.asarray(p, dtype=float)
    snr = params.N * chan.gamma * p / (params.Gamma1 * chan.sigma1_sq)
    return params.nu * np.log2(1.0 + snr)


def downlink_rate(eta, chan, params):
    """Downlink spectral efficiency, bit/s/Hz, per user at AP power share eta."""
    eta = np.asarray(eta, dtype=float)
    snr = params.N * params.P * chan.gamma * eta / (params.Gamma2 * chan.sigma2_sq)
    return np.log2(1.0 + snr)


def sigma_eff_ul(chan, params):
    """Per-user uplink noise coefficient Gamma1*sigma1^2/(N*gamma)."""
    return params.Gamma1 * chan.sigma1_sq / (params.N * chan.gamma)


def sigma_eff_dl(chan, params):
    """Per-user downlink noise coefficient Gamma2*sigma2^2/(N*gamma)."""
    return params.Gamma2 * chan.sigma2_sq / (params.N * chan.gamma)


def implied_powers(alloc, chan, params):
    """Invert the rate model: powers that ship s_i bits in the given times.

    Users with s_i = 0 transmit nothing. Raises ValueError if a user has
    bits to move but no time to move them. Power-cap violations are not
    raised here; see power_violations.
    """
    s, t_u, t_d = alloc.s, alloc.t_u, alloc.t_d
    active = s > 0
    if np.any(active & (t_u <= 0)) or np.any(active & (t_d <= 0)):
        bad = int(np.argmax(active & ((t_u <= 0) | (t_d <= 0))))
        raise ValueError(f"user {bad}: s_i > 0 requires t_u, t_d > 0")
    p = np.zeros_like(s, dtype=float)
    eta = np.zeros_like(s, dtype=float)
    if np.any(active):
        zu = s[active] / (params.nu * t_u[active] * params.B)
        zd = params.mu * s[active] / (t_d[active] * params.B)
        p[active] = _pow2m1(zu) * sigma_eff_ul(chan, params)[active]
        eta[active] = _pow2m1(zd) * sigma_eff_dl(chan, params)[active] / params.P
    return p, eta


def power_violations(p, eta, params, tol=1e-9):
    """Infeasibility diagnostics for the implied powers (never raises)."""
    out = []
    for i in np.nonzero(p > params.p_max * (1 + tol))[0]:
        out.append(f"p[{int(i)}]={p[i]:.6g} W exceeds p_max={params.p_max:.6g} W")
    total = float(np.sum(eta))
    if total > 1.0 + tol:
        out.append(f"sum(eta)={total:.6g} exceeds 1")
    return out


def received_energy(W_q, T_c, chan, params):
    """Harvested energy xi * T_c * h^H W h per user, J."""
    if T_c <= 0:
        return np.zeros(chan.h.shape[0])
    quad = np.einsum("kn,nm,km->k", chan.h.conj(), W_q, chan.h).real
    return params.xi * T_c * quad


def energy_breakdown(alloc, chan, params, u):
    """Full energy ledger for an allocation."""
    s = alloc.s
    a_u = s / (params.nu * params.B)
    a_d = params.mu * s / params.B
    e_off = float(np.sum(tx_energy(alloc.t_u, a_u, sigma_eff_ul(chan, params))))
    e_dl = float(np.sum(tx_energy(alloc.t_d, a_d, sigma_eff_dl(chan, params))))
    e_local = float(np.sum(params.kappa_i * params.c_i * (u - s) * params.f_u ** 2))
    e_mec = float(np.sum(params.kappa_m * params.d_m * params.f_m ** 2 * s))
    e_charge = float(max(alloc.T_c, 0.0) * np.trace(alloc.W_q).real)
    e_u = e_off + e_local
    e_m = e_dl + e_mec + e_charge
    return EnergyBreakdown(
        E_offload=e_off,
        E_local=e_local,
        E_mec_compute=e_mec,
        E_download=e_dl,
        E_charge=e_charge,
        E_u=e_u,
        E_m=e_m,
        E_total=(1.0 - params.w) * e_u + params.w * e_m,
        E_received=received_energy(alloc.W_q, alloc.T_c, chan, params),
    )


def latency_check(alloc, params, u, tol=0.0):
    """Evaluate the latency constraint set; return violations as
    (name, slack) pairs where slack < -tol (slack = bound - value)."""
    out = []
    slack = params.T_d - (alloc.T1 + alloc.T2 + alloc.T3)
    if slack < -tol:
        out.append(("total_latency", float(slack)))
    local_t = params.c_i * (u - alloc.s) / params.f_u
    for i, sl in enumerate(params.T_d - (local_t + alloc.t_u)):
        if sl < -tol:
            out.append((f"user_latency[{i}]", float(sl)))
    for i, sl in enumerate(alloc.T1 - alloc.t_u):
        if sl < -tol:
            out.append((f"uplink_window[{i}]", float(sl)))
    for i, sl in enumerate(alloc.T3 - alloc.t_d):
        if sl < -tol:
            out.append((f"download_window[{i}]", float(sl)))
    for i, sl in enumerate(alloc.T2 - params.d_m * alloc.s / params.f_m):
        if sl < -tol:
            out.append((f"mec_compute[{i}]", float(sl)))
    return out


def mec_compute_window(s, params):
    """Closed-form edge-compute window T2 = max_i d_m s_i / f_m."""
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        return 0.0
    return float(np.max(params.d_m * s / params.f_m))
