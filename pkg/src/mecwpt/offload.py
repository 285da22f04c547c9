"""Time-allocation subproblem: primal-dual solver at fixed offload split.

At a fixed per-user bit split the time-allocation problem is convex. The
primal times have a Lambert-W closed form in the dual variables, and the
duals follow projected subgradient ascent with the diminishing 1/sqrt(k)
step. The dual value is evaluated over the boxed domain t in [0, T_d]
(implied by the latency constraints), which keeps it a rigorous lower
bound of the primal at every iteration.

Two implementation notes, both recorded in the project notes:
  * the subgradients for the window duals use the Lagrangian-minimizing
    window sizes (0 or the full residual window, depending on the sign
    of the window-budget balance) instead of the recovered maxima; the
    recovered-maxima form is never positive and would freeze those duals
    at zero;
  * dual steps are diagonally preconditioned by a static per-user scale
    estimated from the channel coefficients, so the 1/sqrt(k) schedule
    behaves identically across the huge dynamic range of path gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import sigma_eff_dl, sigma_eff_ul, tx_energy
from .errors import Infeasible
from .lambertw import lambert_w0_vec

_INV_E = math.exp(-1.0)
_LN2 = math.log(2.0)


@dataclass
class OffloadDuals:
    """Multipliers of the latency constraints (all nonnegative).

    lambda1: total window budget; beta/phi: per-user uplink/downlink
    window caps; xi_dual: per-user end-to-end latency (named to avoid a
    clash with the RF conversion efficiency xi).
    """

    lambda1: float
    beta: np.ndarray
    xi_dual: np.ndarray
    phi: np.ndarray

    @classmethod
    def zeros(cls, k):
        return cls(0.0, np.zeros(k), np.zeros(k), np.zeros(k))

    def copy(self):
        return OffloadDuals(self.lambda1, self.beta.copy(),
                            self.xi_dual.copy(), self.phi.copy())


@dataclass
class P2Solution:
    t_u: np.ndarray
    t_d: np.ndarray
    T1: float
    T3: float
    duals: OffloadDuals
    dual_value_history: np.ndarray
    converged: bool
    iterations: int
    objective: float     # primal value at the returned (repaired) times
    best_dual: float     # best lower bound seen
    T2: float

    @property
    def duality_gap(self):
        return self.objective - self.best_dual


def _clamped_w(w):
    """Keep both energy weights strictly positive; the closed forms
    divide by (1 - w) and w."""
    return min(max(w, 1e-6), 1.0 - 1e-6)


def primal_times(duals, s, chan, params):
    """Closed-form stationary times for the given duals, clamped to
    [0, T_d]. Users with s_i = 0 get zero time."""
    w = _clamped_w(params.w)
    m_u = duals.beta + duals.xi_dual
    m_d = duals.phi
    t_u = _stationary_time(m_u, s / (params.nu * params.B),
                           (1.0 - w) * sigma_eff_ul(chan, params), params.T_d)
    t_d = _stationary_time(m_d, params.mu * s / params.B,
                           w * sigma_eff_dl(chan, params), params.T_d)
    t_u = np.where(s > 0, t_u, 0.0)
    t_d = np.where(s > 0, t_d, 0.0)
    return t_u, t_d


def _stationary_time(m, bits_norm, coeff, t_cap):
    """Minimizer over t in [0, t_cap] of coeff*t*(2^(bits_norm/t)-1) + m*t.

    The stationary point solves (1-z)e^z = 1 - m/coeff with
    z = bits_norm*ln2/t, i.e. z = 1 + W0(m/(coeff*e) - 1/e). A zero dual
    puts the argument at the branch point (zero rate), which clamps the
    time to the cap.
    """
    m = np.asarray(m, dtype=float)
    arg = m / (np.maximum(coeff, 1e-300) * math.e) - _INV_E
    z = 1.0 + lambert_w0_vec(arg)
    with np.errstate(divide="ignore", over="ignore"):
        t = bits_norm * _LN2 / np.maximum(z, 1e-300)
    small = z <= 1e-12
    t = np.where(small, t_cap, np.minimum(t, t_cap))
    return t


def _objective(t_u, t_d, s, u, chan, params):
    """P2 primal value: weighted transmit energies plus compute constants."""
    w = _clamped_w(params.w)
    a_u = s / (params.nu * params.B)
    a_d = params.mu * s / params.B
    e_up = float(np.sum(tx_energy(t_u, a_u, sigma_eff_ul(chan, params))))
    e_dn = float(np.sum(tx_energy(t_d, a_d, sigma_eff_dl(chan, params))))
    e_loc = float(np.sum(params.kappa_i * params.c_i * (u - s) * params.f_u ** 2))
    e_mec = float(np.sum(params.kappa_m * params.d_m * params.f_m ** 2 * s))
    return (1.0 - w) * (e_up + e_loc) + w * (e_dn + e_mec)


def _repair(t_u, t_d, s, u, params, T2):
    """Project recovered times onto the latency-feasible set: per-user
    latency caps first, then a proportional shrink of both vectors until
    the phase windows fit the budget."""
    local_t = params.c_i * (u - s) / params.f_u
    cap_u = np.maximum(params.T_d - local_t, 0.0)
    t_u = np.minimum(t_u, cap_u)
    budget = params.T_d - T2
    T1 = float(np.max(t_u)) if t_u.size else 0.0
    T3 = float(np.max(t_d)) if t_d.size else 0.0
    if T1 + T3 > budget and T1 + T3 > 0:
        r = max(budget, 0.0) / (T1 + T3)
        t_u = t_u * r
        t_d = t_d * r
        T1, T3 = T1 * r, T3 * r
    return t_u, t_d, T1, T3


def solve_p2(s, chan, params, u, duals0=None, max_iters=None, trace=None):
    """Dual subgradient solve of the time-allocation subproblem.

    Returns a P2Solution whose times satisfy the latency constraints.
    Raises Infeasible when no time allocation can (even s = 0 busts a
    per-user latency, or the edge-compute window exhausts the budget).
    duals0 warm-starts the multipliers; trace, if given, is a list that
    collects (iter, dual_value, grad_norm, T1, T3) rows.
    """
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    K = s.size
    w = _clamped_w(params.w)

    local_t = params.c_i * (u - s) / params.f_u
    if np.any(local_t > params.T_d * (1 + 1e-12)):
        bad = int(np.argmax(local_t))
        raise Infeasible(
            f"user {bad}: local compute of {u[bad] - s[bad]:.3g} bits needs "
            f"{local_t[bad]:.3g} s > T_d = {params.T_d:.3g} s")
    T2 = float(np.max(params.d_m * s / params.f_m)) if K else 0.0
    any_tx = bool(np.any(s > 0))
    if any_tx and T2 >= params.T_d * (1 - 1e-12):
        raise Infeasible(
            f"edge-compute window T2 = {T2:.3g} s leaves no transmission "
            f"time inside T_d = {params.T_d:.3g} s")

    sig_u = sigma_eff_ul(chan, params)
    sig_d = sigma_eff_dl(chan, params)
    a_u = s / (params.nu * params.B)
    a_d = params.mu * s / params.B
    budget = params.T_d - T2

    duals = duals0.copy() if duals0 is not None else OffloadDuals.zeros(K)
    if max_iters is None:
        max_iters = params.max_inner_iters

    # static diagonal preconditioning: dual magnitude at the half-budget
    # point, so one O(1) step traverses the physical dual scale
    t_hat_u = np.minimum(np.maximum(params.T_d - local_t, 1e-12), budget / 2)
    t_hat_d = np.full(K, budget / 2)
    scale_u = _dual_scale(a_u, (1.0 - w) * sig_u, t_hat_u, params.T_d)
    scale_d = _dual_scale(a_d, w * sig_d, t_hat_d, params.T_d)

    active = s > 0
    const = ((1.0 - w) * float(np.sum(params.kappa_i * params.c_i * (u - s)
                                      * params.f_u ** 2))
             + w * float(np.sum(params.kappa_m * params.d_m
                                * params.f_m ** 2 * s)))

    if not any_tx:
        sol_t = np.zeros(K)
        obj = const
        duals_out = duals
        hist = np.array([obj])
        if trace is not None:
            trace.append((0, obj, 0.0, 0.0, 0.0))
        return P2Solution(sol_t, sol_t.copy(), 0.0, 0.0, duals_out, hist,
                          True, 0, obj, obj, T2)

    best_dual = -np.inf
    best_duals = duals.copy()
    best_primal = np.inf
    polished = None
    hist = []
    g_prev = None
    converged = False
    iters = 0

    for k in range(1, max_iters + 1):
        iters = k
        t_u, t_d = primal_times(duals, s, chan, params)
        T1 = float(np.max(t_u))
        T3 = float(np.max(t_d))

        m_u = duals.beta + duals.xi_dual
        m_d = duals.phi
        phi_u = tx_energy(t_u, a_u, (1.0 - w) * sig_u) + m_u * t_u
        phi_d = tx_energy(t_d, a_d, w * sig_d) + m_d * t_d
        lam1 = max(float(np.sum(duals.beta)), float(np.sum(duals.phi)))
        gval = (float(np.sum(phi_u) + np.sum(phi_d)) + const
                + lam1 * (T2 - params.T_d)
                + float(np.sum(duals.xi_dual * (local_t - params.T_d))))
        hist.append(gval)
        if gval > best_dual:
            best_dual = gval
            best_duals = duals.copy()

        # window-budget balance decides which side the budget certificate
        # charges (subgradient of the max term)
        sb, sp = float(np.sum(duals.beta)), float(np.sum(duals.phi))
        tot = sb + sp
        if tot <= 0 or abs(sb - sp) <= 1e-9 * max(tot, 1e-30):
            chi_u = chi_d = 0.5
        elif sb > sp:
            chi_u, chi_d = 1.0, 0.0
        else:
            chi_u, chi_d = 0.0, 1.0

        g_beta = np.where(active, t_u - chi_u * budget, 0.0)
        g_xi = np.where(active, t_u + local_t - params.T_d, 0.0)
        g_phi = np.where(active, t_d - chi_d * budget, 0.0)
        g_vec = np.concatenate([g_beta, g_xi, g_phi])

        if trace is not None:
            trace.append((k, gval, float(np.linalg.norm(g_vec)), T1, T3))

        if g_prev is not None and np.linalg.norm(g_vec - g_prev) <= params.eps2:
            converged = True
            break
        g_prev = g_vec

        # certified-gap stop: a repaired primal within eps2 (relative) of
        # the best lower bound cannot improve measurably
        if k % 16 == 0 or k == 1:
            ru, rd, rT1, rT3 = _repair(t_u.copy(), t_d.copy(), s, u, params, T2)
            ru, rd, rT1, rT3 = _split_search(ru, rd, s, u, chan, params, T2)
            cand = _objective(ru, rd, s, u, chan, params)
            if cand < best_primal:
                best_primal = cand
                polished = (ru, rd, rT1, rT3, cand)
            cert, cert_duals = _kkt_certificate(ru, rd, s, u, chan, params,
                                                T2, local_t, const)
            if cert > best_dual:
                best_dual = cert
                best_duals = cert_duals
            if best_primal - best_dual <= params.eps2 * max(abs(best_primal), 1e-300):
                converged = True
                break

        step = params.dual_step / math.sqrt(k)
        duals.beta = np.maximum(0.0, duals.beta + step * scale_u * g_beta)
        duals.xi_dual = np.maximum(0.0, duals.xi_dual + step * scale_u * g_xi)
        duals.phi = np.maximum(0.0, duals.phi + step * scale_d * g_phi)
        duals.lambda1 = max(float(np.sum(duals.beta)), float(np.sum(duals.phi)))

    # primal recovery at the best dual point, then feasibility repair and
    # the window-split refinement (the subgradient orbit leaves a
    # first-order split error; the refinement is convex and closes it)
    if converged and polished is not None:
        t_u, t_d, T1, T3, obj = polished
    else:
        t_u, t_d = primal_times(best_duals, s, chan, params)
        t_u, t_d, T1, T3 = _repair(t_u, t_d, s, u, params, T2)
        t_u, t_d, T1, T3 = _split_search(t_u, t_d, s, u, chan, params, T2)
        obj = _objective(t_u, t_d, s, u, chan, params)
        if polished is not None and polished[4] < obj:
            t_u, t_d, T1, T3, obj = polished
    best_duals.lambda1 = max(float(np.sum(best_duals.beta)),
                             float(np.sum(best_duals.phi)))

    # certificate polish: multipliers read off the returned point's
    # stationarity are dual-feasible, and their value is second-order
    # tight in the primal error
    polish, polish_duals = _kkt_certificate(t_u, t_d, s, u, chan, params,
                                            T2, local_t, const)
    if polish > best_dual:
        best_dual = polish
        best_duals = polish_duals

    return P2Solution(t_u, t_d, T1, T3, best_duals, np.asarray(hist),
                      converged, iters, obj, best_dual, T2)


def _split_search(t_u, t_d, s, u, chan, params, T2):
    """Refine the uplink/downlink share of the window budget. The optimum
    rides the window constraints (every active user fills its window, up
    to its own latency cap), so the search space is one-dimensional: the
    uplink share of the budget. Grid-and-refine; each profile evaluation
    is O(K). Returns the better of the searched and incoming points."""
    active = s > 0
    if not np.any(active):
        return t_u, t_d, 0.0, 0.0
    w = _clamped_w(params.w)
    budget = params.T_d - T2
    local_t = params.c_i * (u - s) / params.f_u
    cap_u = np.where(active, np.maximum(params.T_d - local_t, 0.0), 0.0)
    a_u = s / (params.nu * params.B)
    a_d = params.mu * s / params.B
    cu = (1.0 - w) * sigma_eff_ul(chan, params)
    cd = w * sigma_eff_dl(chan, params)

    def profiles(xs):
        tu = np.minimum(xs[:, None] * budget, cap_u[None, :])
        td = np.where(active[None, :],
                      budget - np.max(tu, axis=1, keepdims=True), 0.0)
        return tu, td

    def values(tu, td):
        return (np.sum(tx_energy(tu, a_u[None, :], cu[None, :]), axis=1)
                + np.sum(tx_energy(td, a_d[None, :], cd[None, :]), axis=1))

    lo, hi = 1e-9, 1.0 - 1e-9
    xs = np.linspace(lo, hi, 17)
    j = 8
    for _ in range(5):
        tu_g, td_g = profiles(xs)
        vals = values(tu_g, td_g)
        j = int(np.argmin(vals))
        lo, hi = xs[max(j - 1, 0)], xs[min(j + 1, len(xs) - 1)]
        xs = np.linspace(lo, hi, 17)
    tu, td = tu_g[j], td_g[j]

    # balance polish: at the interior optimum the unclamped uplink dual
    # mass equals the downlink dual mass; bisect that residual (monotone
    # in the share) to kill the first-order split error
    def imbalance(x):
        tux, tdx = profiles(np.array([x]))
        tux, tdx = tux[0], tdx[0]
        free = active & (tux < cap_u - 1e-15 * params.T_d)
        mu = _stationarity_dual(tux, a_u, cu)
        md = _stationarity_dual(tdx, a_d, cd)
        return float(np.sum(mu[free]) - np.sum(md[active]))

    blo, bhi = max(lo, 1e-9), min(hi, 1.0 - 1e-9)
    if imbalance(blo) > 0 > imbalance(bhi):
        for _ in range(60):
            mid = 0.5 * (blo + bhi)
            if imbalance(mid) > 0:
                blo = mid
            else:
                bhi = mid
        tux, tdx = profiles(np.array([0.5 * (blo + bhi)]))
        if values(tux, tdx)[0] <= values(tu[None, :], td[None, :])[0]:
            tu, td = tux[0], tdx[0]

    if _objective(t_u, t_d, s, u, chan, params) <= _objective(tu, td, s, u,
                                                              chan, params):
        tu, td = t_u, t_d
    return tu, td, float(np.max(tu)), float(np.max(td))


def _kkt_certificate(t_u, t_d, s, u, chan, params, T2, local_t, const):
    """Dual value at the multipliers implied by the returned times'
    stationarity. The uplink mass splits between the window dual (free
    while it balances the downlink mass, then priced at the residual
    window) and the per-user latency dual (priced at that user's local
    window); the exact greedy split maximizes the bound."""
    w = _clamped_w(params.w)
    active = s > 0
    sig_u = sigma_eff_ul(chan, params)
    sig_d = sigma_eff_dl(chan, params)
    a_u = s / (params.nu * params.B)
    a_d = params.mu * s / params.B

    m_u = np.where(active, _stationarity_dual(t_u, a_u, (1.0 - w) * sig_u), 0.0)
    m_d = np.where(active, _stationarity_dual(t_d, a_d, w * sig_d), 0.0)

    tu_box = _stationary_time(m_u, a_u, (1.0 - w) * sig_u, params.T_d)
    td_box = _stationary_time(m_d, a_d, w * sig_d, params.T_d)
    tu_box = np.where(active, tu_box, 0.0)
    td_box = np.where(active, td_box, 0.0)
    phi_u = tx_energy(tu_box, a_u, (1.0 - w) * sig_u) + m_u * tu_box
    phi_d = tx_energy(td_box, a_d, w * sig_d) + m_d * td_box
    base = float(np.sum(phi_u) + np.sum(phi_d)) + const
    sum_d = float(np.sum(m_d))

    window_cost = params.T_d - T2
    lat_cost = np.maximum(params.T_d - local_t, 0.0)
    eff_cost = np.minimum(lat_cost, window_cost)
    pool = sum_d                      # window mass free up to the balance
    beta = np.zeros_like(m_u)
    xi = np.zeros_like(m_u)
    for i in np.argsort(-eff_cost):
        take = min(m_u[i], pool)
        beta[i] = take
        pool -= take
        rest = m_u[i] - take
        if rest > 0:
            if window_cost < lat_cost[i]:
                beta[i] += rest
            else:
                xi[i] += rest
    lam1 = max(float(np.sum(beta)), sum_d)
    value = (base + lam1 * (T2 - params.T_d)
             + float(np.sum(xi * (local_t - params.T_d))))
    return value, OffloadDuals(lam1, beta, xi, m_d)


def _stationarity_dual(t, bits_norm, coeff):
    """Multiplier that makes t stationary: -d/dt of the transmit energy."""
    t = np.asarray(t, dtype=float)
    z = np.where(t > 0, bits_norm * _LN2 / np.maximum(t, 1e-300), 0.0)
    z = np.minimum(z, 600.0)
    return np.maximum(0.0, coeff * (np.exp(z) * (z - 1.0) + 1.0))


def _dual_scale(bits_norm, coeff, t_hat, t_d):
    """|d/dt| of the transmit energy at the reference time t_hat, per T_d."""
    z = np.where(t_hat > 0, bits_norm * _LN2 / np.maximum(t_hat, 1e-300), 0.0)
    z = np.minimum(z, 60.0)
    mag = coeff * (np.exp(z) * np.maximum(z - 1.0, 0.0) + 1.0)
    return np.maximum(mag, 1e-300) / t_d


def write_p2_trace(path, rows):
    """Write an iteration trace collected by solve_p2 to CSV."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,dual_value,grad_norm,T1,T3\n")
        for r in rows:
            fh.write(",".join(f"{v:.12g}" if isinstance(v, float) else str(v)
                              for v in r) + "\n")
