"""Outer solve: latency-aware descent on the per-user offload split.

Each outer iterate holds the offload split fixed, solves the
time-allocation subproblem, derives the charging window, and solves the
beamforming subproblem. The split then moves by a projected diagonal
Newton step (central finite differences, Armijo backtracking). Inside a
single outer iteration the charging energy is evaluated through the
cached charging profile (exact while beam directions and duals are
frozen: uncapped beam powers scale as 1/T_c, so the charging energy is
flat until the power cap binds and linear in T_c after); the full
beamforming solve is refreshed once per accepted step and again at the
returned point.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .charging import solve_p3
from .energy import (Allocation, energy_breakdown, implied_powers,
                     latency_check, mec_compute_window, power_violations)
from .errors import Infeasible
from .offload import solve_p2, write_p2_trace

_GRAD_BITS = 1e-4       # finite-difference step, relative to task size
_SLACK_TOL = 1e-6       # "latency constraint met" band, relative to T_d


@dataclass
class SolveReport:
    allocation: Allocation
    energies: object
    received: np.ndarray
    alpha: np.ndarray
    outer_iterations: int
    inner_iterations: int
    converged: bool
    active_constraints: list
    wall_time: float
    diagnostics: list = field(default_factory=list)
    stop_reason: str = ""
    beams: object = None    # final charging BeamSolution
    descent_history: list = field(default_factory=list)  # (phi_before, phi_after) per accepted step


def outer_step(s, grad, hess, lo, hi, damping=1.0):
    """Projected damped diagonal-Newton step. The curvature floor keeps
    the raw step within the feasible span even when the profile is
    locally affine."""
    s = np.asarray(s, dtype=float)
    span = np.maximum(np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float),
                      1e-300)
    floor = np.maximum(np.abs(grad) / span, 1e-300)
    denom = np.maximum(np.asarray(hess, dtype=float), floor)
    with np.errstate(invalid="ignore"):
        raw = -damping * np.asarray(grad, dtype=float) / denom
    raw = np.where(np.isfinite(raw), raw, 0.0)
    return np.clip(s + raw, lo, hi) - s


def split_bounds(u, params):
    """Per-user feasible offload range implied by the latency budget:
    local compute caps the retained bits, the edge-compute window caps
    the offloaded bits. Small margins keep a positive transmit window
    for every active user (the boundary itself needs zero-time
    transmission, which no finite power achieves)."""
    u = np.asarray(u, dtype=float)
    margin = 1.0 - 1e-6
    lo = np.maximum(0.0, u - params.T_d * margin * params.f_u / params.c_i)
    hi = np.minimum(u, params.T_d * margin * params.f_m / params.d_m)
    return lo, hi


class _PhiEvaluator:
    """phi(s) = weighted total energy at the inner solutions, with the
    charging term from the cached profile. Tracks warm-start duals and
    inner iteration counts."""

    def __init__(self, chan, params, u, e):
        self.chan = chan
        self.params = params
        self.u = u
        self.e = e
        self.warm = None
        self.beams = None        # last full charging solution
        self.inner_iters = 0
        self.p2_budget = None

    def charge_energy(self, t_c):
        if self.beams is None or t_c <= 0:
            return 0.0
        return self.beams.charge_energy_at(t_c)

    def refresh_beams(self, p2):
        t_c = self.params.T_d - p2.T1 - p2.T3
        self.beams = solve_p3(self.chan.h, self.e, t_c, self.params)
        self.inner_iters += self.beams.iterations
        return self.beams

    def p2(self, s):
        sol = solve_p2(s, self.chan, self.params, self.u, duals0=self.warm,
                       max_iters=self.p2_budget)
        self.warm = sol.duals
        self.inner_iters += sol.iterations
        return sol

    def __call__(self, s):
        sol = self.p2(s)
        t_c = self.params.T_d - sol.T1 - sol.T3
        return sol.objective + self.params.w * self.charge_energy(t_c), sol


def solve_pint(scenario, chan, params, cell=0, trace_path=None):
    """Joint solve for one cell: offload split, time allocation, energy
    beamforming. Returns a SolveReport whose allocation satisfies every
    latency and power constraint within tolerance.
    """
    t_start = time.perf_counter()
    cc = chan.cell(cell)
    u = scenario.tasks[cell]
    e = scenario.energy_requests[cell]
    K = u.size

    lo, hi = split_bounds(u, params)
    if np.any(lo > hi * (1 + 1e-12) + 1e-9):
        bad = int(np.argmax(lo - hi))
        raise Infeasible(
            f"user {bad}: task of {u[bad]:.3g} bits fits neither locally "
            f"(cap {u[bad] - lo[bad]:.3g}) nor at the edge (cap {hi[bad]:.3g}) "
            f"within T_d")
    s = np.clip(u / 2, lo, hi)

    phi = _PhiEvaluator(cc, params, u, e)
    val, p2 = phi(s)
    phi.refresh_beams(p2)
    val, p2 = phi(s)                 # charging profile now seeded

    converged = False
    stop_reason = "outer_iteration_cap"
    damping = 1.0
    outer = 0
    descent = []
    for outer in range(1, params.max_outer_iters + 1):
        # central differences on the split profile
        grad = np.zeros(K)
        hess = np.zeros(K)
        for i in range(K):
            h_i = max(1.0, _GRAD_BITS * u[i])
            up = min(s[i] + h_i, hi[i])
            dn = max(s[i] - h_i, lo[i])
            if up - dn < 1e-12:
                continue
            sp = s.copy(); sp[i] = up
            sm = s.copy(); sm[i] = dn
            vp, _ = phi(sp)
            vm, _ = phi(sm)
            grad[i] = (vp - vm) / (up - dn)
            mid = 0.5 * (up + dn)
            hess[i] = max((vp - 2 * val + vm) / max(up - mid, 1e-300) ** 2, 0.0) \
                if abs(mid - s[i]) < 1e-9 * max(s[i], 1.0) else 0.0

        step = outer_step(s, grad, hess, lo, hi, damping)
        decrement = -float(np.dot(grad, step))
        if np.all(np.abs(step) < 1e-12 * np.maximum(u, 1.0)):
            converged = True
            stop_reason = "stationary_split"
            break

        # Armijo backtracking on phi
        accepted = False
        t = 1.0
        for _ in range(30):
            s_try = np.clip(s + t * step, lo, hi)
            v_try, p2_try = phi(s_try)
            if v_try <= val + 1e-4 * t * float(np.dot(grad, s_try - s)):
                accepted = True
                break
            t *= 0.5
        if accepted:
            drop = val - v_try
            descent.append((val, v_try))
            s, val, p2 = s_try, v_try, p2_try
            phi.refresh_beams(p2)
            val, p2 = phi(s)
            damping = min(1.0, damping * 2)
            if drop <= params.eps1 * max(abs(val), 1e-300):
                converged = True
                stop_reason = "objective_stalled"
                break
        else:
            damping *= 0.5

        # latency-aware stop: a latency constraint is met and the descent
        # direction pushes against it
        alloc_now = _assemble(s, p2, phi, params)
        slacks = _latency_slacks(alloc_now, params, u)
        if min(slacks) < _SLACK_TOL * params.T_d and (not accepted
                                                      or decrement <= 0):
            converged = True
            stop_reason = "latency_constraint_met"
            break
        if not accepted and damping < 1e-6:
            converged = True
            stop_reason = "line_search_exhausted"
            break

    # final solve at the converged split: fresh duals, full budgets
    trace = [] if trace_path else None
    final_p2 = solve_p2(s, cc, params, u, trace=trace)
    phi.inner_iters += final_p2.iterations
    t_c = params.T_d - final_p2.T1 - final_p2.T3
    beams = solve_p3(cc.h, e, t_c, params)
    phi.inner_iters += beams.iterations
    if trace_path:
        write_p2_trace(trace_path, trace)

    alloc = Allocation(
        s=s, t_u=final_p2.t_u, t_d=final_p2.t_d,
        T1=final_p2.T1, T2=final_p2.T2, T3=final_p2.T3, T_c=t_c,
        W_q=beams.W_q, alpha=beams.alpha)
    energies = energy_breakdown(alloc, cc, params, u)
    violations = latency_check(alloc, params, u, tol=1e-9 * params.T_d)
    if violations:
        raise AssertionError(f"returned allocation violates latency: {violations}")

    p, eta = implied_powers(alloc, cc, params)
    diags = power_violations(p, eta, params)
    if not final_p2.converged or not beams.converged:
        diags.append("inner solver hit its iteration cap")

    active = [name for name, sl in _named_slacks(alloc, params, u)
              if sl < _SLACK_TOL * params.T_d]
    return SolveReport(
        allocation=alloc,
        energies=energies,
        received=beams.received,
        alpha=beams.alpha,
        outer_iterations=outer,
        inner_iterations=phi.inner_iters,
        converged=converged,
        active_constraints=active,
        wall_time=time.perf_counter() - t_start,
        diagnostics=diags,
        stop_reason=stop_reason,
        beams=beams,
        descent_history=descent,
    )


def _assemble(s, p2, phi, params):
    K = s.size
    n = phi.chan.h.shape[1]
    return Allocation(
        s=s, t_u=p2.t_u, t_d=p2.t_d, T1=p2.T1, T2=p2.T2, T3=p2.T3,
        T_c=params.T_d - p2.T1 - p2.T3,
        W_q=np.zeros((n, n), dtype=complex), alpha=np.zeros(K))


def _named_slacks(alloc, params, u):
    out = [("total_latency", params.T_d - (alloc.T1 + alloc.T2 + alloc.T3))]
    local_t = params.c_i * (u - alloc.s) / params.f_u
    for i in range(u.size):
        out.append((f"user_latency[{i}]", params.T_d - (local_t[i] + alloc.t_u[i])))
    return out


def _latency_slacks(alloc, params, u):
    return [sl for _, sl in _named_slacks(alloc, params, u)]


def report_to_dict(report, params=None):
    """Flat JSON-ready view of a SolveReport (SI units)."""
    a = report.allocation
    en = report.energies
    out = {
        "s_bits": a.s.tolist(),
        "t_u_s": a.t_u.tolist(),
        "t_d_s": a.t_d.tolist(),
        "T1_s": a.T1, "T2_s": a.T2, "T3_s": a.T3, "T_c_s": a.T_c,
        "alpha": report.alpha.tolist(),
        "received_J": report.received.tolist(),
        "E_offload_J": en.E_offload,
        "E_local_J": en.E_local,
        "E_mec_compute_J": en.E_mec_compute,
        "E_download_J": en.E_download,
        "E_charge_J": en.E_charge,
        "E_u_J": en.E_u,
        "E_m_J": en.E_m,
        "E_total_J": en.E_total,
        "outer_iterations": report.outer_iterations,
        "inner_iterations": report.inner_iterations,
        "converged": bool(report.converged),
        "active_constraints": list(report.active_constraints),
        "diagnostics": list(report.diagnostics),
        "stop_reason": report.stop_reason,
        "wall_time_s": report.wall_time,
    }
    return out


def write_report(path, report):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
