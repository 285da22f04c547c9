import numpy as np
import pytest

from mecwpt import Infeasible, OffloadDuals, SystemParams, latency_check, primal_times, solve_p2
from mecwpt.energy import mec_compute_window, sigma_eff_dl, sigma_eff_ul
from mecwpt.offload import _objective

from helpers import feasible_split, make_instance
from test_energy import _alloc


def tx_instance(seed, K=1, **over):
    """Transmit-dominated instance: compute constants out of the way so
    the dual machinery carries the whole objective."""
    over.setdefault("kappa_i", 1e-45)
    over.setdefault("kappa_m", 1e-45)
    over.setdefault("noise_ul", 1e-6)
    over.setdefault("noise_dl", 1e-6)
    over.setdefault("w", 0.5)
    over.setdefault("u_min", 5e4)
    over.setdefault("u_max", 2e5)
    p, sc, ch = make_instance(seed, K=K, **over)
    return p, ch.cell(0), sc.tasks[0]


def grid_oracle(s, u, chan, params, n=2000):
    """Exhaustive log-grid over (t_u, t_d) for K = 1."""
    local_t = params.c_i * (u[0] - s[0]) / params.f_u
    T2 = params.d_m * s[0] / params.f_m
    budget = params.T_d - T2
    cap_u = min(params.T_d - local_t, budget)
    tu = np.logspace(np.log10(budget * 1e-6), np.log10(cap_u), n)
    td = np.logspace(np.log10(budget * 1e-6), np.log10(budget), n)
    TU, TD = np.meshgrid(tu, td, indexing="ij")
    mask = TU + TD <= budget
    a_u = s[0] / (params.nu * params.B)
    a_d = params.mu * s[0] / params.B
    su = sigma_eff_ul(chan, params)[0]
    sd = sigma_eff_dl(chan, params)[0]
    w = params.w
    with np.errstate(over="ignore"):
        obj = (1 - w) * su * TU * (np.exp2(np.minimum(a_u / TU, 700)) - 1) \
            + w * sd * TD * (np.exp2(np.minimum(a_d / TD, 700)) - 1)
        obj = np.where(mask, obj, np.inf)
        # the optimum uses the whole budget: include the frontier line
        tu_f = np.minimum(tu, cap_u)
        td_f = budget - tu_f
        ok = td_f > 0
        td_safe = np.where(ok, td_f, 1.0)
        front = (1 - w) * su * tu_f * (np.exp2(np.minimum(a_u / tu_f, 700)) - 1) \
            + w * sd * td_safe * (np.exp2(np.minimum(a_d / td_safe, 700)) - 1)
        front = np.where(ok, front, np.inf)
    const = (1 - w) * params.kappa_i * params.c_i * (u[0] - s[0]) * params.f_u ** 2 \
        + w * params.kappa_m * params.d_m * params.f_m ** 2 * s[0]
    return min(float(np.min(obj)), float(np.min(front))) + const


def test_primal_times_zero_offload():
    p, cc, u = tx_instance(0, K=2)
    duals = OffloadDuals.zeros(2)
    t_u, t_d = primal_times(duals, np.zeros(2), cc, p)
    assert np.all(t_u == 0) and np.all(t_d == 0)


def test_primal_times_zero_duals_clamp():
    # zero duals sit at the branch point: zero rate, so times clamp at T_d
    p, cc, u = tx_instance(1, K=2)
    s = np.full(2, 1e5)
    t_u, t_d = primal_times(OffloadDuals.zeros(2), s, cc, p)
    np.testing.assert_allclose(t_u, p.T_d)
    np.testing.assert_allclose(t_d, p.T_d)


def test_primal_times_stationarity_fd():
    # the closed-form time zeroes the Lagrangian derivative: check by
    # central differences, normalized by the local Lagrangian scale
    p, cc, u = tx_instance(2, K=3)
    s = np.full(3, 8e4)
    rng = np.random.default_rng(7)
    cu = (1 - p.w) * sigma_eff_ul(cc, p)
    cd = p.w * sigma_eff_dl(cc, p)
    split = rng.uniform(0.2, 0.8, 3)
    m_u = cu * rng.uniform(2.0, 40.0, 3)
    duals = OffloadDuals(0.0, m_u * split, m_u * (1 - split),
                         cd * rng.uniform(2.0, 40.0, 3))
    t_u, t_d = primal_times(duals, s, cc, p)
    assert np.all(t_u < p.T_d) and np.all(t_d < p.T_d)
    a_u = s / (p.nu * p.B)
    a_d = p.mu * s / p.B
    su = (1 - p.w) * sigma_eff_ul(cc, p)
    sd = p.w * sigma_eff_dl(cc, p)
    m_u = duals.beta + duals.xi_dual
    m_d = duals.phi

    def lag_u(i, t):
        return su[i] * t * (2.0 ** (a_u[i] / t) - 1.0) + m_u[i] * t

    def lag_d(i, t):
        return sd[i] * t * (2.0 ** (a_d[i] / t) - 1.0) + m_d[i] * t

    for i in range(3):
        h = 1e-6 * t_u[i]
        g = (lag_u(i, t_u[i] + h) - lag_u(i, t_u[i] - h)) / (2 * h)
        scale = max(lag_u(i, t_u[i]) / t_u[i], 1e-300)
        assert abs(g) / scale <= 1e-8
        h = 1e-6 * t_d[i]
        g = (lag_d(i, t_d[i] + h) - lag_d(i, t_d[i] - h)) / (2 * h)
        scale = max(lag_d(i, t_d[i]) / t_d[i], 1e-300)
        assert abs(g) / scale <= 1e-8


def test_solve_p2_k1_matches_grid_oracle():
    for seed in range(6):
        p, cc, u = tx_instance(seed)
        rng = np.random.default_rng(seed)
        s = np.maximum(u - rng.uniform(0, 3.0e4, size=1), 0.3 * u)
        sol = solve_p2(s, cc, p, u)
        oracle = grid_oracle(s, u, cc, p)
        # the solver's refinement may legitimately beat the grid
        assert sol.objective <= oracle * (1 + 1e-6)
        assert abs(sol.objective - oracle) <= 1e-3 * abs(oracle)


def test_solve_p2_duality_gap_transmit_dominated():
    for seed in range(6):
        for K in (1, 2, 4):
            p, cc, u = tx_instance(seed, K=K,
                                   f_m=20.4e9 if K > 1 else None)
            s = feasible_split(p, u, seed)
            sol = solve_p2(s, cc, p, u)
            gap = (sol.objective - sol.best_dual) / abs(sol.objective)
            assert gap <= 1e-6, f"seed {seed} K={K} gap {gap}"


def test_weak_duality_every_history_entry():
    p, cc, u = tx_instance(3, K=2, f_m=20.4e9)
    s = feasible_split(p, u, 3)
    sol = solve_p2(s, cc, p, u)
    assert np.all(sol.dual_value_history <= sol.objective * (1 + 1e-12) + 1e-300)


def test_generous_latency_clamps_to_user_bound():
    # plentiful budget: times clamp at the per-user latency cap, the
    # multipliers stay essentially zero and the gap closes
    p, cc, u = tx_instance(4, T_d=2.0, u_min=4e4, u_max=5e4)
    s = u - 2e4
    sol = solve_p2(s, cc, p, u)
    cap = p.T_d - p.c_i * (u[0] - s[0]) / p.f_u
    budget = p.T_d - sol.T2
    assert sol.t_u[0] == pytest.approx(min(cap, budget - sol.T3), rel=1e-3)
    scale_u = (1 - p.w) * sigma_eff_ul(cc, p)[0]
    assert sol.duals.beta[0] + sol.duals.xi_dual[0] <= 1e-3 * scale_u * 1e3
    assert sol.duality_gap <= 1e-6 * abs(sol.objective)


def test_symmetric_users_get_equal_times():
    p, cc0, u0 = tx_instance(5, K=3, f_m=20.4e9)
    # clone user 0's channel across all users
    from mecwpt.channel import CellChannel
    cc = CellChannel(h=np.repeat(cc0.h[:1], 3, axis=0),
                     gamma=np.repeat(cc0.gamma[:1], 3),
                     sigma1_sq=np.repeat(cc0.sigma1_sq[:1], 3),
                     sigma2_sq=np.repeat(cc0.sigma2_sq[:1], 3))
    u = np.full(3, 1.2e5)
    s = np.full(3, 1.0e5)
    sol = solve_p2(s, cc, p, u)
    assert np.ptp(sol.t_u) <= 1e-9 * p.T_d
    assert np.ptp(sol.t_d) <= 1e-9 * p.T_d


def test_returned_point_passes_latency_check():
    for seed in range(4):
        p, sc, ch = make_instance(seed)
        cc = ch.cell(0)
        u = sc.tasks[0]
        s = feasible_split(p, u, seed)
        sol = solve_p2(s, cc, p, u)
        alloc = _alloc(p, s, sol.t_u, sol.t_d)
        assert latency_check(alloc, p, u, tol=1e-9 * p.T_d) == []
        assert sol.T1 == pytest.approx(float(np.max(sol.t_u)))
        assert sol.T3 == pytest.approx(float(np.max(sol.t_d)))


def test_tighter_budget_never_cheaper():
    p, cc, u = tx_instance(6, u_min=4e4, u_max=6e4)
    s = u - 5e3    # local part stays feasible at half the budget
    sol_a = solve_p2(s, cc, p, u)
    p_half = p.replace(T_d=p.T_d / 2)
    sol_b = solve_p2(s, cc, p_half, u)
    assert sol_b.objective >= sol_a.objective * (1 - 1e-9)


def test_infeasible_local_compute():
    p, sc, ch = make_instance(13)
    cc = ch.cell(0)
    u = sc.tasks[0]
    s = np.zeros(p.K)   # all-local busts the per-user latency for these u
    assert np.any(p.c_i * u / p.f_u > p.T_d)
    with pytest.raises(Infeasible):
        solve_p2(s, cc, p, u)


def test_infeasible_mec_window():
    p, sc, ch = make_instance(14)
    cc = ch.cell(0)
    u = np.full(p.K, 5e6)
    s = u.copy()    # T2 alone exceeds T_d
    assert mec_compute_window(s, p) > p.T_d
    with pytest.raises(Infeasible):
        solve_p2(s, cc, p, u)


def test_all_zero_offload_trivial():
    p, sc, ch = make_instance(15, u_min=1e4, u_max=3e4)
    cc = ch.cell(0)
    u = sc.tasks[0]
    sol = solve_p2(np.zeros(p.K), cc, p, u)
    assert sol.converged
    assert np.all(sol.t_u == 0) and np.all(sol.t_d == 0)
    assert sol.objective == pytest.approx(
        (1 - p.w) * float(np.sum(p.kappa_i * p.c_i * u * p.f_u ** 2)), rel=1e-12)


def test_weight_endpoints_clamped():
    # w = 0 and w = 1 make the closed forms divide by zero; the solver
    # clamps the weight internally and still returns a feasible point
    for w in (0.0, 1.0):
        p, cc, u = tx_instance(8, w=0.5)
        p = p.replace(w=w)
        s = 0.8 * u
        sol = solve_p2(s, cc, p, u)
        assert np.isfinite(sol.objective)
        assert sol.T1 + sol.T3 <= p.T_d - sol.T2 + 1e-9 * p.T_d


def test_trace_rows(tmp_path):
    p, cc, u = tx_instance(7)
    s = 0.8 * u
    trace = []
    solve_p2(s, cc, p, u, trace=trace)
    assert trace and len(trace[0]) == 5
    from mecwpt.offload import write_p2_trace
    path = tmp_path / "trace.csv"
    write_p2_trace(path, trace)
    header = path.read_text().splitlines()[0]
    assert header == "iter,dual_value,grad_norm,T1,T3"
