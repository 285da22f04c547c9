"""Monte-Carlo experiment driver: sweeps, schemes, and CSV metrics.

Each realization draws a scenario and a channel (distinct deterministic
seeds derived from the base seed and the realization index), solves the
selected schemes per cell, and aggregates mean/std rows per metric. Rows
are written in long form with the fixed column set
  sweep_var, sweep_value, scheme, metric, mean, std, n
so downstream tooling never needs solver internals. Per-realization
failures are logged and counted in the infeasible_fraction metric; they
never abort a sweep.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import baseline_covariance
from .channel import draw_channels
from .charging import solve_p3
from .energy import Allocation, energy_breakdown
from .errors import ChargingDisabled, Infeasible
from .orchestrator import SolveReport, solve_pint
from .scenario import generate_scenario

log = logging.getLogger(__name__)

_CHANNEL_SEED_OFFSET = 1_000_003   # decorrelates channel and geometry draws

MODES = ("data_and_charging", "charging_only")
SWEEP_VARS = ("K", "N", "L", "area", "requests")
METRICS = ("E_total", "E_charge", "sum_received", "efficiency",
           "active_beams", "outer_iterations")

# Scheme registry. Plug comparison schemes in here; each callable maps
# (scenario, chan, params, cell, mode) to a per-cell result dict. The
# "sequential" slot is a labeled placeholder for the two-stage scheme
# that optimizes charging after offloading; it is intentionally not
# implemented in this package.
SCHEMES = ("integrated", "isotropic", "equal_k")


def _sequential_placeholder(*_args, **_kwargs):
    raise NotImplementedError(
        "the sequential comparison scheme is a placeholder hook; supply an "
        "implementation via the scheme registry")


@dataclass(frozen=True)
class ExperimentSpec:
    sweep_var: str = "K"
    values: tuple = (2, 3, 4)
    realizations: int = 100
    schemes: tuple = ("integrated", "isotropic", "equal_k")
    seed_base: int = 1
    area_side: float = 20.0
    mode: str = "data_and_charging"
    workers: int = 1

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"sweep_var must be one of {SWEEP_VARS}")
        if not self.values:
            raise ValueError("values must be nonempty")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; pick from {SCHEMES}")


@dataclass(frozen=True)
class MetricsRow:
    sweep_var: str
    sweep_value: float
    scheme: str
    metric: str
    mean: float
    std: float
    n: int


def apply_sweep_value(params, var, value):
    """Parameters for one sweep point."""
    if var == "K":
        return params.replace(K=int(value))
    if var == "N":
        return params.replace(N=int(value))
    if var == "L":
        return params.replace(L=int(value))
    if var == "area":
        return params
    if var == "requests":
        return params.replace(e_min=0.5 * value, e_max=1.5 * value)
    raise ValueError(f"unknown sweep variable {var!r}")


def charging_modes(mode, scenario, chan, params, cell=0):
    """Run one cell in the requested operating mode.

    charging_only ignores the computation workload: the whole latency
    budget becomes the charging window and only the beamforming problem
    is solved. data_and_charging runs the joint solve.
    """
    if mode == "data_and_charging":
        return solve_pint(scenario, chan, params, cell=cell)
    if mode != "charging_only":
        raise ValueError(f"unknown mode {mode!r}")
    cc = chan.cell(cell)
    e = scenario.energy_requests[cell]
    K = e.size
    beams = solve_p3(cc.h, e, params.T_d, params)
    alloc = Allocation(
        s=np.zeros(K), t_u=np.zeros(K), t_d=np.zeros(K),
        T1=0.0, T2=0.0, T3=0.0, T_c=params.T_d,
        W_q=beams.W_q, alpha=beams.alpha)
    energies = energy_breakdown(alloc, cc, params, np.zeros(K))
    return SolveReport(
        allocation=alloc, energies=energies, received=beams.received,
        alpha=beams.alpha, outer_iterations=0,
        inner_iterations=beams.iterations, converged=beams.converged,
        active_constraints=[], wall_time=0.0, beams=beams)


def _scheme_metrics(scheme, report, baseline_sol, params, e):
    """Per-cell metric dict for one scheme (energies filled by caller)."""
    if scheme == "integrated":
        sol = report.beams
        received, alpha = report.received, report.alpha
        outer = report.outer_iterations
    else:
        sol = baseline_sol
        received, alpha = sol.received, sol.alpha
        outer = 0
    active = int(np.sum(sol.lambda_q > 1e-3 * params.P))
    return {
        "sum_received": float(np.sum(received)),
        "efficiency": float(np.mean(alpha[e > 0]) * 100.0) if np.any(e > 0)
        else 100.0,
        "active_beams": float(active),
        "outer_iterations": float(outer),
    }


def _run_realization(params, spec, value, r):
    """All schemes on one realization; returns {scheme: metrics or None}."""
    area = value if spec.sweep_var == "area" else spec.area_side
    seed = spec.seed_base + r
    scenario = generate_scenario(params, area, seed)
    chan = draw_channels(scenario, params, seed + _CHANNEL_SEED_OFFSET)
    out = {s: None for s in spec.schemes}
    acc = {s: {m: 0.0 for m in METRICS} for s in spec.schemes}
    spot_check = (seed % 100) == 0   # ~1% of realizations, deterministic
    try:
        for cell in range(params.L):
            rep = charging_modes(spec.mode, scenario, chan, params, cell=cell)
            if rep.beams is None:
                rep.beams = _beams_from_report(rep, scenario, chan, params, cell)
            cc = chan.cell(cell)
            e = scenario.energy_requests[cell]
            alloc = rep.allocation
            if spot_check:
                _spot_check(rep, e, params)
            for scheme in spec.schemes:
                base_sol = None
                if scheme != "integrated":
                    base_sol = baseline_covariance(
                        scheme, cc.h, e, alloc.T_c, params, beams=rep.beams)
                m = _scheme_metrics(scheme, rep, base_sol, params, e)
                if scheme == "integrated":
                    m["E_total"] = rep.energies.E_total
                    m["E_charge"] = rep.energies.E_charge
                else:
                    swapped = Allocation(
                        s=alloc.s, t_u=alloc.t_u, t_d=alloc.t_d, T1=alloc.T1,
                        T2=alloc.T2, T3=alloc.T3, T_c=alloc.T_c,
                        W_q=base_sol.W_q, alpha=base_sol.alpha)
                    en = energy_breakdown(swapped, cc, params,
                                          scenario.tasks[cell]
                                          if spec.mode == "data_and_charging"
                                          else np.zeros(e.size))
                    m["E_total"] = en.E_total
                    m["E_charge"] = en.E_charge
                for k, v in m.items():
                    acc[scheme][k] += v if k in ("E_total", "E_charge",
                                                 "sum_received") \
                        else v / params.L
        for scheme in spec.schemes:
            out[scheme] = acc[scheme]
    except (Infeasible, ChargingDisabled) as ex:
        log.warning("realization %d at %s=%s infeasible: %s",
                    r, spec.sweep_var, value, ex)
    except Exception as ex:  # never abort the sweep
        log.error("realization %d at %s=%s failed: %s",
                  r, spec.sweep_var, value, ex)
    return out


def _spot_check(rep, e, params):
    """Invariant audit on a deterministic ~1% sample of realizations."""
    sol = rep.beams
    tol = 1e-9 * np.maximum(e, 1e-12)
    assert np.all(rep.received <= e + tol), "received exceeds a request"
    assert np.all(rep.received >= rep.alpha * e - tol), "ratio under-delivered"
    assert float(np.trace(rep.allocation.W_q).real) <= params.P * (1 + 1e-9), \
        "AP power cap violated"
    assert np.all(np.diff(sol.lambda_q) <= 1e-9 * params.P), \
        "beam powers not descending"


def _beams_from_report(rep, scenario, chan, params, cell):
    """Fallback beam solution when the report lacks one (kept for
    robustness; solve_pint attaches its final beamforming solve)."""
    cc = chan.cell(cell)
    e = scenario.energy_requests[cell]
    return solve_p3(cc.h, e, rep.allocation.T_c, params)


def run_experiment(spec, params, out_path=None):
    """Run the sweep and return MetricsRow records (also written to CSV
    when out_path is given). Deterministic for a fixed seed base,
    independent of the worker count."""
    rows = []
    for value in spec.values:
        pv = apply_sweep_value(params, spec.sweep_var, value)
        if spec.workers > 1:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                results = list(pool.map(
                    _realization_task,
                    [(pv, spec, value, r) for r in range(spec.realizations)]))
        else:
            results = [_run_realization(pv, spec, value, r)
                       for r in range(spec.realizations)]
        for scheme in spec.schemes:
            label = scheme if spec.mode == "data_and_charging" \
                else f"{scheme}:charging_only"
            good = [res[scheme] for res in results if res[scheme] is not None]
            n = len(good)
            for metric in METRICS:
                vals = np.array([g[metric] for g in good]) if n else np.array([])
                rows.append(MetricsRow(
                    sweep_var=spec.sweep_var, sweep_value=float(value),
                    scheme=label, metric=metric,
                    mean=float(np.mean(vals)) if n else math.nan,
                    std=float(np.std(vals)) if n else math.nan,
                    n=n))
            rows.append(MetricsRow(
                sweep_var=spec.sweep_var, sweep_value=float(value),
                scheme=label, metric="infeasible_fraction",
                mean=1.0 - n / spec.realizations, std=0.0,
                n=spec.realizations))
    if out_path:
        write_metrics_csv(out_path, rows)
    return rows


def _realization_task(payload):
    return _run_realization(*payload)


CSV_HEADER = "sweep_var,sweep_value,scheme,metric,mean,std,n"


def write_metrics_csv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.sweep_var},{r.sweep_value:.10g},{r.scheme},"
                     f"{r.metric},{r.mean:.10g},{r.std:.10g},{r.n}\n")


def load_metrics_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}; "
                             f"expected {CSV_HEADER!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 7:
                raise ValueError(f"malformed row: {line!r}")
            rows.append(MetricsRow(parts[0], float(parts[1]), parts[2],
                                   parts[3], float(parts[4]), float(parts[5]),
                                   int(parts[6])))
    return rows
