"""Energy-minimizing computation offloading with wireless charging for
massive-MIMO edge networks: system model, solvers, baselines, and a
Monte-Carlo experiment harness."""

from .baselines import BaselineKind, baseline_covariance
from .channel import (CellChannel, ChannelRealization, draw_channels,
                      dump_channels, interference_powers, load_channels)
from .charging import (BeamSolution, ChargingDuals, build_B, solve_p3,
                       solve_p4)
from .eig import eigh_ascending
from .energy import (Allocation, EnergyBreakdown, downlink_rate,
                     energy_breakdown, implied_powers, latency_check,
                     mec_compute_window, power_violations, uplink_rate)
from .errors import ChargingDisabled, Infeasible, Unbounded
from .harness import (ExperimentSpec, MetricsRow, charging_modes,
                      load_metrics_csv, run_experiment, write_metrics_csv)
from .lambertw import LambertResult, lambert_w0, lambert_w0_vec
from .offload import OffloadDuals, P2Solution, primal_times, solve_p2
from .orchestrator import (SolveReport, outer_step, report_to_dict,
                           solve_pint, split_bounds, write_report)
from .params import (ConfigError, ParamError, SystemParams, load_params,
                     params_to_config)
from .scenario import Scenario, generate_scenario
from .simplex import solve_lp

__all__ = [
    "Allocation", "BaselineKind", "BeamSolution", "CellChannel",
    "ChannelRealization", "ChargingDisabled", "ChargingDuals", "ConfigError",
    "EnergyBreakdown", "ExperimentSpec", "Infeasible", "LambertResult",
    "MetricsRow", "OffloadDuals", "P2Solution", "ParamError", "Scenario",
    "SolveReport", "SystemParams", "Unbounded", "baseline_covariance",
    "build_B", "charging_modes", "downlink_rate", "draw_channels",
    "dump_channels", "eigh_ascending", "energy_breakdown",
    "generate_scenario", "implied_powers", "interference_powers",
    "lambert_w0", "lambert_w0_vec", "latency_check", "load_channels",
    "load_metrics_csv", "load_params", "mec_compute_window", "outer_step",
    "params_to_config", "power_violations", "primal_times",
    "report_to_dict", "run_experiment", "solve_lp", "solve_p2", "solve_p3",
    "solve_p4", "solve_pint", "split_bounds", "uplink_rate",
    "write_metrics_csv", "write_report",
]

__version__ = "0.1.0"
