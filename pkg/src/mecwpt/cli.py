"""Command-line interface: single solves, baselines, and Monte-Carlo runs."""

from __future__ import annotations

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:   # Python 3.10
    import tomli as tomllib

import numpy as np

from .baselines import baseline_covariance
from .channel import draw_channels
from .harness import (ExperimentSpec, charging_modes, run_experiment,
                      write_metrics_csv)
from .orchestrator import report_to_dict, solve_pint, write_report
from .params import ConfigError, load_params
from .charging import write_beam_report
from .scenario import generate_scenario


def _load_params(args):
    text = ""
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    overrides = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, val = item.partition("=")
        overrides[key.strip()] = val.strip()
    return load_params(text, overrides=overrides)


def _build_instance(args, params):
    scenario = generate_scenario(params, args.area, args.seed)
    chan = draw_channels(scenario, params, args.seed + 1_000_003)
    return scenario, chan


def _add_common(sub):
    sub.add_argument("--config", help="key = value config file")
    sub.add_argument("--seed", type=int, default=1)
    sub.add_argument("--area", type=float, default=20.0, metavar="METERS")
    sub.add_argument("--cell", type=int, default=0)
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    sub.add_argument("--out", help="write a JSON report here")


def cmd_solve(args):
    params = _load_params(args)
    scenario, chan = _build_instance(args, params)
    report = solve_pint(scenario, chan, params, cell=args.cell,
                        trace_path=args.dump_trace)
    if args.beam_report:
        write_beam_report(args.beam_report, report.beams,
                          chan.cell(args.cell).h)
    if args.out:
        write_report(args.out, report)
    else:
        json.dump(report_to_dict(report), sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def cmd_baseline(args):
    params = _load_params(args)
    scenario, chan = _build_instance(args, params)
    report = solve_pint(scenario, chan, params, cell=args.cell)
    cc = chan.cell(args.cell)
    e = scenario.energy_requests[args.cell]
    sol = baseline_covariance(args.scheme, cc.h, e, report.allocation.T_c,
                              params, beams=report.beams)
    out = {
        "scheme": args.scheme,
        "T_c_s": report.allocation.T_c,
        "received_J": sol.received.tolist(),
        "requested_J": e.tolist(),
        "alpha": sol.alpha.tolist(),
        "charge_power_W": float(np.trace(sol.W_q).real),
        "E_charge_J": float(report.allocation.T_c * np.trace(sol.W_q).real),
        "scale": sol.cap_scale,
        "active_beams": int(np.sum(sol.lambda_q > 1e-3 * params.P)),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(out, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        json.dump(out, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _spec_from_toml(path):
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    exp = doc.get("experiment", doc)
    return ExperimentSpec(
        sweep_var=exp.get("sweep", "K"),
        values=tuple(exp.get("values", (2, 3, 4))),
        realizations=int(exp.get("realizations", 100)),
        schemes=tuple(exp.get("schemes", ("integrated", "isotropic",
                                          "equal_k"))),
        seed_base=int(exp.get("seed_base", 1)),
        area_side=float(exp.get("area", 20.0)),
        mode=exp.get("mode", "data_and_charging"),
        workers=int(exp.get("workers", 1)),
    )


def cmd_mc(args):
    params = _load_params(args)
    spec = _spec_from_toml(args.spec)
    rows = run_experiment(spec, params, out_path=args.out)
    print(f"wrote {len(rows)} metric rows to {args.out}")
    return 0


def cmd_sweep(args):
    params = _load_params(args)
    values = tuple(float(v) if "." in v else int(v)
                   for v in args.values.split(","))
    spec = ExperimentSpec(
        sweep_var=args.var,
        values=values,
        realizations=args.realizations,
        schemes=tuple(args.schemes.split(",")),
        seed_base=args.seed,
        area_side=args.area,
        mode=args.mode,
        workers=args.workers,
    )
    rows = run_experiment(spec, params, out_path=args.out)
    print(f"wrote {len(rows)} metric rows to {args.out}")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="mecwpt",
        description="Energy-minimizing offloading and wireless charging "
                    "simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one cell of one realization")
    _add_common(sp)
    sp.add_argument("--dump-trace", help="CSV trace of the inner dual loop")
    sp.add_argument("--beam-report", help="CSV of beam powers and couplings")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("baseline", help="run a reference charging scheme")
    _add_common(sp)
    sp.add_argument("--scheme", required=True,
                    choices=("isotropic", "equal_k"))
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("mc", help="Monte-Carlo experiment from a TOML spec")
    sp.add_argument("--spec", required=True, help="experiment spec (TOML)")
    sp.add_argument("--out", required=True, help="metrics CSV path")
    sp.add_argument("--config", help="key = value config file")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE")
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("sweep", help="Monte-Carlo sweep from flags")
    sp.add_argument("--var", required=True,
                    choices=("K", "N", "L", "area", "requests"))
    sp.add_argument("--values", required=True,
                    help="comma-separated sweep values")
    sp.add_argument("--realizations", type=int, default=100)
    sp.add_argument("--schemes", default="integrated,isotropic,equal_k")
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--area", type=float, default=20.0)
    sp.add_argument("--mode", default="data_and_charging",
                    choices=("data_and_charging", "charging_only"))
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", required=True)
    sp.add_argument("--config", help="key = value config file")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE")
    sp.set_defaults(func=cmd_sweep)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
