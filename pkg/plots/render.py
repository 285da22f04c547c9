#!/usr/bin/env python3
"""Render harness metric CSVs into publication-style figures.

Reads only the public long-form schema
    sweep_var, sweep_value, scheme, metric, mean, std, n
and never touches solver internals. Three figure kinds:

  energy_compare  grouped bars of received and spent charging energy,
                  one group per sweep value, one bar per scheme
  beam_count      bars of the mean number of active energy beams
  efficiency      charging-efficiency curves vs the sweep value,
                  y-axis clipped to [0, 100]

Usage:
  plots/render.py --in results.csv --kind efficiency --out fig.png
"""

import argparse
import csv
import sys
from collections import OrderedDict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXPECTED_HEADER = ["sweep_var", "sweep_value", "scheme", "metric",
                   "mean", "std", "n"]
KINDS = ("energy_compare", "beam_count", "efficiency")

plt.rcParams.update({
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linestyle": ":",
    "font.size": 10,
    "legend.framealpha": 0.9,
    "svg.hashsalt": "mecwpt",   # deterministic SVG ids across reruns
})

_COLORS = {"integrated": "#0072BD", "isotropic": "#D95319",
           "equal_k": "#77AC30"}
_MARKERS = ["o", "s", "^", "D", "v", "<", ">"]


class SchemaError(ValueError):
    pass


def load_rows(path):
    """Parse the metrics CSV; raise SchemaError naming whatever is off."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(
                f"{path}: empty file; expected header "
                f"{','.join(EXPECTED_HEADER)}") from None
        if header != EXPECTED_HEADER:
            missing = [c for c in EXPECTED_HEADER if c not in header]
            extra = [c for c in header if c not in EXPECTED_HEADER]
            raise SchemaError(
                f"{path}: bad header; missing columns {missing or 'none'}, "
                f"unexpected {extra or 'none'} (expected "
                f"{','.join(EXPECTED_HEADER)})")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(EXPECTED_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected "
                                  f"{len(EXPECTED_HEADER)} fields, "
                                  f"got {len(rec)}")
            try:
                rows.append(dict(sweep_var=rec[0], sweep_value=float(rec[1]),
                                 scheme=rec[2], metric=rec[3],
                                 mean=float(rec[4]), std=float(rec[5]),
                                 n=int(rec[6])))
            except ValueError as ex:
                raise SchemaError(f"{path}:{lineno}: {ex}") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows; expected at least one "
                          f"metric per scheme and sweep value")
    return rows


def series(rows, metric):
    """{scheme: (sorted sweep values, means, stds)} for one metric."""
    out = OrderedDict()
    for row in rows:
        if row["metric"] != metric:
            continue
        out.setdefault(row["scheme"], {})[row["sweep_value"]] = (
            row["mean"], row["std"])
    if not out:
        raise SchemaError(f"metric {metric!r} absent from the CSV")
    packed = OrderedDict()
    for scheme, vals in out.items():
        xs = sorted(vals)
        packed[scheme] = (xs, [vals[x][0] for x in xs],
                          [vals[x][1] for x in xs])
    return packed


def _scheme_color(scheme, idx):
    base = scheme.split(":")[0]
    return _COLORS.get(base, f"C{idx}")


def _grouped_bars(ax, data, label):
    schemes = list(data)
    xs = data[schemes[0]][0]
    width = 0.8 / len(schemes)
    for j, scheme in enumerate(schemes):
        _, means, stds = data[scheme]
        pos = [i + (j - (len(schemes) - 1) / 2) * width
               for i in range(len(xs))]
        ax.bar(pos, means, width=width, yerr=stds, capsize=2,
               label=scheme, color=_scheme_color(scheme, j))
    ax.set_xticks(range(len(xs)))
    ax.set_xticklabels([f"{x:g}" for x in xs])
    ax.set_ylabel(label)


def render_energy_compare(rows, sweep_var):
    received = series(rows, "sum_received")
    spent = series(rows, "E_charge")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 4.2))
    _grouped_bars(ax1, received, "sum received energy [J]")
    ax1.set_title("received")
    ax1.set_xlabel(sweep_var)
    _grouped_bars(ax2, spent, "charging energy spent [J]")
    ax2.set_title("transmitted")
    ax2.set_xlabel(sweep_var)
    ax2.legend()
    fig.tight_layout()
    return fig


def render_beam_count(rows, sweep_var):
    beams = series(rows, "active_beams")
    fig, ax = plt.subplots()
    _grouped_bars(ax, beams, "active energy beams")
    ax.set_xlabel(sweep_var)
    ax.set_title("number of charging beams")
    ax.legend()
    fig.tight_layout()
    return fig


def render_efficiency(rows, sweep_var):
    eff = series(rows, "efficiency")
    fig, ax = plt.subplots()
    for j, (scheme, (xs, means, stds)) in enumerate(eff.items()):
        ax.errorbar(xs, means, yerr=stds, label=scheme,
                    color=_scheme_color(scheme, j),
                    marker=_MARKERS[j % len(_MARKERS)], capsize=2)
    ax.set_ylim(0, 100)
    ax.set_xlabel(sweep_var)
    ax.set_ylabel("average charging efficiency [%]")
    ax.set_title("charging efficiency")
    ax.legend()
    fig.tight_layout()
    return fig


_RENDERERS = {
    "energy_compare": render_energy_compare,
    "beam_count": render_beam_count,
    "efficiency": render_efficiency,
}


def render(in_path, kind, out_path):
    if kind not in KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}; pick from {KINDS}")
    rows = load_rows(in_path)
    sweep_var = rows[0]["sweep_var"]
    fig = _RENDERERS[kind](rows, sweep_var)
    # timestamps disabled so reruns are byte-identical
    meta = {"Date": None} if out_path.endswith(".svg") else None
    fig.savefig(out_path, metadata=meta)
    plt.close(fig)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--in", dest="in_path", required=True,
                    help="metrics CSV from the experiment harness")
    ap.add_argument("--kind", required=True, choices=KINDS)
    ap.add_argument("--out", required=True, help="output image path")
    args = ap.parse_args(argv)
    try:
        render(args.in_path, args.kind, args.out)
    except (SchemaError, OSError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
