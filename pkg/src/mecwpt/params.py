"""System parameters: config parsing, unit normalization, validation.

All values are stored in SI units (bits, s, Hz, W, J, F, m). The config
format is a flat UTF-8 key-value document: one `key = value` pair per
line, `#` starts a comment. Values may carry a human unit suffix
(ms, MHz, dBm, mJ, Mbit, pF, ...) which is converted on load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Malformed config text (reports the offending line)."""


class ParamError(ValueError):
    """A parameter violates one of the model invariants."""


def dbm_to_watt(dbm):
    return 10.0 ** (dbm / 10.0 - 3.0)


def watt_to_dbm(watt):
    return 10.0 * math.log10(watt) + 30.0


# Multiplicative unit suffixes. dBm/dBW are handled separately since they
# are logarithmic.
_UNIT_SCALE = {
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9,
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
    "w": 1.0, "mw": 1e-3, "uw": 1e-6,
    "j": 1.0, "mj": 1e-3, "uj": 1e-6, "nj": 1e-9,
    "bit": 1.0, "bits": 1.0, "kbit": 1e3, "mbit": 1e6, "gbit": 1e9,
    "f": 1.0, "pf": 1e-12, "nf": 1e-9, "uf": 1e-6,
    "m": 1.0, "cm": 1e-2, "km": 1e3,
    "db": 1.0,  # stored as dB (shadowing std)
}

# Case-sensitive aliases resolved before lowercasing ("MHz" vs "mhz" are
# the same, but "mW" vs "MW" would not be; only SI-sane ones are accepted).
_CASE_ALIASES = {"KHz": "khz", "MHz": "mhz", "GHz": "ghz", "Mbit": "mbit",
                 "kbit": "kbit", "Gbit": "gbit", "mW": "mw", "uW": "uw",
                 "pF": "pf", "nF": "nf", "uF": "uf", "mJ": "mj", "uJ": "uj"}

_INT_KEYS = {"N", "K", "L", "max_inner_iters", "max_charging_iters",
             "max_outer_iters"}


def parse_value(text, lineno=0):
    """Parse a config value: a number with an optional unit suffix."""
    parts = text.split()
    if not parts or len(parts) > 2:
        raise ConfigError(f"line {lineno}: cannot parse value {text!r}")
    try:
        num = float(parts[0])
    except ValueError:
        raise ConfigError(f"line {lineno}: not a number: {parts[0]!r}") from None
    if len(parts) == 1:
        return num
    unit = parts[1]
    if unit == "dBm":
        return dbm_to_watt(num)
    if unit == "dBW":
        return 10.0 ** (num / 10.0)
    unit = _CASE_ALIASES.get(unit, unit).lower()
    if unit not in _UNIT_SCALE:
        raise ConfigError(f"line {lineno}: unknown unit {parts[1]!r}")
    return num * _UNIT_SCALE[unit]


@dataclass(frozen=True)
class SystemParams:
    """Scalar constants of the network, all SI.

    Defaults follow the reference evaluation setup: a 5 MHz channel, a
    20 ms round-trip latency budget, a massive-MIMO access point with a
    co-located edge server, and heavily user-weighted energy accounting
    (w = 1e-3 puts 99.9% of the weight on the user side).
    """

    N: int = 100            # AP antennas
    K: int = 4              # users per cell
    L: int = 4              # cells (AP + edge-server pairs)
    B: float = 5e6          # channel bandwidth, Hz
    T_d: float = 0.020      # round-trip latency budget, s
    w: float = 1e-3         # weight on server-side energy, in [0, 1]
    Gamma1: float = 1.25    # uplink capacity gap (>= 1)
    Gamma2: float = 1.25    # downlink capacity gap (>= 1)
    mu: float = 2.0         # downlink bits produced per offloaded bit
    nu: float = None        # symbol fraction carrying data; default 1 - K/(B*T_d)
    xi: float = 0.5         # RF-to-DC conversion efficiency, in (0, 1]
    kappa_i: float = 0.5e-12  # user switched capacitance, F
    kappa_m: float = 5e-12    # server switched capacitance, F
    c_i: float = 1000.0     # user CPU cycles per bit
    d_m: float = 500.0      # server CPU cycles per bit
    f_u: float = 1.8e9      # user CPU frequency, Hz
    f_m: float = None       # server CPU frequency per task, Hz; default 24*3.4GHz/K
    p_max: float = dbm_to_watt(23.0)   # user transmit power cap, W
    P: float = dbm_to_watt(46.0)       # AP transmit power cap, W
    noise_ul: float = dbm_to_watt(-127.0)  # uplink receiver noise floor, W
    noise_dl: float = dbm_to_watt(-122.0)  # downlink receiver noise floor, W
    pathloss_exp: float = 2.2
    shadowing_db: float = 2.7   # log-normal shadowing std, dB
    csi_scale: float = 1.0      # channel-estimate gain as a fraction of beta, (0, 1]
    eps1: float = 1e-4          # outer-loop precision
    eps2: float = 1e-6          # inner dual-loop precision
    u_min: float = 1e6          # task size draw range, bits
    u_max: float = 5e6
    e_min: float = 1e-3         # energy request draw range, J
    e_max: float = 10e-3
    max_inner_iters: int = 5000
    max_charging_iters: int = 2000
    max_outer_iters: int = 200
    dual_step: float = 1.0      # scale on the 1/sqrt(k) dual step
    ref_dist: float = 1.0       # path-loss reference distance, m
    min_dist: float = 0.5       # AP-user distance clamp, m

    def __post_init__(self):
        if self.nu is None:
            object.__setattr__(self, "nu", 1.0 - self.K / (self.B * self.T_d))
        if self.f_m is None:
            object.__setattr__(self, "f_m", 24 * 3.4e9 / self.K)
        validate_params(self)

    def replace(self, **changes):
        """Copy with fields changed (re-validates; nu/f_m recomputed if
        they were left at their defaults and K/B/T_d change)."""
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        # recompute dependent defaults unless explicitly pinned
        if any(k in changes for k in ("K", "B", "T_d")):
            if math.isclose(vals["nu"], 1.0 - vals["K"] / (vals["B"] * vals["T_d"])):
                vals["nu"] = None
            if math.isclose(vals["f_m"], 24 * 3.4e9 / vals["K"]):
                vals["f_m"] = None
        vals.update(changes)
        return SystemParams(**vals)


_POSITIVE = ("B", "T_d", "mu", "xi", "kappa_i", "kappa_m", "c_i", "d_m",
             "f_u", "f_m", "p_max", "P", "noise_ul", "noise_dl",
             "pathloss_exp", "eps1", "eps2", "u_min", "u_max", "e_min",
             "e_max", "dual_step", "ref_dist", "min_dist")


def validate_params(p):
    """Raise ParamError naming the first violated invariant."""
    for name in ("N", "K", "L"):
        if getattr(p, name) < 1:
            raise ParamError(f"{name} must be a positive count, got {getattr(p, name)}")
    for name in _POSITIVE:
        v = getattr(p, name)
        if not (v > 0) or not math.isfinite(v):
            raise ParamError(f"{name} must be strictly positive, got {v}")
    if not (0.0 <= p.w <= 1.0):
        raise ParamError(f"w must lie in [0, 1], got {p.w}")
    if not (0.0 < p.nu <= 1.0):
        raise ParamError(f"nu must lie in (0, 1], got {p.nu}")
    if not (0.0 < p.xi <= 1.0):
        raise ParamError(f"xi must lie in (0, 1], got {p.xi}")
    if not (0.0 < p.csi_scale <= 1.0):
        raise ParamError(f"csi_scale must lie in (0, 1], got {p.csi_scale}")
    if p.Gamma1 < 1.0 or p.Gamma2 < 1.0:
        raise ParamError(f"capacity gaps must be >= 1, got {p.Gamma1}, {p.Gamma2}")
    if p.N < p.K:
        raise ParamError(f"N >= K required by the rate model, got N={p.N} K={p.K}")
    if p.u_max < p.u_min or p.e_max < p.e_min:
        raise ParamError("draw ranges must satisfy min <= max")
    if p.shadowing_db < 0:
        raise ParamError(f"shadowing_db must be >= 0, got {p.shadowing_db}")


_FIELD_NAMES = None


def _field_names():
    global _FIELD_NAMES
    if _FIELD_NAMES is None:
        _FIELD_NAMES = {f.name for f in fields(SystemParams)}
    return _FIELD_NAMES


def parse_config(text):
    """Parse config text into a {key: SI value} dict (no validation)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _field_names():
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        value = parse_value(val.strip(), lineno)
        if key in _INT_KEYS:
            if value != int(value):
                raise ConfigError(f"line {lineno}: {key} must be an integer")
            value = int(value)
        out[key] = value
    return out


def load_params(config_text, overrides=None):
    """Build SystemParams from config text; missing keys take defaults.

    `overrides` (e.g. from CLI flags) wins over file keys. Raises
    ConfigError on parse problems, ParamError on invariant violations.
    """
    kv = parse_config(config_text)
    if overrides:
        for key, val in overrides.items():
            if key not in _field_names():
                raise ConfigError(f"unknown override key {key!r}")
            if isinstance(val, str):
                val = parse_value(val)
            if key in _INT_KEYS:
                val = int(val)
            kv[key] = val
    return SystemParams(**kv)


def params_to_config(p):
    """Serialize to config text that round-trips through load_params."""
    lines = [f"# mecwpt system parameters (SI units)"]
    for f in fields(SystemParams):
        v = getattr(p, f.name)
        lines.append(f"{f.name} = {v!r}")
    return "\n".join(lines) + "\n"
