"""Shared test helpers: desk-scale instances that solve in milliseconds."""

import numpy as np

from mecwpt import SystemParams, draw_channels, generate_scenario


def desk_params(**overrides):
    """Desk-scale defaults: tasks sized so the latency budget is feasible
    and the edge-compute window leaves a healthy charging window."""
    base = dict(N=32, K=4, L=1, u_min=2e5, u_max=4e5,
                e_min=1e-3, e_max=4e-3, f_m=20.4e9)
    base.update(overrides)
    return SystemParams(**base)


def make_instance(seed, **overrides):
    """(params, scenario, channels) triple for one random desk instance."""
    p = desk_params(**overrides)
    sc = generate_scenario(p, 20.0, seed)
    ch = draw_channels(sc, p, seed + 1_000_003)
    return p, sc, ch


def feasible_split(p, u, seed, frac_lo=0.3, frac_hi=0.95):
    """Random offload split inside the latency-feasible box."""
    lo = np.maximum(0.0, u - p.T_d * (1 - 1e-6) * p.f_u / p.c_i)
    hi = np.minimum(u, p.T_d * (1 - 1e-6) * p.f_m / p.d_m)
    rng = np.random.default_rng(seed)
    return lo + rng.uniform(frac_lo, frac_hi, size=u.shape) * (hi - lo)


# fixtures live in conftest.py
