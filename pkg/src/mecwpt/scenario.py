"""Network geometry and per-user workload generation.

APs sit on a regular grid over a square service area; each AP serves the
K users drawn uniformly inside its own grid cell (which is also its
nearest-AP region), so every user is assigned to exactly one AP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ParamError


@dataclass(frozen=True)
class Scenario:
    """Positions and workloads. Arrays are treated as immutable.

    ap_positions:   (L, 2) m
    user_positions: (L, K, 2) m, user (l, i) is served by AP l
    tasks:          (L, K) bits to compute per user (u_i > 0)
    energy_requests:(L, K) J requested via wireless charging (e_i >= 0)
    """

    ap_positions: np.ndarray
    user_positions: np.ndarray
    tasks: np.ndarray
    energy_requests: np.ndarray
    area_side: float
    rng_seed: int

    def __post_init__(self):
        if np.any(self.tasks <= 0):
            raise ParamError("every task size u_i must be > 0")
        if np.any(self.energy_requests < 0):
            raise ParamError("energy requests e_i must be >= 0")

    @property
    def n_cells(self):
        return self.ap_positions.shape[0]

    @property
    def n_users(self):
        return self.user_positions.shape[1]


def _grid_layout(n_cells, area_side):
    """Regular grid of cell centers covering the square area.

    rows x cols chosen as the most square factorization with
    rows*cols >= n_cells; the first n_cells cell centers are used.
    """
    rows = int(math.floor(math.sqrt(n_cells)))
    cols = int(math.ceil(n_cells / rows))
    cell_w = area_side / cols
    cell_h = area_side / rows
    centers = []
    for r in range(rows):
        for c in range(cols):
            if len(centers) == n_cells:
                break
            centers.append(((c + 0.5) * cell_w, (r + 0.5) * cell_h))
    return np.asarray(centers), cell_w, cell_h


def generate_scenario(params, area_side, seed):
    """Draw a deterministic random scenario for (params, area_side, seed).

    Tasks are uniform in [u_min, u_max] bits, requests uniform in
    [e_min, e_max] J, per user.
    """
    if area_side <= 0:
        raise ParamError(f"area_side must be > 0, got {area_side}")
    L, K = params.L, params.K
    rng = np.random.default_rng(seed)
    centers, cell_w, cell_h = _grid_layout(L, area_side)
    # users uniform inside their serving AP's grid cell
    offsets = rng.uniform(-0.5, 0.5, size=(L, K, 2))
    users = centers[:, None, :] + offsets * np.array([cell_w, cell_h])
    tasks = rng.uniform(params.u_min, params.u_max, size=(L, K))
    requests = rng.uniform(params.e_min, params.e_max, size=(L, K))
    return Scenario(
        ap_positions=centers,
        user_positions=users,
        tasks=tasks,
        energy_requests=requests,
        area_side=float(area_side),
        rng_seed=int(seed),
    )
