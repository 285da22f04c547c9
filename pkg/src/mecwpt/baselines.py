"""Reference charging schemes: isotropic and equal-power directed beams.

Both schemes are power-scaled by a single global factor so that no user
receives more than it requested (scaling per user would change the
schemes' shape). The directed scheme reuses the beam directions of the
optimized solution it is being compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charging import BeamSolution, solve_p3
from .errors import ChargingDisabled

_TAGS = ("isotropic", "equal_k")


@dataclass(frozen=True)
class BaselineKind:
    tag: str

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown baseline {self.tag!r}; pick from {_TAGS}")


def baseline_covariance(kind, channels, e, T_c, params, beams=None):
    """Charging solution for a reference scheme.

    kind: BaselineKind or tag string. channels: (K, N) rows h_i.
    beams: the optimized BeamSolution whose directions the equal-power
    scheme copies; solved internally when not supplied.
    Raises ChargingDisabled when T_c <= 0.
    """
    if isinstance(kind, str):
        kind = BaselineKind(kind)
    if T_c <= 0:
        raise ChargingDisabled(f"T_c = {T_c:.3g} s leaves no charging window")
    e = np.asarray(e, dtype=float)
    K, N = channels.shape

    if kind.tag == "isotropic":
        u_full = np.eye(N, dtype=complex)
        w_raw = (params.P / N) * np.eye(N, dtype=complex)
        lam_raw = np.full(N, params.P / N)   # all N directions radiate
    else:
        if beams is None:
            beams = solve_p3(channels, e, T_c, params)
        u_full = beams.U_B
        cols = u_full[:, :K]
        w_raw = (params.P / K) * (cols @ cols.conj().T)
        lam_raw = np.full(K, params.P / K)

    quad = np.einsum("kn,nm,km->k", channels.conj(), w_raw, channels).real
    raw = params.xi * T_c * quad
    with np.errstate(divide="ignore"):
        limits = np.where(raw > 0, e / np.maximum(raw, 1e-300), np.inf)
    c = float(min(1.0, np.min(limits[e > 0]))) if np.any(e > 0) else 1.0

    w_q = c * w_raw
    received = c * raw
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(e > 0, np.minimum(received / np.maximum(e, 1e-300), 1.0), 1.0)
    return BeamSolution(
        U_B=u_full,
        lambda_q=c * lam_raw,
        alpha=alpha,
        W_q=w_q,
        B_matrix=np.zeros((N, N), dtype=complex),
        received=received,
        converged=True,
        iterations=0,
        power_capped=True,
        cap_scale=c,
        charge_flat=float(T_c * np.trace(w_q).real),
        charge_slope=float(np.trace(w_q).real),
    )
