"""Principal branch W0 of the Lambert W function (w * exp(w) = x).

Halley iteration from a branch-aware initial guess: a sqrt series at the
branch point x = -1/e, log(1 + x) for small nonnegative x, and the
asymptotic log(x) - log(log(x)) for large x. Cubic convergence, no
external dependency. Only W0 is provided; the closed-form time
allocation never needs the lower branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_INV_E = math.exp(-1.0)
_CLAMP = 1e-15
_MAX_ITERS = 50


@dataclass(frozen=True)
class LambertResult:
    value: float
    iterations: int
    residual: float   # |w * exp(w) - x|


def _initial_guess(x):
    if x > math.e:
        lx = math.log(x)
        return lx - math.log(lx)
    if x >= 0.0:
        return math.log1p(x)
    # -1/e <= x < 0: series around the branch point
    p = math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def lambert_w0(x):
    """Evaluate W0(x) for x >= -1/e (inputs within 1e-15 below are clamped).

    Raises ValueError outside the domain. The result satisfies
    |w*exp(w) - x| <= 1e-12 * max(1, |x|).
    """
    if not math.isfinite(x):
        raise ValueError(f"lambert_w0 requires a finite argument, got {x}")
    if x < -_INV_E:
        if x < -_INV_E - _CLAMP:
            raise ValueError(f"lambert_w0 domain is x >= -1/e, got {x}")
        x = -_INV_E
    if x == -_INV_E:
        return LambertResult(-1.0, 0, abs(-math.exp(-1.0) - x))
    if x == 0.0:
        return LambertResult(0.0, 0, 0.0)

    w = _initial_guess(x)
    iters = 0
    for iters in range(1, _MAX_ITERS + 1):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            wp1 = 1e-300
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        step = f / denom
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    return LambertResult(w, iters, abs(w * math.exp(w) - x))


def lambert_w0_vec(x):
    """Vectorized W0 over an ndarray (same domain handling as lambert_w0)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -_INV_E - _CLAMP):
        bad = x[x < -_INV_E - _CLAMP]
        raise ValueError(f"lambert_w0 domain is x >= -1/e, got {bad[:3]}")
    x = np.maximum(x, -_INV_E)

    big = x > math.e
    w = np.where(big,
                 np.log(np.where(big, x, math.e))
                 - np.log(np.log(np.where(big, x, math.e))),
                 np.log1p(np.maximum(x, 0.0)))
    near = x < 0.0
    if np.any(near):
        p = np.sqrt(np.maximum(0.0, 2.0 * (math.e * x[near] + 1.0)))
        w[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3

    for _ in range(_MAX_ITERS):
        ew = np.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        wp1 = np.where(np.abs(wp1) < 1e-300, 1e-300, wp1)
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        denom = np.where(denom == 0.0, 1.0, denom)
        step = f / denom
        w = w - step
        if np.all(np.abs(step) <= 1e-16 * (1.0 + np.abs(w))):
            break
    # the branch point itself is exact
    w = np.where(x == -_INV_E, -1.0, w)
    return w
