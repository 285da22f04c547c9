"""Channel state: large/small-scale gains and interference-plus-noise power.

Large-scale gain between an AP and a user is dist^(-pathloss_exp) against
a 1 m reference, with log-normal shadowing. Serving-link vectors are
h = sqrt(beta) * g with g standard circularly-symmetric complex Gaussian.

The interference-plus-noise powers are a self-contained worst-case model
(every interfering user at p_max, interfering APs at equal per-user
downlink shares): a same-index contamination term at full array gain plus
an all-user inter-cell term suppressed by 1/N. This is a documented
modeling substitution, not a literature formula; both solvers treat the
sigma values purely as inputs, so a refined model is drop-in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class CellChannel(NamedTuple):
    """Per-cell view used by the solvers: serving channels and noise."""
    h: np.ndarray          # (K, N) complex, rows are user channels
    gamma: np.ndarray      # (K,) channel-estimate gains
    sigma1_sq: np.ndarray  # (K,) uplink interference+noise, W
    sigma2_sq: np.ndarray  # (K,) downlink interference+noise, W


@dataclass(frozen=True)
class ChannelRealization:
    """One random draw of the network channel state (immutable).

    h:         (L, K, N) complex serving-link vectors, h[l, i] is AP l to user (l, i)
    beta:      (L, L, K) large-scale gains, beta[a, l, i] couples AP a with user (l, i)
    gamma:     (L, K) mean-square channel-estimate gain of the serving link
    sigma1_sq: (L, K) uplink interference+noise power, W
    sigma2_sq: (L, K) downlink interference+noise power, W
    """

    h: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    sigma1_sq: np.ndarray
    sigma2_sq: np.ndarray

    def cell(self, l):
        return CellChannel(self.h[l], self.gamma[l], self.sigma1_sq[l],
                           self.sigma2_sq[l])


def _large_scale_gains(scenario, params, rng):
    """beta[a, l, i]: AP a <-> user (l, i), path loss plus shadowing."""
    ap = scenario.ap_positions            # (L, 2)
    users = scenario.user_positions       # (L, K, 2)
    diff = users[None, :, :, :] - ap[:, None, None, :]
    dist = np.linalg.norm(diff, axis=-1)  # (L_ap, L_cell, K)
    dist = np.maximum(dist, params.min_dist)
    beta = (dist / params.ref_dist) ** (-params.pathloss_exp)
    if params.shadowing_db > 0:
        shadow_db = rng.normal(0.0, params.shadowing_db, size=dist.shape)
        beta = beta * 10.0 ** (shadow_db / 10.0)
    return beta


def draw_channels(scenario, params, seed):
    """Deterministic channel realization for (scenario, params, seed)."""
    L, K, N = scenario.n_cells, scenario.n_users, params.N
    rng = np.random.default_rng(seed)
    beta = _large_scale_gains(scenario, params, rng)
    own = np.einsum("llk->lk", beta)                  # serving-link gains (L, K)
    g = (rng.standard_normal((L, K, N)) + 1j * rng.standard_normal((L, K, N)))
    g *= np.sqrt(0.5)                                 # unit-variance complex entries
    h = np.sqrt(own)[:, :, None] * g
    gamma = params.csi_scale * own
    real = ChannelRealization(h=h, beta=beta, gamma=gamma,
                              sigma1_sq=None, sigma2_sq=None)
    s1, s2 = interference_powers(real, scenario, params)
    return ChannelRealization(h=h, beta=beta, gamma=gamma,
                              sigma1_sq=s1, sigma2_sq=s2)


def interference_powers(realization, scenario, params):
    """Worst-case uplink/downlink interference-plus-noise powers, (L, K) each.

    Uplink, user (l, i) decoded at AP l:
      noise + sum_{a != l} beta[l, a, i] * p_max            (same-index contamination)
            + sum_{a != l} sum_j beta[l, a, j] * p_max / N  (inter-cell, array-suppressed)
    Downlink, user (l, i) hearing APs a != l with per-user share P/K:
      noise + sum_{a != l} beta[a, l, i] * (P/K) * (1 + K/N)
    """
    beta = realization.beta
    L, K = beta.shape[1], beta.shape[2]
    mask = 1.0 - np.eye(L)                       # excludes the serving cell

    # uplink at serving AP l from users of other cells a
    contam_ul = np.einsum("la,lak->lk", mask, beta) * params.p_max
    inter_ul = np.einsum("la,laj->l", mask, beta) * params.p_max / params.N
    sigma1 = params.noise_ul + contam_ul + inter_ul[:, None]

    # downlink at user (l, i) from interfering APs a: sum_{a != l} beta[a, l, i]
    share = params.P / K
    cross = np.einsum("al,alk->lk", mask, beta)
    sigma2 = params.noise_dl + cross * share * (1.0 + K / params.N)

    return sigma1, sigma2


def dump_channels(path, realization):
    """Write serving-link vectors to CSV: one row per (cell, user), columns
    interleave re/im across the N antennas. Used for regression fixtures."""
    L, K, N = realization.h.shape
    flat = realization.h.reshape(L * K, N)
    inter = np.empty((L * K, 2 * N))
    inter[:, 0::2] = flat.real
    inter[:, 1::2] = flat.imag
    np.savetxt(path, inter, delimiter=",")


def load_channels(path):
    """Inverse of dump_channels; returns an (n_rows, N) complex matrix."""
    inter = np.atleast_2d(np.loadtxt(path, delimiter=","))
    return inter[:, 0::2] + 1j * inter[:, 1::2]
