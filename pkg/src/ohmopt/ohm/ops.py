"""Stand-alone OHM operators on an :class:`OhmState`.

These wrap the kernels for inspection and testing; :func:`ohm_run` calls
the fused kernels directly.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from . import _kernels as K
from .config import CenterMetric, HierarchyConfig, OrgSelector, SolutionSelector
from .hierarchy import OhmState


def fitness(costs) -> np.ndarray:
    """Roulette weights ``worst - c + eps``; infinite costs get zero weight."""
    return K.fitness_np(costs)


def roulette(weights, u: float) -> int:
    """Index of the first cumulative weight exceeding ``u * total``."""
    w = np.asarray(weights, dtype=np.float64)
    return int(K.roulette(w, w.size, float(u)))


def select_solution(state: OhmState, selector=SolutionSelector.FitnessRWS, rng=None, u=None) -> int:
    idx = np.flatnonzero(state.alive)
    u = rng.random() if u is None else u
    if SolutionSelector(selector) == SolutionSelector.FitnessRWS:
        w = fitness(state.cost[idx])
    else:
        w = np.ones(idx.size)
    return int(idx[roulette(w, u)])


def select_level(state: OhmState, rng=None, u=None) -> int:
    u = rng.random() if u is None else u
    return roulette(state.eff, u)


def select_organization(state: OhmState, level: int, src: int, selector=OrgSelector.EntailingOrg,
                        rng=None, coin_probability: float = 0.5, u_pick=None, u_coin=None):
    """Return ``(j, fell_back)``: the chosen organization at ``level``.

    ``fell_back`` is True when an excluding selector had no other live
    organization and returned the one entailing ``src``.
    """
    u_pick = rng.random() if u_pick is None else u_pick
    u_coin = rng.random() if u_coin is None else u_coin
    j, fb = K.select_org(int(level), int(src), state.pos, state.cost, state.alive, state.tag,
                         state.org_off, state.org_alive, int(OrgSelector(selector)),
                         float(coin_probability), float(u_pick), float(u_coin))
    return int(j), bool(fb)


def organization_center(state: OhmState, level: int, j: int, metric: Optional[CenterMetric] = None):
    """Center of organization ``(level, j)`` under ``metric``, or None when empty."""
    metric = state.center_metric if metric is None else int(CenterMetric(metric))
    out = np.empty(state.dim)
    ok = K.center(int(level), int(j), state.pos, state.cost, state.alive, state.tag, state.fan,
                  state.org_off, state.org_alive, state.org_lo, state.org_hi, state.org_center,
                  int(metric), out)
    return out if ok else None


def move_solution(x, target, beta: float, lower, upper, rng=None, u=None, per_dim: bool = True):
    """``x + beta * u * (target - x)`` clamped to the box.

    ``u`` is drawn from U(0, 1) (one value per dimension when ``per_dim``)
    unless given explicitly.
    """
    x = np.asarray(x, dtype=np.float64)
    if u is None:
        u = rng.random(x.size) if per_dim else rng.random()
    return np.clip(x + beta * np.asarray(u) * (np.asarray(target) - x), lower, upper)


def update_effectiveness(eff: np.ndarray, level: int, improved: bool, cfg: HierarchyConfig) -> np.ndarray:
    """Exponential moving update of the chosen level's effectiveness, in place."""
    reward = cfg.reward_improved if improved else cfg.reward_idle
    eff[level] = max((1.0 - cfg.tune_rate) * eff[level] + cfg.tune_rate * reward, cfg.effectiveness_floor)
    return eff
