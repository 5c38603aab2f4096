"""OHM main loop."""
from __future__ import annotations

import json
from typing import Optional, Union

import numpy as np

from ..core import BestTracker, Budget, Problem, RunResult, evaluate
from . import _kernels as K
from .config import REPLACEMENT_MODES, HierarchyConfig, Variant, get_variant
from .hierarchy import OhmState, init_hierarchy
from .ops import update_effectiveness

_BLOCK = 1024


class _UniformStream:
    """Rows of ``6 + 2d`` uniforms drawn in blocks from one generator."""

    def __init__(self, rng, dim):
        self.rng = rng
        self.width = K.u_width(dim)
        self._buf = np.empty((0, self.width))
        self._i = 0

    def next(self):
        if self._i >= len(self._buf):
            self._buf = self.rng.random((_BLOCK, self.width))
            self._i = 0
        row = self._buf[self._i]
        self._i += 1
        return row


class JsonlTrace:
    """Write one JSON object per OHM iteration to a text stream."""

    def __init__(self, stream):
        self.stream = stream

    def __call__(self, rec: dict):
        self.stream.write(json.dumps(rec) + "\n")


def population_cap(cfg: HierarchyConfig, initial: int, frac: float) -> int:
    """Live-population cap after spending ``frac`` of the budget."""
    if cfg.final_population is None:
        return initial
    final = min(max(int(cfg.final_population), 1), initial)
    return int(round(initial + (final - initial) * min(max(frac, 0.0), 1.0)))


def ohm_iteration(state: OhmState, problem: Problem, budget: Budget, variant: Variant,
                  cfg: HierarchyConfig, u_row: np.ndarray, tracker: Optional[BestTracker] = None):
    """Select, move, evaluate and commit one solution; returns an event record."""
    sel = variant.selectors
    src, level, j, fell_back, rnd, child = K.propose(
        state.pos, state.cost, state.alive, state.tag, state.fan, state.org_off, state.org_alive,
        state.org_lo, state.org_hi, state.org_center, problem.lower, problem.upper, state.eff,
        int(sel.solution_selector), int(sel.org_selector), float(cfg.coin_probability),
        float(cfg.random_update_threshold), float(cfg.beta_move), bool(cfg.per_dim_step), u_row,
    )
    distance = float(np.linalg.norm(child - state.pos[src]))
    c = evaluate(problem, budget, child)
    improved = tracker.observe(child, c) if tracker is not None else False
    slot, victim, n_pruned, expanded = K.commit(
        child, c, src, state.pos, state.cost, state.alive, state.tag, state.fan, state.org_off,
        state.org_alive, state.org_lo, state.org_hi, state.org_center, state.center_metric, state.cap,
        REPLACEMENT_MODES[cfg.replacement],
    )
    if slot >= 0 and victim < 0 and REPLACEMENT_MODES[cfg.replacement] == K.MODE_OFFSPRING:
        state.n_alive += 1
    while state.n_alive > state.cap:
        _, n = K.cull_worst(state.pos, state.cost, state.alive, state.tag, state.fan, state.org_off,
                            state.org_alive, state.org_lo, state.org_hi, state.org_center, state.center_metric)
        state.n_alive -= 1
        n_pruned += n
    if variant.self_tuning or cfg.self_tuning:
        update_effectiveness(state.eff, level, improved, cfg)
    return {
        "src": int(src), "level": int(level), "org": int(j), "fallback": bool(fell_back),
        "random": bool(rnd), "cost": float(c), "distance": distance, "accepted": slot >= 0, "victim": int(victim),
        "pruned": int(n_pruned), "expanded": bool(expanded), "improved": bool(improved),
    }


def ohm_run(problem: Problem, budget: Budget, variant: Union[str, Variant] = "OHMPSO",
            cfg: Optional[HierarchyConfig] = None, rng: Optional[np.random.Generator] = None,
            trace=None, positions=None) -> RunResult:
    """Run an OHM variant until the evaluation budget is spent.

    Parameters
    ----------
    variant : str or Variant
        ``"OHMPSO"``, ``"OHMICA"``, ``"OHMPSO-ST"``, ``"OHMICA-ST"`` or a custom
        :class:`Variant`.
    trace : callable, optional
        Called with a dict per iteration (see :class:`JsonlTrace`).
    positions : array, optional
        Initial population (``cfg.population`` rows) instead of uniform slabs.
    """
    variant = get_variant(variant) if isinstance(variant, str) else variant
    cfg = cfg or HierarchyConfig()
    rng = rng if rng is not None else np.random.default_rng()
    tracker = BestTracker(budget.remaining, problem.dim)
    start = budget.nfe_used
    state, X, costs = init_hierarchy(problem, budget, cfg, rng, variant.selectors.center_metric, positions,
                                     partial=True)
    tracker.observe_many(X, costs)
    stream = _UniformStream(rng, problem.dim)
    stats = {"iterations": 0, "accepted": 0, "pruned": 0, "expanded": 0, "fallback": 0}
    if state.cap < 1:
        return tracker.result(budget.nfe_used - start, converged=False, **stats)
    initial = state.cap
    total = budget.remaining
    while budget.remaining > 0:
        state.cap = population_cap(cfg, initial, 1.0 - budget.remaining / total)
        ev = ohm_iteration(state, problem, budget, variant, cfg, stream.next(), tracker)
        stats["iterations"] += 1
        stats["accepted"] += ev["accepted"]
        stats["pruned"] += ev["pruned"]
        stats["expanded"] += ev["expanded"]
        stats["fallback"] += ev["fallback"]
        if trace is not None:
            ev["iter"] = stats["iterations"]
            ev["nfe"] = budget.nfe_used
            ev["best"] = tracker.best_cost
            trace(ev)
    stats["effectiveness"] = state.eff.tolist()
    return tracker.result(budget.nfe_used - start, state=state, **stats)
