"""Adam gradient descent restarted from metaheuristic seeds.

A run alternates *rounds* of ``gd_iters_per_round`` Adam steps.  Every
``reinit_every`` rounds the current point is replaced by a fresh seed: the
best point of a short initializer run (OHM, PSO, ICA) or, for plain
multi-start GD, a uniform draw in the box.

Evaluation accounting: one gradient counts as one NFE, and the cost at each
new Adam iterate as another.  Finite-difference gradients are charged their
true ``2 * dim`` evaluations.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import BestTracker, Budget, BudgetExhausted, OptError, Problem, RunResult, clamp, evaluate
from .ohm import HierarchyConfig, ohm_run
from .swarm import IcaConfig, PsoConfig, ica_run, pso_run


class NonFiniteGradient(OptError, ArithmeticError):
    pass


@dataclass
class AdamConfig:
    learning_rate: float = 0.02
    momentum1: float = 0.9
    momentum2: float = 0.8
    epsilon: float = 1e-8
    gd_iters_per_round: int = 5
    reinit_every: int = 5
    max_rounds: Optional[int] = None
    convergence_gamma: float = 1e-10
    descend: bool = True  # False climbs the gradient instead
    grad_threshold: float = 1e8
    init_fraction: float = 0.1  # share of the remaining budget each initializer run gets
    nesterov_warmup: bool = False

    def __post_init__(self):
        if not (0.0 <= self.momentum1 < 1.0 and 0.0 <= self.momentum2 < 1.0):
            raise ValueError("momenta must lie in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.gd_iters_per_round < 0 or self.reinit_every < 1:
            raise ValueError("gd_iters_per_round must be >= 0 and reinit_every >= 1")
        if not 0.0 <= self.init_fraction <= 1.0:
            raise ValueError("init_fraction must lie in [0, 1]")


def sanitize_gradient(grad, threshold: float = 1e8):
    """Zero non-finite or oversized components; returns ``(grad, n_zeroed)``.

    >>> sanitize_gradient(np.array([1e12, 1.0]))
    (array([0., 1.]), 1)
    """
    g = np.array(grad, dtype=np.float64)
    bad = ~np.isfinite(g) | (np.abs(g) > threshold)
    g[bad] = 0.0
    return g, int(bad.sum())


def adam_step(params, grad, m, v, t: int, cfg: AdamConfig):
    """One bias-corrected Adam update; returns ``(params, m, v)``.

    >>> p, m, v = adam_step(np.zeros(1), np.ones(1), np.zeros(1), np.zeros(1), 1,
    ...                     AdamConfig(epsilon=0.0))
    >>> p
    array([-0.02])
    """
    if t < 1:
        raise ValueError("t counts from 1")
    g = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("gradient has non-finite components")
    b1, b2 = cfg.momentum1, cfg.momentum2
    m = b1 * m + (1.0 - b1) * g
    v = b2 * v + (1.0 - b2) * g * g
    m_hat = m / (1.0 - b1**t)
    v_hat = v / (1.0 - b2**t)
    step = cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    params = params - step if cfg.descend else params + step
    return params, m, v


class GradProblem:
    """A :class:`Problem` with a gradient (central differences if none is given)."""

    def __init__(self, problem: Problem, gradient: Optional[Callable] = None, fd_step: float = 1e-6):
        self.problem = problem
        self.gradient = gradient
        self.fd_step = fd_step

    @property
    def dim(self) -> int:
        return self.problem.dim

    @property
    def grad_cost(self) -> int:
        """Evaluations charged per gradient."""
        return 1 if self.gradient is not None else 2 * self.dim

    def grad(self, x, budget: Optional[Budget] = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if budget is not None:
            budget.charge(self.grad_cost)
        if self.gradient is not None:
            return np.asarray(self.gradient(x), dtype=np.float64)
        h = self.fd_step * np.maximum(1.0, np.abs(x))
        g = np.empty(self.dim)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h[i]
            g[i] = (self.problem.cost(x + e) - self.problem.cost(x - e)) / (2 * h[i])
        return g


# ---------------------------------------------------------------------------
# initializers
# ---------------------------------------------------------------------------

Initializer = Callable[[Problem, Budget, np.random.Generator], RunResult]


def _ohm(variant):
    def run(problem, budget, rng, cfg: Optional[HierarchyConfig] = None):
        return ohm_run(problem, budget, variant, cfg, rng)

    run.__name__ = variant
    return run


INITIALIZERS = {
    "OHMPSO": _ohm("OHMPSO"),
    "OHMICA": _ohm("OHMICA"),
    "OHMPSO-ST": _ohm("OHMPSO-ST"),
    "OHMICA-ST": _ohm("OHMICA-ST"),
    "PSO": lambda problem, budget, rng: pso_run(problem, budget, PsoConfig(), rng),
    "ICA": lambda problem, budget, rng: ica_run(problem, budget, IcaConfig(), rng),
}


def get_initializer(name: Union[str, Initializer, None]) -> Optional[Initializer]:
    if name is None or callable(name):
        return name
    if name.lower() == "none":
        return None
    try:
        return INITIALIZERS[name.upper()]
    except KeyError:
        raise KeyError(f"unknown initializer {name!r}; choose from {sorted(INITIALIZERS)} or 'none'") from None


# ---------------------------------------------------------------------------
# the round loop
# ---------------------------------------------------------------------------


def _absorb(tracker: BestTracker, res: RunResult):
    """Merge a sub-run's per-NFE history into ``tracker``."""
    if res.nfe_used == 0:
        return
    h = np.minimum(res.history, tracker.best_cost)
    tracker._hist[tracker._n: tracker._n + h.size] = h
    tracker._n += h.size
    if res.best_cost < tracker.best_cost:
        tracker.best_cost = float(res.best_cost)
        tracker.best_x = np.array(res.best_x, dtype=np.float64, copy=True)


def ohm_gd_run(gp: GradProblem, budget: Budget, adam: Optional[AdamConfig] = None,
               initializer: Union[str, Initializer, None] = "OHMPSO", rng=None, trace=None,
               x0=None) -> RunResult:
    """Multi-start Adam with seeds from ``initializer`` (``None`` = uniform restarts).

    Parameters
    ----------
    gp : GradProblem
    budget : Budget
        Shared by initializer runs, gradients and cost evaluations.
    initializer : str, callable or None
        Name from :data:`INITIALIZERS`, a runner ``(problem, budget, rng) ->
        RunResult``, or ``None``/``"none"`` for plain multi-start GD.
    trace : callable, optional
        Receives one dict per round.
    x0 : array, optional
        First seed point instead of a uniform draw (plain-GD mode only).

    Notes
    -----
    When a round moves the parameters by less than ``convergence_gamma``
    (sum of absolute changes) the next round reseeds instead of stopping, so
    the budget is always spent; ``max_rounds`` is the only early stop.
    """
    adam = adam or AdamConfig()
    init = get_initializer(initializer)
    rng = rng if rng is not None else np.random.default_rng()
    problem = gp.problem
    tracker = BestTracker(budget.remaining, problem.dim)
    start = budget.nfe_used
    init_nfe = 0
    x = None
    cur = None
    m = v = None
    t = 0
    rnd = 0
    force_reseed = True
    stalled = 0
    reseeds = 0
    sanitized = 0
    reached_max = False
    while budget.remaining > 0:
        if adam.max_rounds is not None and rnd >= adam.max_rounds:
            reached_max = True
            break
        used_before = budget.nfe_used
        source = "continue"
        if force_reseed or rnd % adam.reinit_every == 0:
            slice_ = int(adam.init_fraction * budget.remaining) if init is not None else 0
            res = None
            if init is not None and slice_ > 0:
                sub = Budget(slice_)
                try:
                    res = init(problem, sub, rng)
                except BudgetExhausted:
                    # slice too small for the initializer's first population
                    res = None
                if res is not None:
                    budget.charge(sub.nfe_used)
                    init_nfe += sub.nfe_used
                    _absorb(tracker, res)
                    x = np.array(res.best_x, dtype=np.float64)
                    cur = float(res.best_cost)
                    source = getattr(init, "__name__", "initializer")
            if res is None:
                if x0 is not None and x is None:
                    x = clamp(problem, x0)
                else:
                    x = problem.lower + rng.random(problem.dim) * problem.width
                if budget.remaining > 0:
                    cur = evaluate(problem, budget, x)
                    tracker.observe(x, cur)
                source = "uniform"
            if adam.nesterov_warmup and budget.remaining >= gp.grad_cost + 1:
                g, k = sanitize_gradient(gp.grad(x, budget), adam.grad_threshold)
                tracker.tick(gp.grad_cost)
                sanitized += k
                x = clamp(problem, x - adam.learning_rate * g if adam.descend else x + adam.learning_rate * g)
                cur = evaluate(problem, budget, x)
                tracker.observe(x, cur)
            m = np.zeros(problem.dim)
            v = np.zeros(problem.dim)
            t = 0
            reseeds += 1
            force_reseed = False
        moved = 0.0
        for _ in range(adam.gd_iters_per_round):
            if budget.remaining < gp.grad_cost + 1:
                break
            g, k = sanitize_gradient(gp.grad(x, budget), adam.grad_threshold)
            tracker.tick(gp.grad_cost)
            sanitized += k
            t += 1
            x_new, m, v = adam_step(x, g, m, v, t, adam)
            x_new = clamp(problem, x_new)
            moved += float(np.abs(x_new - x).sum())
            x = x_new
            cur = evaluate(problem, budget, x)
            tracker.observe(x, cur)
        if moved < adam.convergence_gamma:
            force_reseed = True
            stalled += 1
        spent = budget.nfe_used - used_before
        if trace is not None:
            trace({"round": rnd, "source": source, "cost": cur,
                   "best": tracker.best_cost, "nfe": budget.nfe_used})
        rnd += 1
        if spent == 0:
            # only leftovers smaller than one gradient step remain: spend them on uniform samples
            while budget.remaining > 0:
                y = problem.lower + rng.random(problem.dim) * problem.width
                tracker.observe(y, evaluate(problem, budget, y))
            break
    if x is None and budget.remaining == 0 and tracker.best_cost == np.inf:
        return tracker.result(budget.nfe_used - start, converged=False, rounds=0)
    return tracker.result(
        budget.nfe_used - start, converged=not reached_max, rounds=rnd, reseeds=reseeds,
        stalled_rounds=stalled, init_nfe=init_nfe, gd_nfe=budget.nfe_used - start - init_nfe,
        sanitized=sanitized, final_x=None if x is None else x.copy(),
    )


def gpso_run(gp: GradProblem, budget: Budget, adam: Optional[AdamConfig] = None,
             pso_cfg: Optional[PsoConfig] = None, n_g: int = 5, rng=None, trace=None) -> RunResult:
    """GD reseeded by a PSO burst every ``n_g`` rounds."""
    adam = adam or AdamConfig()
    pso_cfg = pso_cfg or PsoConfig()

    def pso_init(problem, sub, r):
        return pso_run(problem, sub, pso_cfg, r)

    pso_init.__name__ = "PSO"
    cfg = AdamConfig(**{**adam.__dict__, "reinit_every": int(n_g)})
    return ohm_gd_run(gp, budget, cfg, pso_init, rng, trace)


def gd_run(gp: GradProblem, budget: Budget, adam: Optional[AdamConfig] = None, rng=None,
           trace=None, x0=None) -> RunResult:
    """Plain multi-start Adam with uniform restarts."""
    return ohm_gd_run(gp, budget, adam, None, rng, trace, x0=x0)


class JsonlRoundTrace:
    def __init__(self, stream):
        self.stream = stream

    def __call__(self, rec):
        self.stream.write(json.dumps(rec) + "\n")
