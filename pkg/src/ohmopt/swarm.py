"""Inertia-weight PSO and the imperialist competitive algorithm (ICA)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import BestTracker, Budget, BudgetExhausted, Problem, RunResult, clamp, evaluate_batch


@dataclass
class PsoConfig:
    """PSO settings.

    ``v_max_fraction`` caps |V| at that fraction of the box width per
    dimension; ``0.1 / 8`` reproduces the tighter reading of the usual
    "0.1/8 [Xmin, Xmax]" speed limit.  ``literal_eq3`` adds the bare previous
    velocity on top of the inertia term, ``V' = V + w V + ...``.
    """

    swarm_size: int = 30
    inertia_start: float = 0.9
    inertia_end: float = 0.7
    v_max_fraction: float = 0.1
    phi_max: float = 2.0
    literal_eq3: bool = False

    def __post_init__(self):
        if self.swarm_size < 1:
            raise ValueError("swarm_size must be positive")
        if not 0.0 < self.inertia_end <= self.inertia_start < 2.0:
            raise ValueError("need 0 < inertia_end <= inertia_start < 2")
        if not 0.0 < self.v_max_fraction <= 1.0:
            raise ValueError("v_max_fraction must lie in (0, 1]")


@dataclass
class Swarm:
    X: np.ndarray
    V: np.ndarray
    P: np.ndarray
    p_cost: np.ndarray
    G: np.ndarray
    g_cost: float


def inertia(k: int, n_iter: int, cfg: PsoConfig) -> float:
    """Linearly interpolated inertia weight for iteration ``k`` of ``n_iter``."""
    if n_iter <= 1:
        return cfg.inertia_start
    t = min(max(k / (n_iter - 1), 0.0), 1.0)
    return cfg.inertia_start + t * (cfg.inertia_end - cfg.inertia_start)


def velocity_update(X, V, P, G, w, phi1, phi2, v_max, literal_eq3=False):
    """New velocity, clipped to ``[-v_max, v_max]``.

    >>> velocity_update(np.array([0.]), np.array([0.]), np.array([1.]), np.array([2.]),
    ...                 0.9, 0.5, 0.5, np.array([10.]))
    array([1.5])
    """
    V_new = w * V + phi1 * (P - X) + phi2 * (G - X)
    if literal_eq3:
        V_new = V_new + V
    return np.clip(V_new, -v_max, v_max)


def init_swarm(problem: Problem, budget: Budget, cfg: PsoConfig, rng, tracker: Optional[BestTracker] = None,
               positions=None) -> Swarm:
    n, d = cfg.swarm_size, problem.dim
    if positions is None:
        X = problem.lower + rng.random((n, d)) * problem.width
    else:
        X = clamp(problem, np.array(positions, dtype=np.float64).reshape(n, d))
    v_max = cfg.v_max_fraction * problem.width
    V = rng.uniform(-1.0, 1.0, (n, d)) * v_max
    if budget.remaining < n:
        raise BudgetExhausted(f"swarm of {n} needs {n} evaluations, {budget.remaining} left")
    c = evaluate_batch(problem, budget, X)
    if tracker is not None:
        tracker.observe_many(X, c)
    g = int(np.argmin(c))
    return Swarm(X, V, X.copy(), c.copy(), X[g].copy(), float(c[g]))


def pso_step(swarm: Swarm, k: int, n_iter: int, cfg: PsoConfig, rng, problem: Problem, budget: Budget,
             tracker: Optional[BestTracker] = None) -> Swarm:
    """One synchronous PSO generation.

    Particles past the end of the budget are left where they were.
    """
    n, d = swarm.X.shape
    w = inertia(k, n_iter, cfg)
    phi1 = rng.random((n, d)) * cfg.phi_max
    phi2 = rng.random((n, d)) * cfg.phi_max
    v_max = cfg.v_max_fraction * problem.width
    V = velocity_update(swarm.X, swarm.V, swarm.P, swarm.G, w, phi1, phi2, v_max, cfg.literal_eq3)
    X = clamp(problem, swarm.X + V)
    c = evaluate_batch(problem, budget, X)
    m = len(c)
    if tracker is not None:
        tracker.observe_many(X[:m], c)
    swarm.X[:m] = X[:m]
    swarm.V[:m] = V[:m]
    better = c < swarm.p_cost[:m]
    swarm.P[:m][better] = X[:m][better]
    swarm.p_cost[:m][better] = c[better]
    g = int(np.argmin(swarm.p_cost))
    if swarm.p_cost[g] < swarm.g_cost:
        swarm.G = swarm.P[g].copy()
        swarm.g_cost = float(swarm.p_cost[g])
    return swarm


def pso_run(problem: Problem, budget: Budget, cfg: Optional[PsoConfig] = None, rng=None,
            init_positions=None) -> RunResult:
    """Run PSO until the budget is spent."""
    cfg = cfg or PsoConfig()
    rng = rng if rng is not None else np.random.default_rng()
    tracker = BestTracker(budget.remaining, problem.dim)
    start = budget.nfe_used
    swarm = init_swarm(problem, budget, cfg, rng, tracker, init_positions)
    n_iter = -(-budget.remaining // cfg.swarm_size)
    k = 0
    while budget.remaining > 0:
        pso_step(swarm, k, n_iter, cfg, rng, problem, budget, tracker)
        k += 1
    return tracker.result(budget.nfe_used - start, iterations=k)


# ---------------------------------------------------------------------------
# ICA
# ---------------------------------------------------------------------------


@dataclass
class IcaConfig:
    n_countries: int = 60
    n_imperialists: int = 10
    beta: float = 2.0
    revolution_rate: float = 0.1
    zeta: float = 0.1  # weight of mean colony cost in an empire's total cost

    def __post_init__(self):
        if not 0 < self.n_imperialists < self.n_countries:
            raise ValueError("need 0 < n_imperialists < n_countries")
        if not 0.0 <= self.revolution_rate <= 1.0:
            raise ValueError("revolution_rate must lie in [0, 1]")


@dataclass
class Empire:
    imp_x: np.ndarray
    imp_cost: float
    col_x: np.ndarray
    col_cost: np.ndarray

    @property
    def n_colonies(self) -> int:
        return len(self.col_cost)

    def total_cost(self, zeta: float) -> float:
        if self.n_colonies == 0:
            return self.imp_cost
        return self.imp_cost + zeta * float(np.mean(self.col_cost))

    def exchange(self):
        """Swap the imperialist with its best colony if that colony is cheaper."""
        if self.n_colonies == 0:
            return
        j = int(np.argmin(self.col_cost))
        if self.col_cost[j] < self.imp_cost:
            x, c = self.imp_x.copy(), self.imp_cost
            self.imp_x, self.imp_cost = self.col_x[j].copy(), float(self.col_cost[j])
            self.col_x[j], self.col_cost[j] = x, c


@dataclass
class IcaState:
    empires: list = field(default_factory=list)

    def country_count(self) -> int:
        return sum(1 + e.n_colonies for e in self.empires)


def ica_assimilate(colony, imperialist, beta: float, rng, problem: Optional[Problem] = None, u=None):
    """Move a colony toward its imperialist by ``u * (imperialist - colony)``, u ~ U(0, beta).

    Works row-wise on ``(n, d)`` arrays with one draw per row.
    """
    colony = np.asarray(colony, dtype=np.float64)
    imperialist = np.asarray(imperialist, dtype=np.float64)
    if u is None:
        shape = colony.shape[:-1] + (1,) if colony.ndim > 1 else ()
        u = rng.random(shape) * beta
    out = colony + u * (imperialist - colony)
    return out if problem is None else clamp(problem, out)


def _roulette(weights, u: float) -> int:
    w = np.asarray(weights, dtype=np.float64)
    cum = np.cumsum(w)
    total = cum[-1]
    if not total > 0.0:
        return int(min(int(u * len(w)), len(w) - 1))
    i = int(np.searchsorted(cum, u * total, side="right"))
    return min(i, len(w) - 1)


def _largest_remainder(power, total: int) -> np.ndarray:
    share = power / power.sum() * total
    counts = np.floor(share).astype(int)
    rest = total - counts.sum()
    order = np.argsort(-(share - counts), kind="stable")
    counts[order[:rest]] += 1
    return counts


def init_empires(problem: Problem, budget: Budget, cfg: IcaConfig, rng, tracker=None) -> IcaState:
    n, d = cfg.n_countries, problem.dim
    if budget.remaining < n:
        raise BudgetExhausted(f"{n} countries need {n} evaluations, {budget.remaining} left")
    X = problem.lower + rng.random((n, d)) * problem.width
    c = evaluate_batch(problem, budget, X)
    if tracker is not None:
        tracker.observe_many(X, c)
    order = np.argsort(c, kind="stable")
    X, c = X[order], c[order]
    k = cfg.n_imperialists
    imp_c = c[:k]
    finite = np.isfinite(imp_c)
    worst = imp_c[finite].max() if finite.any() else 0.0
    power = np.where(finite, worst - imp_c, 0.0)
    if not power.sum() > 0.0:
        power = np.ones(k)
    counts = _largest_remainder(power, n - k)
    perm = k + rng.permutation(n - k)
    state = IcaState()
    start = 0
    for i in range(k):
        idx = perm[start:start + counts[i]]
        start += counts[i]
        state.empires.append(Empire(X[i].copy(), float(c[i]), X[idx].copy(), c[idx].copy()))
    return state


def _competition(state: IcaState, cfg: IcaConfig, rng):
    emp = state.empires
    if len(emp) < 2:
        return
    total = np.array([e.total_cost(cfg.zeta) for e in emp])
    finite = np.isfinite(total)
    worst_val = total[finite].max() if finite.any() else 0.0
    weakest = int(np.argmax(np.where(finite, total, np.inf)))
    fitness = np.where(finite, worst_val - total, 0.0) + 1e-12 * max(1.0, abs(worst_val))
    fitness[weakest] = 0.0
    u = rng.random()
    weak = emp[weakest]
    if weak.n_colonies > 0:
        winner = _roulette(fitness, u)
        j = int(np.argmax(weak.col_cost))
        win = emp[winner]
        win.col_x = np.vstack([win.col_x, weak.col_x[j:j + 1]])
        win.col_cost = np.append(win.col_cost, weak.col_cost[j])
        weak.col_x = np.delete(weak.col_x, j, axis=0)
        weak.col_cost = np.delete(weak.col_cost, j)
    # empires with no colonies collapse; their imperialist joins the winner
    dead = set()
    for i, e in enumerate(emp):
        if e.n_colonies > 0 or len(emp) - len(dead) < 2:
            continue
        fit = fitness.copy()
        fit[list(dead | {i})] = 0.0
        winner = _roulette(fit, u)
        if winner == i or winner in dead:
            winner = next(j for j in range(len(emp)) if j != i and j not in dead)
        w = emp[winner]
        w.col_x = np.vstack([w.col_x, e.imp_x[None, :]])
        w.col_cost = np.append(w.col_cost, e.imp_cost)
        dead.add(i)
    if dead:
        state.empires = [e for i, e in enumerate(emp) if i not in dead]


def ica_iteration(state: IcaState, cfg: IcaConfig, rng, problem: Problem, budget: Budget, tracker=None) -> IcaState:
    """Assimilation, revolution, exchange, competition and elimination."""
    d = problem.dim
    for e in state.empires:
        if e.n_colonies == 0:
            continue
        new_x = ica_assimilate(e.col_x, e.imp_x[None, :], cfg.beta, rng, problem)
        revolt = rng.random(e.n_colonies) < cfg.revolution_rate
        n_rev = int(revolt.sum())
        if n_rev:
            new_x[revolt] = problem.lower + rng.random((n_rev, d)) * problem.width
        c = evaluate_batch(problem, budget, new_x)
        m = len(c)
        if tracker is not None:
            tracker.observe_many(new_x[:m], c)
        e.col_x[:m] = new_x[:m]
        e.col_cost[:m] = c
        e.exchange()
        if budget.remaining == 0:
            break
    _competition(state, cfg, rng)
    for e in state.empires:
        e.exchange()
    return state


def ica_run(problem: Problem, budget: Budget, cfg: Optional[IcaConfig] = None, rng=None) -> RunResult:
    cfg = cfg or IcaConfig()
    rng = rng if rng is not None else np.random.default_rng()
    tracker = BestTracker(budget.remaining, problem.dim)
    start = budget.nfe_used
    state = init_empires(problem, budget, cfg, rng, tracker)
    k = 0
    while budget.remaining > 0:
        ica_iteration(state, cfg, rng, problem, budget, tracker)
        k += 1
    return tracker.result(budget.nfe_used - start, iterations=k, empires=len(state.empires))
