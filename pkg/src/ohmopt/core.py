"""Problem abstraction, evaluation budgets, box handling and seeded RNG streams."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class OptError(Exception):
    """Base class for optimizer errors."""


class BudgetExhausted(OptError):
    pass


class DimensionMismatch(OptError, ValueError):
    pass


class InvalidRange(OptError, ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    """A box-bounded objective.

    ``cost`` maps a length-``dim`` vector to a scalar.  ``batch_cost``, when
    given, maps an ``(n, dim)`` array to ``n`` costs and is used by population
    optimizers; it must agree with ``cost`` row by row.
    """

    dim: int
    lower: np.ndarray
    upper: np.ndarray
    cost: Callable[[np.ndarray], float]
    batch_cost: Optional[Callable[[np.ndarray], np.ndarray]] = None
    known_optimum: Optional[tuple] = None
    name: str = "problem"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        upper = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if lower.shape != (self.dim,) or upper.shape != (self.dim,):
            raise DimensionMismatch(
                f"bounds must have length {self.dim}, got {lower.shape} and {upper.shape}"
            )
        if not np.all(lower < upper):
            raise ValueError("lower < upper must hold for every coordinate")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def f_opt(self) -> Optional[float]:
        return None if self.known_optimum is None else float(self.known_optimum[1])

    def error(self, value: float) -> float:
        """Absolute distance to the known optimum value, or the raw value if none."""
        if self.known_optimum is None:
            return float(value)
        return abs(float(value) - self.f_opt)


class Budget:
    """Function-evaluation counter with a hard cap."""

    __slots__ = ("nfe_max", "nfe_used")

    def __init__(self, nfe_max: int, nfe_used: int = 0):
        if nfe_max < 0 or nfe_used < 0 or nfe_used > nfe_max:
            raise ValueError(f"invalid budget {nfe_used}/{nfe_max}")
        self.nfe_max = int(nfe_max)
        self.nfe_used = int(nfe_used)

    @property
    def remaining(self) -> int:
        return self.nfe_max - self.nfe_used

    @property
    def exhausted(self) -> bool:
        return self.nfe_used >= self.nfe_max

    def charge(self, n: int = 1):
        if n > self.remaining:
            raise BudgetExhausted(f"requested {n} evaluations, {self.remaining} left")
        self.nfe_used += n

    def __repr__(self):
        return f"Budget({self.nfe_used}/{self.nfe_max})"


def _finite_or_inf(v):
    # overflow and NaN are treated as the worst possible cost
    v = np.asarray(v, dtype=np.float64)
    return np.where(np.isfinite(v), v, np.inf)


def evaluate(problem: Problem, budget: Budget, x) -> float:
    """Evaluate ``problem.cost(x)`` and charge one evaluation to ``budget``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.dim,):
        raise DimensionMismatch(f"expected shape ({problem.dim},), got {x.shape}")
    budget.charge(1)
    v = float(problem.cost(x))
    return v if v == v and v not in (np.inf, -np.inf) else np.inf


def evaluate_batch(problem: Problem, budget: Budget, X) -> np.ndarray:
    """Evaluate the leading rows of ``X`` that fit in the remaining budget.

    Returns an array of length ``min(len(X), budget.remaining)``; callers
    compare lengths to detect a partial batch.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != problem.dim:
        raise DimensionMismatch(f"expected shape (n, {problem.dim}), got {X.shape}")
    n = min(len(X), budget.remaining)
    if n == 0:
        if len(X):
            raise BudgetExhausted("no evaluations left")
        return np.empty(0)
    budget.charge(n)
    if problem.batch_cost is not None:
        out = problem.batch_cost(X[:n])
    else:
        out = [problem.cost(row) for row in X[:n]]
    return _finite_or_inf(out)


def clamp(problem: Problem, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != problem.dim:
        raise DimensionMismatch(f"expected trailing dimension {problem.dim}, got {x.shape}")
    return np.minimum(np.maximum(x, problem.lower), problem.upper)


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """PCG64 stream derived from ``(seed, *keys)`` through ``SeedSequence``.

    PCG64 output is specified bit-for-bit, so streams reproduce across
    platforms and numpy versions that keep the ``Generator`` API.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))))


def uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    if lo > hi:
        raise InvalidRange(f"lo={lo} > hi={hi}")
    if lo == hi:
        return float(lo)
    return float(lo + (hi - lo) * rng.random())


@dataclass
class RunResult:
    """Outcome of one optimizer run.

    ``history[k]`` is the best cost seen after ``k + 1`` evaluations.
    """

    best_x: np.ndarray
    best_cost: float
    nfe_used: int
    history: np.ndarray
    converged: bool = True
    info: dict = field(default_factory=dict)


class BestTracker:
    """Best-so-far bookkeeping shared by the runners."""

    __slots__ = ("best_x", "best_cost", "_hist", "_n")

    def __init__(self, nfe_max: int, dim: int):
        self.best_x = np.full(dim, np.nan)
        self.best_cost = np.inf
        self._hist = np.empty(max(int(nfe_max), 0))
        self._n = 0

    def observe(self, x, c: float) -> bool:
        improved = c < self.best_cost
        if improved:
            self.best_cost = float(c)
            self.best_x = np.array(x, dtype=np.float64, copy=True)
        self._hist[self._n] = self.best_cost
        self._n += 1
        return improved

    def tick(self, n: int = 1):
        """Record ``n`` evaluations that produced no candidate cost (e.g. gradients)."""
        self._hist[self._n:self._n + n] = self.best_cost
        self._n += n

    def observe_many(self, X, costs) -> bool:
        costs = np.asarray(costs)
        if costs.size == 0:
            return False
        k = int(np.argmin(costs))
        running = np.minimum.accumulate(np.minimum(costs, self.best_cost))
        self._hist[self._n:self._n + costs.size] = running
        self._n += costs.size
        if costs[k] < self.best_cost:
            self.best_cost = float(costs[k])
            self.best_x = np.array(X[k], dtype=np.float64, copy=True)
            return True
        return False

    def result(self, nfe_used: int, converged: bool = True, **info) -> RunResult:
        return RunResult(
            best_x=self.best_x,
            best_cost=float(self.best_cost),
            nfe_used=int(nfe_used),
            history=self._hist[: self._n].copy(),
            converged=converged,
            info=info,
        )


def as_box(lower: Sequence[float] | float, upper: Sequence[float] | float, dim: int):
    lo = np.broadcast_to(np.asarray(lower, dtype=np.float64), (dim,)).copy()
    hi = np.broadcast_to(np.asarray(upper, dtype=np.float64), (dim,)).copy()
    return lo, hi
