"""Array-backed organizational hierarchy.

Organizations are stored level by level in flat arrays; organization ``j``
of level ``l`` lives at row ``org_off[l] + j``.  Level 0 is the root, and the
children of organization ``j`` at level ``l`` are ``j*fan[l] ... j*fan[l] +
fan[l] - 1`` of level ``l + 1``.  Every solution carries one tag per level,
the local index of the organization containing it at that level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Budget, BudgetExhausted, Problem, evaluate_batch
from . import _kernels as K
from .config import CenterMetric, HierarchyConfig


@dataclass
class OhmState:
    pos: np.ndarray  # (cap + 1, d); one spare row receives the offspring
    cost: np.ndarray
    alive: np.ndarray
    tag: np.ndarray  # (cap + 1, L) int64
    fan: np.ndarray  # (L,) int64
    org_off: np.ndarray  # (L + 1,) int64
    org_alive: np.ndarray
    org_lo: np.ndarray
    org_hi: np.ndarray
    org_center: np.ndarray
    eff: np.ndarray  # (L,) level effectiveness
    cap: int
    center_metric: int
    n_alive: int = 0

    @property
    def dim(self) -> int:
        return self.pos.shape[1]

    @property
    def level_count(self) -> int:
        return self.tag.shape[1]

    def org_index(self, level: int, j: int) -> int:
        return int(self.org_off[level] + j)

    def orgs_at(self, level: int) -> int:
        return int(self.org_off[level + 1] - self.org_off[level])

    def members(self, level: int, j: int) -> np.ndarray:
        return np.flatnonzero(self.alive & (self.tag[:, level] == j))

    def live_orgs(self, level: int) -> np.ndarray:
        return np.flatnonzero(self.org_alive[self.org_off[level]: self.org_off[level + 1]])

    def best(self):
        idx = np.flatnonzero(self.alive)
        k = idx[np.argmin(self.cost[idx])]
        return self.pos[k].copy(), float(self.cost[k])

    def refresh_all_centers(self):
        out = np.empty(self.dim)
        for level in range(self.level_count - 1, -1, -1):
            for j in range(self.orgs_at(level)):
                g = self.org_index(level, j)
                if self.org_alive[g] and K.center(
                    level, j, self.pos, self.cost, self.alive, self.tag, self.fan, self.org_off,
                    self.org_alive, self.org_lo, self.org_hi, self.org_center, self.center_metric, out,
                ):
                    self.org_center[g] = out


def _split(lo, hi, parts):
    """Cut the box ``[lo, hi]`` into ``parts`` equal slabs along its longest axis."""
    axis = int(np.argmax(hi - lo))
    edges = np.linspace(lo[axis], hi[axis], parts + 1)
    out = []
    for k in range(parts):
        a, b = lo.copy(), hi.copy()
        a[axis], b[axis] = edges[k], edges[k + 1]
        out.append((a, b))
    return out


def init_hierarchy(problem: Problem, budget: Budget, cfg: HierarchyConfig, rng: np.random.Generator,
                   center_metric=CenterMetric.WeightedMeanOfSolutions, positions=None, partial=False):
    """Build the hierarchy and evaluate its initial population.

    The box is sliced recursively; each deepest organization gets
    ``children_per_level[-1]`` uniform points inside its own slab.  When the
    budget cannot cover the whole population :class:`BudgetExhausted` is
    raised, unless ``partial`` is set: then only the leading solutions are
    evaluated and the empty organizations start pruned.

    Returns ``(state, X, costs)`` with the evaluated rows.
    """
    fan = np.asarray(cfg.children_per_level, dtype=np.int64)
    L = len(fan)
    counts = np.concatenate(([1], np.cumprod(fan[:-1]))).astype(np.int64)
    org_off = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    n_org = int(org_off[-1])
    d = problem.dim
    org_lo = np.empty((n_org, d))
    org_hi = np.empty((n_org, d))
    org_lo[0], org_hi[0] = problem.lower, problem.upper
    for level in range(L - 1):
        for j in range(counts[level]):
            g = org_off[level] + j
            for k, (a, b) in enumerate(_split(org_lo[g], org_hi[g], int(fan[level]))):
                c = org_off[level + 1] + j * fan[level] + k
                org_lo[c], org_hi[c] = a, b

    cap = int(counts[-1] * fan[-1])
    if not partial and budget.remaining < cap:
        raise BudgetExhausted(f"initial population of {cap} needs {cap} evaluations, {budget.remaining} left")
    deep = np.repeat(np.arange(counts[-1]), fan[-1])
    tag = np.zeros((cap + 1, L), dtype=np.int64)
    tag[:cap, L - 1] = deep
    for level in range(L - 2, -1, -1):
        tag[:cap, level] = tag[:cap, level + 1] // fan[level]
    if positions is None:
        lo = org_lo[org_off[L - 1] + deep]
        hi = org_hi[org_off[L - 1] + deep]
        X = lo + rng.random((cap, d)) * (hi - lo)
    else:
        X = np.asarray(positions, dtype=np.float64)
        if X.shape != (cap, d):
            raise ValueError(f"positions must have shape {(cap, d)}, got {X.shape}")
        X = np.minimum(np.maximum(X, problem.lower), problem.upper)
        # seeded positions need not sit in their slabs: grow the slabs to fit
        for s in range(cap):
            j = deep[s]
            for level in range(L - 1, -1, -1):
                g = org_off[level] + j
                np.minimum(org_lo[g], X[s], out=org_lo[g])
                np.maximum(org_hi[g], X[s], out=org_hi[g])
                if level:
                    j //= fan[level - 1]
    costs = evaluate_batch(problem, budget, X)
    n = costs.size

    pos = np.zeros((cap + 1, d))
    pos[:cap] = X
    cost = np.full(cap + 1, np.inf)
    cost[:n] = costs
    alive = np.zeros(cap + 1, dtype=bool)
    alive[:n] = True
    org_alive = np.zeros(n_org, dtype=bool)
    for level in range(L):
        org_alive[org_off[level] + np.unique(tag[:n, level])] = True
    state = OhmState(
        pos=pos, cost=cost, alive=alive, tag=tag, fan=fan, org_off=org_off, org_alive=org_alive,
        org_lo=org_lo, org_hi=org_hi, org_center=0.5 * (org_lo + org_hi),
        eff=np.asarray(cfg.initial_effectiveness, dtype=np.float64).copy(),
        cap=n, center_metric=int(center_metric), n_alive=n,
    )
    if n:
        state.refresh_all_centers()
    return state, X[:n], costs


def check_invariants(state: OhmState, tol: float = 0.0) -> list:
    """Return a list of violated invariants (empty when the state is consistent).

    Checked: the live count matches ``n_alive`` and respects the cap; every
    live solution is tagged with live organizations whose regions contain it
    and whose tags form a parent chain; live organizations are non-empty and
    pruned ones have no members.
    """
    bad = []
    L = state.level_count
    if state.alive.sum() != state.n_alive or state.n_alive > state.cap:
        bad.append(f"population {state.alive.sum()} (recorded {state.n_alive}) vs cap {state.cap}")
    live = np.flatnonzero(state.alive)
    tags = state.tag[live]
    g = state.org_off[:L] + tags  # (n, L) global organization rows
    for s, level in zip(*np.nonzero(~state.org_alive[g])):
        bad.append(f"solution {live[s]} tagged with dead org ({level}, {tags[s, level]})")
    x = state.pos[live][:, None, :]
    outside = np.any((x < state.org_lo[g] - tol) | (x > state.org_hi[g] + tol), axis=2)
    for s, level in zip(*np.nonzero(outside)):
        bad.append(f"solution {live[s]} outside org ({level}, {tags[s, level]})")
    if L > 1:
        broken = tags[:, :-1] != tags[:, 1:] // state.fan[:-1]
        for s, level in zip(*np.nonzero(broken)):
            bad.append(f"solution {live[s]} has inconsistent tags at level {level + 1}")
    for level in range(L):
        counts = np.bincount(tags[:, level], minlength=state.orgs_at(level))
        org_live = state.org_alive[state.org_off[level]: state.org_off[level + 1]]
        for j in np.flatnonzero(org_live & (counts == 0)):
            bad.append(f"live org ({level}, {j}) is empty")
        for j in np.flatnonzero(~org_live & (counts > 0)):
            bad.append(f"dead org ({level}, {j}) has members")
    return bad
