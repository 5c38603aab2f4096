"""Hierarchy/selector configuration and the named OHM variants."""
from __future__ import annotations

from typing import Optional
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np


class SolutionSelector(IntEnum):
    FitnessRWS = 0
    UniformRWS = 1


class OrgSelector(IntEnum):
    MinCostSolution = 0
    MinCostSolutionRWS = 1
    MeanOfSubOrgCosts = 2
    MeanOfSubOrgCostsRWS = 3
    EntailingOrg = 4
    MinCostExcludingOrg = 5
    MinCostExcludingOrgRWS = 6
    EntailingOrgExcludingOrg = 7
    EntailingOrgExcludingOrgRWS = 8


class CenterMetric(IntEnum):
    MinCostSolution = 0
    WeightedMeanOfSolutions = 1
    MeanCostSubOrganization = 2
    WeightedMeanOfSubOrganizations = 3
    RegionCenter = 4


def _enum(cls, v):
    return v if isinstance(v, cls) else cls[v] if isinstance(v, str) else cls(v)


@dataclass
class SelectorConfig:
    solution_selector: SolutionSelector = SolutionSelector.FitnessRWS
    org_selector: OrgSelector = OrgSelector.EntailingOrg
    center_metric: CenterMetric = CenterMetric.WeightedMeanOfSolutions

    def __post_init__(self):
        self.solution_selector = _enum(SolutionSelector, self.solution_selector)
        self.org_selector = _enum(OrgSelector, self.org_selector)
        self.center_metric = _enum(CenterMetric, self.center_metric)


# move: the selected solution is relocated unconditionally;
# greedy: it is relocated only when the new position is cheaper;
# offspring: the new position joins the population and the worst member is culled.
REPLACEMENT_MODES = {"move": 0, "greedy": 1, "offspring": 2}


@dataclass
class HierarchyConfig:
    """Shape and move parameters of an OHM run.

    ``children_per_level[0]`` is the number of level-1 organizations under the
    root; the last entry is the number of solutions each deepest organization
    starts with.  Level 0 is the root, so ``level_count`` selectable levels
    run from the whole population (0) down to the deepest organizations.

    A move draws ``u ~ U(0, beta_move)`` (per dimension when ``per_dim_step``).
    With ``beta_move <= 2`` a move can never land farther from its target than
    it started, and the population contracts onto its centers before it finds
    the basin floor; 2.5 leaves room to overshoot.  The live population is
    culled (worst first) down to a cap that shrinks linearly from the initial
    size to ``final_population``; ``None`` keeps the cap fixed.
    """

    children_per_level: tuple = (2, 4, 5, 5)
    initial_effectiveness: tuple = (5.0, 15.0, 30.0, 50.0)
    random_update_threshold: float = 0.1
    beta_move: float = 2.5
    per_dim_step: bool = True
    final_population: Optional[int] = 20  # cap shrinks linearly to this over the budget
    replacement: str = "greedy"  # "move" | "greedy" | "offspring", see REPLACEMENT_MODES
    self_tuning: bool = False
    coin_probability: float = 0.5  # EntailingOrg share of the EntailingOrgExcludingOrg selectors
    tune_rate: float = 0.1
    reward_improved: float = 100.0
    reward_idle: float = 1.0
    effectiveness_floor: float = 1e-6

    def __post_init__(self):
        self.children_per_level = tuple(int(c) for c in self.children_per_level)
        self.initial_effectiveness = tuple(float(e) for e in self.initial_effectiveness)
        if not self.children_per_level or min(self.children_per_level) < 1:
            raise ValueError("children_per_level entries must be positive")
        if len(self.initial_effectiveness) != len(self.children_per_level):
            raise ValueError("initial_effectiveness needs one entry per level")
        if min(self.initial_effectiveness) <= 0:
            raise ValueError("effectiveness entries must be strictly positive")
        if not 0.0 <= self.random_update_threshold <= 1.0:
            raise ValueError("random_update_threshold must lie in [0, 1]")
        if self.replacement not in REPLACEMENT_MODES:
            raise ValueError(f"replacement must be one of {sorted(REPLACEMENT_MODES)}")
        if self.beta_move < 0:
            raise ValueError("beta_move must be non-negative")

    @property
    def level_count(self) -> int:
        return len(self.children_per_level)

    @property
    def population(self) -> int:
        return int(np.prod(self.children_per_level))


@dataclass(frozen=True)
class Variant:
    name: str
    selectors: SelectorConfig = field(default_factory=SelectorConfig)
    self_tuning: bool = False


VARIANTS = {
    "OHMPSO": Variant("OHMPSO", SelectorConfig("FitnessRWS", "EntailingOrg", "WeightedMeanOfSolutions")),
    "OHMICA": Variant("OHMICA", SelectorConfig("FitnessRWS", "MinCostExcludingOrg", "WeightedMeanOfSolutions")),
    "OHMPSO-ST": Variant("OHMPSO-ST", SelectorConfig("FitnessRWS", "EntailingOrg", "WeightedMeanOfSolutions"), True),
    "OHMICA-ST": Variant("OHMICA-ST", SelectorConfig("FitnessRWS", "MinCostExcludingOrgRWS", "WeightedMeanOfSolutions"), True),
}

# OHMPSO-ST bound to the excluding-org selector (alternative reading of the variant)
OHMPSO_ST_TABLE = Variant("OHMPSO-ST", SelectorConfig("FitnessRWS", "MinCostExcludingOrg", "WeightedMeanOfSolutions"), True)


def get_variant(name: str, table_literal: bool = False) -> Variant:
    key = name.upper()
    if key == "OHMPSO-ST" and table_literal:
        return OHMPSO_ST_TABLE
    try:
        return VARIANTS[key]
    except KeyError:
        raise KeyError(f"unknown OHM variant {name!r}; choose from {sorted(VARIANTS)}") from None


def with_self_tuning(cfg: HierarchyConfig, on: bool) -> HierarchyConfig:
    return replace(cfg, self_tuning=on)
