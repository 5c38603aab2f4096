from .config import (
    OHMPSO_ST_TABLE,
    VARIANTS,
    CenterMetric,
    HierarchyConfig,
    OrgSelector,
    SelectorConfig,
    SolutionSelector,
    Variant,
    get_variant,
    with_self_tuning,
)
from .hierarchy import OhmState, check_invariants, init_hierarchy
from .ops import (
    fitness,
    move_solution,
    organization_center,
    roulette,
    select_level,
    select_organization,
    select_solution,
    update_effectiveness,
)
from .run import JsonlTrace, ohm_iteration, ohm_run

__all__ = [
    "OHMPSO_ST_TABLE", "VARIANTS", "CenterMetric", "HierarchyConfig", "OrgSelector", "SelectorConfig",
    "SolutionSelector", "Variant", "get_variant", "with_self_tuning", "OhmState", "check_invariants",
    "init_hierarchy", "fitness", "move_solution", "organization_center", "roulette", "select_level",
    "select_organization", "select_solution", "update_effectiveness", "JsonlTrace", "ohm_iteration",
    "ohm_run",
]
