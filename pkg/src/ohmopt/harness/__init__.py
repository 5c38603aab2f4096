from .experiment import (
    PRESETS,
    CellResult,
    ExperimentConfig,
    OptimizerSpec,
    ProblemSpec,
    RunRecord,
    build_problem,
    collect,
    run_experiment,
    run_records,
    run_single,
    seed_rng,
    desk_grid,
)
from .optimizers import OPTIMIZERS, ConfigError, make_optimizer
from .report import (
    export,
    mean_std_cell,
    rank_table,
    ranksum_pvalues,
    read_csv,
    render,
    to_csv,
    to_json,
    to_markdown,
)

__all__ = [
    "PRESETS", "CellResult", "ExperimentConfig", "OptimizerSpec", "ProblemSpec", "RunRecord",
    "build_problem", "collect", "run_experiment", "run_records", "run_single", "seed_rng", "desk_grid",
    "OPTIMIZERS", "ConfigError", "make_optimizer", "export", "mean_std_cell", "rank_table",
    "ranksum_pvalues", "read_csv", "render", "to_csv", "to_json", "to_markdown",
]
