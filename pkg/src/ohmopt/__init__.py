"""Organized hierarchical metaheuristics, PSO/ICA baselines, hybrid Adam and a weighted-CSP objective."""
from ._backend import BACKEND
from .benchmarks import make_benchmark
from .core import (
    BestTracker,
    Budget,
    BudgetExhausted,
    DimensionMismatch,
    InvalidRange,
    OptError,
    Problem,
    RunResult,
    clamp,
    evaluate,
    evaluate_batch,
    make_rng,
)
from .hybrid import AdamConfig, GradProblem, gd_run, gpso_run, ohm_gd_run
from .ohm import HierarchyConfig, get_variant, ohm_run
from .swarm import IcaConfig, PsoConfig, ica_run, pso_run

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "make_benchmark", "BestTracker", "Budget", "BudgetExhausted", "DimensionMismatch",
    "InvalidRange", "OptError", "Problem", "RunResult", "clamp", "evaluate", "evaluate_batch", "make_rng",
    "AdamConfig", "GradProblem", "gd_run", "gpso_run", "ohm_gd_run", "HierarchyConfig", "get_variant",
    "ohm_run", "IcaConfig", "PsoConfig", "ica_run", "pso_run",
]
