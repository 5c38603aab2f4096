"""Name -> runner registry used by the experiment harness.

A runner has the signature ``runner(problem, budget, rng, gp=None) -> RunResult``;
``gp`` is the :class:`~ohmopt.hybrid.GradProblem` when the problem has a
gradient (only gradient-based optimizers use it).
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable

from ..hybrid import AdamConfig, GradProblem, gd_run, gpso_run, ohm_gd_run
from ..ohm import HierarchyConfig, ohm_run
from ..swarm import IcaConfig, PsoConfig, ica_run, pso_run


class ConfigError(ValueError):
    """Unknown optimizer or invalid optimizer parameters."""


@dataclass(frozen=True)
class OptimizerInfo:
    name: str
    needs_gradient: bool
    description: str
    factory: Callable[[dict], Callable]


def _split(cls, params: dict, what: str):
    names = {f.name for f in fields(cls)}
    unknown = set(params) - names
    if unknown:
        raise ConfigError(f"unknown {what} parameter(s) {sorted(unknown)}; known: {sorted(names)}")
    try:
        return cls(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what} parameters: {exc}") from exc


def _pso(params):
    cfg = _split(PsoConfig, params, "PSO")
    return lambda problem, budget, rng, gp=None: pso_run(problem, budget, cfg, rng)


def _ica(params):
    cfg = _split(IcaConfig, params, "ICA")
    return lambda problem, budget, rng, gp=None: ica_run(problem, budget, cfg, rng)


def _ohm(variant):
    def factory(params):
        cfg = _split(HierarchyConfig, params, variant)
        return lambda problem, budget, rng, gp=None: ohm_run(problem, budget, variant, cfg, rng)

    return factory


def _hybrid(initializer):
    def factory(params):
        params = dict(params)
        n_g = params.pop("n_g", None)
        adam = _split(AdamConfig, params, "Adam")

        def run(problem, budget, rng, gp=None):
            gp = gp if gp is not None else GradProblem(problem)
            if initializer == "GPSO":
                return gpso_run(gp, budget, adam, n_g=n_g or adam.reinit_every, rng=rng)
            if initializer is None:
                return gd_run(gp, budget, adam, rng=rng)
            return ohm_gd_run(gp, budget, adam, initializer, rng=rng)

        return run

    return factory


OPTIMIZERS = {
    info.name: info
    for info in [
        OptimizerInfo("PSO", False, "particle swarm, linearly decreasing inertia", _pso),
        OptimizerInfo("ICA", False, "imperialist competitive algorithm", _ica),
        OptimizerInfo("OHMPSO", False, "organized hierarchy, cooperative (entailing org) moves", _ohm("OHMPSO")),
        OptimizerInfo("OHMICA", False, "organized hierarchy, competitive (best other org) moves", _ohm("OHMICA")),
        OptimizerInfo("OHMPSO-ST", False, "OHMPSO with self-tuned level effectiveness", _ohm("OHMPSO-ST")),
        OptimizerInfo("OHMICA-ST", False, "OHMICA with self-tuned level effectiveness", _ohm("OHMICA-ST")),
        OptimizerInfo("GD", True, "multi-start Adam with uniform restarts", _hybrid(None)),
        OptimizerInfo("GPSO", True, "Adam reseeded by PSO bursts", _hybrid("GPSO")),
        OptimizerInfo("OHMPSO-GD", True, "Adam reseeded by OHMPSO runs", _hybrid("OHMPSO")),
        OptimizerInfo("OHMICA-GD", True, "Adam reseeded by OHMICA runs", _hybrid("OHMICA")),
        OptimizerInfo("ICA-GD", True, "Adam reseeded by ICA runs", _hybrid("ICA")),
    ]
}


def make_optimizer(name: str, params: dict | None = None):
    """Build a runner from a registered name and its parameter dict."""
    key = name.upper()
    if key not in OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {name!r}; choose from {sorted(OPTIMIZERS)}")
    return OPTIMIZERS[key].factory(dict(params or {}))
