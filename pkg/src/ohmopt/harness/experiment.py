"""Seeded optimizer x problem experiments.

Every run draws its generator from ``(master_seed, crc32(problem key),
crc32(optimizer label), run)``, so a cell's seeds do not depend on which
other cells are in the experiment.
"""
from __future__ import annotations

import json
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..benchmarks import lookup, make_benchmark, resolve_dim
from ..core import Budget, make_rng
from .optimizers import OPTIMIZERS, ConfigError, make_optimizer

# desk-scale budget pairing: (nfe, dim)
NFE_DIM = {30000: 3, 180000: 10, 500000: 30}


@dataclass(frozen=True)
class ProblemSpec:
    id: str  # "F7", "Schwefel", "7" or "wcsp"
    dim: int = 3
    nfe: int = 30000
    params: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def is_wcsp(self) -> bool:
        return self.id.lower() == "wcsp"

    @property
    def label(self) -> str:
        """Canonical problem id: ``"F7"`` or ``"wcsp"``."""
        return "wcsp" if self.is_wcsp else f"F{lookup(self.id).index}"

    @property
    def resolved_dim(self) -> int:
        if self.is_wcsp:
            from ..wcsp import DEFAULT_INSTANCE

            return 2 * int(self.params.get("n_trials", DEFAULT_INSTANCE["n_trials"]))
        return resolve_dim(self.id, self.dim)

    @property
    def key(self) -> str:
        return f"{self.label}/d{self.resolved_dim}/n{self.nfe}"


@dataclass(frozen=True)
class OptimizerSpec:
    name: str
    params: dict = field(default_factory=dict, compare=False, hash=False)
    label: Optional[str] = None

    @property
    def key(self) -> str:
        return self.label or self.name.upper()


@dataclass
class ExperimentConfig:
    problems: list
    optimizers: list
    runs: int = 20
    master_seed: int = 0
    workers: int = 1
    wall_time: bool = False  # record wall-clock ms (makes the CSV non-reproducible)
    output: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        self.problems = [p if isinstance(p, ProblemSpec) else ProblemSpec(**p) for p in self.problems]
        self.optimizers = [o if isinstance(o, OptimizerSpec) else OptimizerSpec(**o) for o in self.optimizers]
        if self.runs < 1:
            raise ConfigError("runs must be positive")
        if not self.problems or not self.optimizers:
            raise ConfigError("need at least one problem and one optimizer")
        for p in self.problems:
            if p.nfe < 1:
                raise ConfigError(f"{p.id}: nfe must be positive")
            if not p.is_wcsp:
                try:
                    lookup(p.id)
                except KeyError:
                    raise ConfigError(f"unknown problem {p.id!r}") from None
        for o in self.optimizers:
            if o.name.upper() not in OPTIMIZERS:
                raise ConfigError(f"unknown optimizer {o.name!r}; choose from {sorted(OPTIMIZERS)}")
            make_optimizer(o.name, o.params)  # validates parameters early
        keys = [o.key for o in self.optimizers]
        if len(set(keys)) != len(keys):
            raise ConfigError("optimizer labels must be unique")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        out = d.pop("output", None)
        if isinstance(out, dict):
            d.setdefault("format", out.get("format", "csv"))
            out = out.get("path")
        try:
            return cls(output=out, **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(d)


@dataclass
class RunRecord:
    problem: str
    dim: int
    nfe: int
    optimizer: str
    run: int
    error: float
    wall_ms: Optional[float] = None
    nfe_used: int = 0
    best_cost: float = float("nan")
    reason: str = ""


@dataclass
class CellResult:
    problem: str
    dim: int
    nfe: int
    optimizer: str
    errors: np.ndarray
    nfe_used: np.ndarray
    wall_ms: Optional[np.ndarray] = None
    reasons: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def std(self) -> float:
        return float(np.std(self.errors, ddof=1)) if self.errors.size > 1 else 0.0

    @property
    def median(self) -> float:
        return float(np.median(self.errors))


def seed_rng(master_seed: int, problem_key: str, optimizer_key: str, run: int) -> np.random.Generator:
    return make_rng(master_seed, zlib.crc32(problem_key.encode()), zlib.crc32(optimizer_key.encode()), run)


_WCSP_CACHE: dict = {}


def build_problem(spec: ProblemSpec):
    """Return ``(problem, grad_problem_or_None)`` for a problem spec."""
    if spec.is_wcsp:
        from ..wcsp import DEFAULT_INSTANCE, synth_trials, wcsp_problem

        inst = {**DEFAULT_INSTANCE, **{k: v for k, v in spec.params.items() if k != "class"}}
        key = json.dumps(inst, sort_keys=True)
        if key not in _WCSP_CACHE:
            _WCSP_CACHE[key] = synth_trials(**inst)
        gp = wcsp_problem(_WCSP_CACHE[key], int(spec.params.get("class", 1)))
        return gp.problem, gp
    return make_benchmark(spec.id, spec.resolved_dim, spec.params.get("seed")), None


def run_single(pspec: ProblemSpec, ospec: OptimizerSpec, run: int, master_seed: int,
               wall_time: bool = False) -> RunRecord:
    """One seeded run; failures become a NaN error with a reason."""
    rec = RunRecord(pspec.label, pspec.resolved_dim, pspec.nfe, ospec.key, run, float("nan"))
    t0 = time.perf_counter()
    try:
        problem, gp = build_problem(pspec)
        runner = make_optimizer(ospec.name, ospec.params)
        if OPTIMIZERS[ospec.name.upper()].needs_gradient and gp is None:
            from ..hybrid import GradProblem

            gp = GradProblem(problem)
        budget = Budget(pspec.nfe)
        res = runner(problem, budget, seed_rng(master_seed, pspec.key, ospec.key, run), gp)
        rec.nfe_used = int(res.nfe_used)
        rec.best_cost = float(res.best_cost)
        rec.error = problem.error(res.best_cost)
        if not np.isfinite(rec.error):
            rec.error = float("nan")
            rec.reason = "non-finite best cost"
    except Exception as exc:  # recorded, never fatal
        rec.reason = f"{type(exc).__name__}: {exc}"
    if wall_time:
        rec.wall_ms = 1e3 * (time.perf_counter() - t0)
    return rec


def _task(args):
    return run_single(*args)


def run_records(cfg: ExperimentConfig, progress=None) -> list:
    """All run records in (problem, optimizer, run) order."""
    tasks = [(p, o, r, cfg.master_seed, cfg.wall_time)
             for p in cfg.problems for o in cfg.optimizers for r in range(cfg.runs)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(_task, tasks, chunksize=1))
    else:
        records = []
        for t in tasks:
            records.append(_task(t))
            if progress is not None:
                progress(records[-1])
    return records


def collect(records) -> dict:
    """Group run records into ``{(problem, dim, nfe, optimizer): CellResult}`` (insertion ordered)."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.problem, r.dim, r.nfe, r.optimizer), []).append(r)
    cells = {}
    for (p, d, n, o), rs in groups.items():
        rs = sorted(rs, key=lambda r: r.run)
        walls = [r.wall_ms for r in rs]
        cells[(p, d, n, o)] = CellResult(
            p, d, n, o,
            errors=np.array([r.error for r in rs], dtype=np.float64),
            nfe_used=np.array([r.nfe_used for r in rs], dtype=np.int64),
            wall_ms=None if any(w is None for w in walls) else np.array(walls),
            reasons=[r.reason for r in rs],
        )
    return cells


def run_experiment(cfg: ExperimentConfig, progress=None):
    """Run every cell; returns ``(cells, records)``."""
    records = run_records(cfg, progress)
    return collect(records), records


def desk_grid(runs: int = 20, master_seed: int = 0, nfe: int = 30000, dim: Optional[int] = None,
              optimizers=("PSO", "ICA", "OHMPSO", "OHMICA")) -> ExperimentConfig:
    """The single-mode comparison over F1-F11 at desk scale (dim 3, 30000 NFE)."""
    dim = dim if dim is not None else NFE_DIM.get(nfe, 3)
    return ExperimentConfig(
        problems=[ProblemSpec(f"F{k}", dim, nfe) for k in range(1, 12)],
        optimizers=[OptimizerSpec(o) for o in optimizers],
        runs=runs, master_seed=master_seed,
    )


PRESETS = {"table9-desk": desk_grid}
