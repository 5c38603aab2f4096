"""Command line entry point: ``ohmopt {run,list-benchmarks,list-optimizers,report}``.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

from ..benchmarks import registry_dump
from .experiment import PRESETS, ExperimentConfig, OptimizerSpec, ProblemSpec, run_experiment
from .optimizers import OPTIMIZERS, ConfigError
from .report import read_csv, render

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ohmopt", description="Organized hierarchical metaheuristics: experiments and reports")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment from a JSON config or a preset")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON experiment config")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in experiment")
    run.add_argument("--problem", action="append", default=None,
                     help="benchmark id (F7, Schwefel, 7) or 'wcsp'; repeatable")
    run.add_argument("--optimizer", action="append", default=None, help="optimizer name; repeatable")
    run.add_argument("--seed", type=int, default=None, help="master seed")
    run.add_argument("--runs", type=int, default=None, help="runs per cell")
    run.add_argument("--nfe", type=int, default=None, help="evaluation budget per run")
    run.add_argument("--dim", type=int, default=None, help="problem dimension")
    run.add_argument("--workers", type=int, default=None, help="worker processes")
    run.add_argument("--wall-time", action="store_true", help="record wall_ms (CSV no longer reproducible)")
    run.add_argument("-o", "--output", default=None, help="output file (default: stdout)")
    run.add_argument("--format", choices=("csv", "json", "markdown"), default=None)
    run.add_argument("-q", "--quiet", action="store_true")

    sub.add_parser("list-benchmarks", help="print the benchmark registry as JSON")
    sub.add_parser("list-optimizers", help="print the registered optimizers")

    rep = sub.add_parser("report", help="summarize a raw-results CSV")
    rep.add_argument("--input", required=True, help="CSV written by 'run'")
    rep.add_argument("--format", choices=("csv", "json", "markdown"), default="markdown")
    rep.add_argument("-o", "--output", default=None)
    return ap


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        try:
            cfg = ExperimentConfig.load(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if args.nfe is not None or args.dim is not None:
            cfg = ExperimentConfig(
                problems=[ProblemSpec(p.id, args.dim if args.dim is not None else p.dim,
                                      args.nfe if args.nfe is not None else p.nfe, p.params)
                          for p in cfg.problems],
                optimizers=cfg.optimizers, runs=cfg.runs, master_seed=cfg.master_seed,
                workers=cfg.workers, wall_time=cfg.wall_time, output=cfg.output, format=cfg.format,
            )
    elif args.preset:
        kw = {k: v for k, v in (("nfe", args.nfe), ("dim", args.dim)) if v is not None}
        if args.optimizer:
            kw["optimizers"] = tuple(args.optimizer)
        cfg = PRESETS[args.preset](**kw)
    else:
        if not args.problem or not args.optimizer:
            raise ConfigError("give --config, --preset, or both --problem and --optimizer")
        cfg = ExperimentConfig(
            problems=[ProblemSpec(p, args.dim or 3, args.nfe or 30000) for p in args.problem],
            optimizers=[OptimizerSpec(o) for o in args.optimizer],
        )
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.runs is not None:
        if args.runs < 1:
            raise ConfigError("--runs must be positive")
        cfg.runs = args.runs
    if args.workers is not None:
        cfg.workers = args.workers
    if args.wall_time:
        cfg.wall_time = True
    if args.output is not None:
        cfg.output = args.output
    if args.format is not None:
        cfg.format = args.format
    return cfg


def _write(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_run(args) -> int:
    cfg = _config_from_args(args)

    def progress(rec):
        if not args.quiet:
            print(f"{rec.problem} d={rec.dim} {rec.optimizer} run {rec.run}: error {rec.error:.3e}"
                  + (f" ({rec.reason})" if rec.reason else ""), file=sys.stderr)

    _, records = run_experiment(cfg, progress)
    _write(render(records, cfg.format), cfg.output)
    return EXIT_OK


def cmd_list_benchmarks(args) -> int:
    print(json.dumps(registry_dump(), indent=2))
    return EXIT_OK


def cmd_list_optimizers(args) -> int:
    for info in OPTIMIZERS.values():
        print(f"{info.name:<10} {'gradient' if info.needs_gradient else 'black-box':<9}  {info.description}")
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.input, newline="") as fh:
        try:
            records = read_csv(fh)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{args.input}: malformed results CSV ({exc})") from exc
    _write(render(records, args.format), args.output)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "list-benchmarks": cmd_list_benchmarks,
            "list-optimizers": cmd_list_optimizers, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"ohmopt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ohmopt: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
