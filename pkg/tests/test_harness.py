import io
import json
import math
import statistics

import numpy as np
import pytest

from ohmopt.harness import (
    CellResult,
    ConfigError,
    ExperimentConfig,
    OptimizerSpec,
    ProblemSpec,
    RunRecord,
    collect,
    export,
    make_optimizer,
    mean_std_cell,
    rank_table,
    ranksum_pvalues,
    read_csv,
    run_experiment,
    seed_rng,
    desk_grid,
    to_csv,
    to_json,
    to_markdown,
)


def cell(errors, opt="A", problem="F1"):
    e = np.asarray(errors, dtype=float)
    return CellResult(problem, 3, 100, opt, e, np.full(e.size, 100))


def cells_from(medians_by_problem):
    out = {}
    for p, meds in medians_by_problem.items():
        for o, m in meds.items():
            out[(p, 3, 100, o)] = cell([m], o, p)
    return out


class TestRanks:
    def test_two(self):
        r = rank_table(cells_from({"F1": {"A": 1e-9, "B": 1e-2}}))
        assert r["per_problem"]["F1/d3/n100"] == {"A": 1.0, "B": 2.0}

    def test_ties(self):
        r = rank_table(cells_from({"F1": {"A": 0.5, "B": 0.5}}))
        assert r["per_problem"]["F1/d3/n100"] == {"A": 1.5, "B": 1.5}

    def test_nan_last(self):
        r = rank_table(cells_from({"F1": {"A": float("nan"), "B": 3.0, "C": np.inf}}))
        assert r["per_problem"]["F1/d3/n100"] == {"B": 1.0, "C": 2.0, "A": 3.0}

    def test_rank_sum_identity(self):
        rng = np.random.default_rng(0)
        meds = {f"F{k}": {o: float(rng.random()) for o in "ABCD"} for k in range(1, 12)}
        r = rank_table(cells_from(meds))
        assert sum(r["mean_rank"].values()) * 11 == pytest.approx(11 * (1 + 2 + 3 + 4))
        for row in r["per_problem"].values():
            assert sum(row.values()) == pytest.approx(10.0)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            rank_table(cells_from({"F1": {"A": 1.0}}))

    def test_median_used(self):
        cells = {("F1", 3, 100, "A"): cell([0, 0, 100]), ("F1", 3, 100, "B"): cell([1, 1, 1], "B")}
        assert rank_table(cells)["per_problem"]["F1/d3/n100"]["A"] == 1.0

    def test_ranksum(self):
        cells = {("F1", 3, 100, "A"): cell(np.arange(10.0)), ("F1", 3, 100, "B"): cell(np.arange(10.0) + 100, "B")}
        p = ranksum_pvalues(cells, "A")["F1/d3/n100"]["B"]
        assert p < 1e-3


class TestExport:
    def test_mean_std(self):
        # sample standard deviation, checked against the stdlib
        assert statistics.stdev([1e-3, 3e-3]) == pytest.approx(1.41421356e-3)
        assert mean_std_cell([1e-3, 3e-3]) == "2.0E-03 ± 1.4E-03"
        assert mean_std_cell([1e-3, 2e-3, 3e-3]) == "2.0E-03 ± 1.0E-03"
        assert mean_std_cell([float("nan")]) == "N/A"
        assert mean_std_cell([2.0]) == "2.0E+00 ± 0.0E+00"

    def test_empty_csv(self):
        assert to_csv([]) == "problem,dim,nfe,optimizer,run,error,wall_ms\n"

    def test_csv_roundtrip(self):
        recs = [RunRecord("F1", 3, 100, "A", i, e) for i, e in enumerate([1e-300, 0.1 + 0.2, math.pi, float("nan")])]
        recs.append(RunRecord("F2", 3, 100, "A", 0, 2.5, wall_ms=12.25))
        back = read_csv(to_csv(recs))
        for a, b in zip(recs, back):
            assert (a.problem, a.dim, a.nfe, a.optimizer, a.run, a.wall_ms) == \
                   (b.problem, b.dim, b.nfe, b.optimizer, b.run, b.wall_ms)
            assert a.error == b.error or (math.isnan(a.error) and math.isnan(b.error))

    def test_markdown_recomputes(self):
        recs = [RunRecord("F1", 3, 100, o, i, e) for o, es in (("A", [1e-3, 3e-3]), ("B", [1.0, 1.0]))
                for i, e in enumerate(es)]
        md = to_markdown(collect(recs))
        assert "| F1 | 3 | 100 | 2.0E-03 ± 1.4E-03 | 1.0E+00 ± 0.0E+00 |" in md
        assert "mean rank" in md

    def test_json(self, tmp_path):
        recs = [RunRecord("F1", 3, 100, "A", 0, 1.0), RunRecord("F1", 3, 100, "B", 0, float("nan"), reason="boom")]
        doc = json.loads(to_json(collect(recs)))
        assert doc["cells"][1]["errors"] == [None]
        assert doc["ranks"]["mean_rank"] == {"A": 1.0, "B": 2.0}
        export(recs, tmp_path / "r.json", "json")
        assert json.loads((tmp_path / "r.json").read_text()) == doc
        with pytest.raises(ValueError):
            export(recs, tmp_path / "r.x", "xml")

    def test_read_csv_missing_column(self):
        with pytest.raises(ValueError):
            read_csv(io.StringIO("problem,dim\nF1,3\n"))


class TestExperiment:
    def small(self, **kw):
        base = dict(problems=[{"id": "F9", "dim": 2, "nfe": 400}],
                    optimizers=[{"name": "PSO"}, {"name": "OHMPSO"}], runs=2, master_seed=11)
        base.update(kw)
        return ExperimentConfig(**base)

    def test_minimal(self):
        cells, recs = run_experiment(ExperimentConfig([ProblemSpec("Sphere", 2, 300)], [OptimizerSpec("PSO")], runs=1))
        assert list(cells) == [("F2", 2, 300, "PSO")]
        assert cells[("F2", 2, 300, "PSO")].errors.shape == (1,)

    def test_deterministic_and_budget(self):
        a = to_csv(run_experiment(self.small())[1])
        b = to_csv(run_experiment(self.small())[1])
        assert a == b
        recs = run_experiment(self.small())[1]
        assert all(r.nfe_used == 400 for r in recs)

    def test_seed_isolation(self):
        recs1 = run_experiment(self.small())[1]
        recs2 = run_experiment(self.small(optimizers=[{"name": "ICA"}, {"name": "PSO"}, {"name": "OHMPSO"}]))[1]
        pick = lambda rs: [(r.optimizer, r.run, r.error) for r in rs if r.optimizer != "ICA"]
        assert sorted(pick(recs1)) == sorted(pick(recs2))

    def test_seed_rng_pure(self):
        assert seed_rng(1, "F1/d3/n10", "PSO", 0).random() == seed_rng(1, "F1/d3/n10", "PSO", 0).random()
        assert seed_rng(1, "F1/d3/n10", "PSO", 0).random() != seed_rng(1, "F1/d3/n10", "PSO", 1).random()

    def test_failure_recorded(self):
        # a swarm larger than the budget fails; the run is recorded, not raised
        cfg = ExperimentConfig([ProblemSpec("F2", 2, 10)], [OptimizerSpec("PSO"), OptimizerSpec("OHMPSO")], runs=1)
        cells, recs = run_experiment(cfg)
        assert math.isnan(recs[0].error) and "BudgetExhausted" in recs[0].reason
        assert not math.isnan(recs[1].error)

    def test_wcsp_problem(self):
        cfg = ExperimentConfig([{"id": "wcsp", "nfe": 120, "params": {"n_trials": 4, "n_channels": 4,
                                                                         "n_samples": 100}}],
                               [{"name": "GD"}, {"name": "OHMPSO-GD"}, {"name": "PSO"}], runs=1)
        cells, recs = run_experiment(cfg)
        assert all(r.dim == 8 and r.nfe_used == 120 and r.error < 0 for r in recs)

    def test_beale_dim(self):
        assert ProblemSpec("Beale", 3, 100).resolved_dim == 2
        assert ProblemSpec("F4", 10, 100).key == "F4/d2/n100"

    def test_workers_match_serial(self):
        serial = to_csv(run_experiment(self.small())[1])
        parallel = to_csv(run_experiment(self.small(workers=2))[1])
        assert serial == parallel

    def test_wall_time(self):
        recs = run_experiment(self.small(wall_time=True, runs=1))[1]
        assert all(r.wall_ms is not None and r.wall_ms > 0 for r in recs)

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            self.small(optimizers=[{"name": "SA"}])
        with pytest.raises(ConfigError):
            self.small(problems=[{"id": "F42"}])
        with pytest.raises(ConfigError):
            self.small(runs=0)
        with pytest.raises(ConfigError):
            self.small(optimizers=[{"name": "PSO", "params": {"swarm": 3}}])
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"problems": [], "optimizers": [], "bogus": 1})

    def test_params_passed(self):
        run = make_optimizer("OHMPSO", {"beta_move": 0.0, "random_update_threshold": 0.0})
        from ohmopt.benchmarks import make_benchmark
        from ohmopt.core import Budget, make_rng

        r = run(make_benchmark("Sphere", 2), Budget(300), make_rng(0))
        assert np.all(r.history[200:] == r.history[199])

    def test_from_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"problems": [{"id": "F10", "dim": 2, "nfe": 300}],
                                    "optimizers": [{"name": "PSO", "label": "pso-a"}],
                                    "runs": 1, "output": {"path": "x.csv", "format": "markdown"}}))
        cfg = ExperimentConfig.load(path)
        assert cfg.output == "x.csv" and cfg.format == "markdown" and cfg.optimizers[0].key == "pso-a"

    def test_desk_preset(self):
        cfg = desk_grid()
        assert len(cfg.problems) == 11 and cfg.runs == 20
        assert [o.name for o in cfg.optimizers] == ["PSO", "ICA", "OHMPSO", "OHMICA"]
        assert all(p.nfe == 30000 and p.resolved_dim == (2 if p.id == "F4" else 3) for p in cfg.problems)
        assert desk_grid(nfe=180000).problems[0].dim == 10
