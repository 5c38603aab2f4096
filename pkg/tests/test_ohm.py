import io
import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ohmopt.benchmarks import make_benchmark
from ohmopt.core import BestTracker, Budget, BudgetExhausted, Problem, make_rng
from ohmopt.ohm import (
    CenterMetric,
    HierarchyConfig,
    JsonlTrace,
    OrgSelector,
    SolutionSelector,
    Variant,
    SelectorConfig,
    check_invariants,
    fitness,
    get_variant,
    init_hierarchy,
    move_solution,
    ohm_iteration,
    ohm_run,
    organization_center,
    roulette,
    select_level,
    select_organization,
    select_solution,
    update_effectiveness,
)
from ohmopt.ohm.run import population_cap


def line_problem(lo=-20.0, hi=20.0):
    return Problem(1, [lo], [hi], lambda x: float(x[0] ** 2))


def small_state(children, positions=None, problem=None, metric=CenterMetric.WeightedMeanOfSolutions):
    cfg = HierarchyConfig(children_per_level=children, initial_effectiveness=(1.0,) * len(children))
    problem = problem or line_problem()
    state, _, _ = init_hierarchy(problem, Budget(cfg.population), cfg, make_rng(0), metric, positions)
    return state


class TestInit:
    def test_default_shape(self):
        p = make_benchmark("Rastrigin", 3)
        b = Budget(1000)
        state, X, c = init_hierarchy(p, b, HierarchyConfig(), make_rng(1))
        assert [state.orgs_at(l) for l in range(4)] == [1, 2, 8, 40]
        assert state.n_alive == 200 and X.shape == (200, 3) and b.nfe_used == 200
        assert check_invariants(state) == []

    def test_regions_nested_and_cover(self):
        p = make_benchmark("Rastrigin", 3)
        state, _, _ = init_hierarchy(p, Budget(200), HierarchyConfig(), make_rng(1))
        for level in range(1, 4):
            for j in range(state.orgs_at(level)):
                g = state.org_index(level, j)
                parent = state.org_index(level - 1, j // state.fan[level - 1])
                assert np.all(state.org_lo[g] >= state.org_lo[parent] - 1e-12)
                assert np.all(state.org_hi[g] <= state.org_hi[parent] + 1e-12)
            vols = [np.prod(state.org_hi[state.org_index(level, j)] - state.org_lo[state.org_index(level, j)])
                    for j in range(state.orgs_at(level))]
            assert sum(vols) == pytest.approx(np.prod(p.width))

    def test_flat(self):
        state = small_state((7,))
        assert state.level_count == 1 and state.n_alive == 7 and state.orgs_at(0) == 1

    def test_budget(self):
        p = make_benchmark("Sphere", 2)
        with pytest.raises(BudgetExhausted):
            init_hierarchy(p, Budget(199), HierarchyConfig(), make_rng(0))
        state, X, _ = init_hierarchy(p, Budget(30), HierarchyConfig(), make_rng(0), partial=True)
        assert state.n_alive == 30 and check_invariants(state) == []

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HierarchyConfig(initial_effectiveness=(1, 2))
        with pytest.raises(ValueError):
            HierarchyConfig(initial_effectiveness=(0, 1, 1, 1))
        with pytest.raises(ValueError):
            HierarchyConfig(replacement="swap")
        assert HierarchyConfig().population == 200


class TestSelection:
    def test_fitness_ties_uniform(self):
        w = fitness([2.0, 2.0, 2.0])
        np.testing.assert_allclose(w / w.sum(), 1 / 3)

    def test_fitness_extreme(self):
        w = fitness([0.0, 10.0])
        assert w[0] / w.sum() > 1 - 1e-12

    def test_fitness_inf(self):
        w = fitness([1.0, np.inf, 3.0])
        assert w[1] == 0.0 and w[0] > w[2] > 0
        np.testing.assert_array_equal(fitness([np.inf, np.inf]), [1.0, 1.0])

    def test_roulette_edges(self):
        assert roulette([1.0, 1.0], 0.0) == 0
        assert roulette([1.0, 1.0], 0.5) == 1
        assert roulette([0.0, 1.0, 0.0], 0.999) == 1

    @pytest.mark.parametrize("sel", list(SolutionSelector))
    def test_select_solution_equal_costs(self, sel):
        state = small_state((1, 4))
        state.cost[:4] = 1.0
        rng = make_rng(3)
        picks = np.bincount([select_solution(state, sel, rng) for _ in range(20000)], minlength=4)
        np.testing.assert_allclose(picks / 20000, 0.25, atol=0.02)

    def test_select_level_defaults(self):
        p = make_benchmark("Sphere", 2)
        state, _, _ = init_hierarchy(p, Budget(200), HierarchyConfig(), make_rng(0))
        rng = make_rng(4)
        freq = np.bincount([select_level(state, rng) for _ in range(50000)], minlength=4) / 50000
        np.testing.assert_allclose(freq, [0.05, 0.15, 0.30, 0.50], atol=0.01)

    def test_select_level_single(self):
        state = small_state((3,))
        assert all(select_level(state, u=u) == 0 for u in (0.0, 0.5, 0.999))

    def test_entailing(self):
        p = make_benchmark("Sphere", 2)
        state, _, _ = init_hierarchy(p, Budget(200), HierarchyConfig(), make_rng(0))
        rng = make_rng(1)
        for src in rng.integers(0, 200, 20):
            for level in range(4):
                j, fb = select_organization(state, level, src, OrgSelector.EntailingOrg, rng)
                assert j == state.tag[src, level] and not fb

    def test_excluding_single_alternative(self):
        state = small_state((2, 1), positions=[[-10.0], [10.0]])
        for costs in ([0.0, 5.0], [5.0, 0.0]):
            state.cost[:2] = costs
            j, fb = select_organization(state, 1, 0, OrgSelector.MinCostExcludingOrg, make_rng(0))
            assert j == 1 and not fb

    def test_excluding_fallback(self):
        state = small_state((2, 1), positions=[[-10.0], [10.0]])
        j, fb = select_organization(state, 0, 0, OrgSelector.MinCostExcludingOrg, make_rng(0))
        assert j == 0 and fb

    def test_min_cost_solution(self):
        state = small_state((3, 1), positions=[[-15.0], [0.0], [15.0]])
        state.cost[:3] = [5.0, 1.0, 3.0]
        j, _ = select_organization(state, 1, 0, OrgSelector.MinCostSolution, make_rng(0))
        assert j == 1

    def test_mean_of_sub_org_costs(self):
        state = small_state((2, 2), positions=[[-15.0], [-10.0], [10.0], [15.0]])
        state.cost[:4] = [0.0, 10.0, 4.0, 4.0]  # bests favour org 0, means favour org 1
        assert select_organization(state, 1, 0, OrgSelector.MeanOfSubOrgCosts, make_rng(0))[0] == 1
        assert select_organization(state, 1, 0, OrgSelector.MinCostSolution, make_rng(0))[0] == 0

    def test_coin_selector(self):
        state = small_state((2, 1), positions=[[-10.0], [10.0]])
        sel = OrgSelector.EntailingOrgExcludingOrg
        assert select_organization(state, 1, 0, sel, coin_probability=1.0, u_pick=0.3, u_coin=0.2)[0] == 0
        assert select_organization(state, 1, 0, sel, coin_probability=0.0, u_pick=0.3, u_coin=0.2)[0] == 1


class TestCenters:
    def test_singleton(self):
        state = small_state((1, 1), positions=[[3.0]])
        for m in list(CenterMetric)[:4]:
            np.testing.assert_allclose(organization_center(state, 1, 0, m), [3.0])

    def test_symmetric_weights(self):
        state = small_state((1, 2), positions=[[0.0], [10.0]])
        state.cost[:2] = 7.0
        np.testing.assert_allclose(organization_center(state, 1, 0, CenterMetric.WeightedMeanOfSolutions), [5.0])

    def test_weighted_limit(self):
        state = small_state((1, 2), positions=[[0.0], [10.0]])
        state.cost[:2] = [0.0, 10.0]
        c = organization_center(state, 1, 0, CenterMetric.WeightedMeanOfSolutions)
        assert abs(c[0]) < 1e-9

    def test_min_cost_and_region(self):
        state = small_state((1, 2), positions=[[0.0], [10.0]])
        state.cost[:2] = [3.0, 1.0]
        np.testing.assert_allclose(organization_center(state, 1, 0, CenterMetric.MinCostSolution), [10.0])
        np.testing.assert_allclose(organization_center(state, 0, 0, CenterMetric.RegionCenter), [0.0])

    def test_sub_org_metrics(self):
        state = small_state((2, 1), positions=[[-10.0], [10.0]])
        state.cost[:2] = [0.0, 10.0]
        np.testing.assert_allclose(organization_center(state, 0, 0, CenterMetric.MeanCostSubOrganization), [0.0])
        c = organization_center(state, 0, 0, CenterMetric.WeightedMeanOfSubOrganizations)
        assert c[0] == pytest.approx(-10.0, abs=1e-9)

    def test_empty_org(self):
        state = small_state((2, 1), positions=[[-10.0], [10.0]])
        state.alive[1] = False
        state.org_alive[state.org_index(1, 1)] = False
        assert organization_center(state, 1, 1, CenterMetric.WeightedMeanOfSolutions) is None


class TestMove:
    def test_cases(self):
        lo, hi = np.array([-20.0]), np.array([20.0])
        np.testing.assert_array_equal(move_solution([3.0], [3.0], 2.0, lo, hi, make_rng(0)), [3.0])
        np.testing.assert_allclose(move_solution([0.0], [10.0], 1.0, lo, hi, u=0.5), [5.0])
        np.testing.assert_array_equal(move_solution([1.0], [10.0], 0.0, lo, hi, make_rng(0)), [1.0])
        np.testing.assert_allclose(move_solution([0.0], [15.0], 2.5, lo, hi, u=0.9), [20.0])

    def test_zero_beta_run_is_constant(self):
        p = make_benchmark("Rastrigin", 3)
        cfg = HierarchyConfig(beta_move=0.0, random_update_threshold=0.0)
        r = ohm_run(p, Budget(600), "OHMPSO", cfg, make_rng(2))
        assert np.all(r.history[200:] == r.history[199])


class TestEffectiveness:
    def test_decay(self):
        cfg = HierarchyConfig()
        eff = np.array(cfg.initial_effectiveness)
        for _ in range(500):
            for lv in range(4):
                update_effectiveness(eff, lv, False, cfg)
        np.testing.assert_allclose(eff, 1.0, atol=1e-6)

    def test_improving_level_dominates(self):
        cfg = HierarchyConfig()
        eff = np.array(cfg.initial_effectiveness)
        for _ in range(300):
            update_effectiveness(eff, 3, True, cfg)
            for lv in range(3):
                update_effectiveness(eff, lv, False, cfg)
        assert eff[3] == pytest.approx(100.0, rel=1e-6)
        assert eff[3] / eff.sum() > 0.9

    def test_frozen(self):
        cfg = HierarchyConfig(tune_rate=0.0)
        eff = np.array(cfg.initial_effectiveness)
        update_effectiveness(eff, 2, True, cfg)
        np.testing.assert_array_equal(eff, cfg.initial_effectiveness)

    def test_positive(self):
        cfg = HierarchyConfig(reward_idle=0.0, tune_rate=1.0)
        eff = np.array(cfg.initial_effectiveness)
        update_effectiveness(eff, 1, False, cfg)
        assert eff[1] > 0


def _run_steps(problem, cfg, variant, seed, steps):
    budget = Budget(cfg.population + steps)
    rng = make_rng(seed)
    state, X, c = init_hierarchy(problem, budget, cfg, rng, variant.selectors.center_metric)
    tracker = BestTracker(budget.nfe_max, problem.dim)
    tracker.observe_many(X, c)
    return state, budget, tracker, rng


class TestIteration:
    @pytest.mark.parametrize("thr,expected", [(1.0, True), (0.0, False)])
    def test_threshold_saturation(self, thr, expected):
        p = make_benchmark("Rastrigin", 3)
        cfg = HierarchyConfig(random_update_threshold=thr)
        v = get_variant("OHMPSO")
        state, budget, tracker, rng = _run_steps(p, cfg, v, 0, 300)
        for _ in range(300):
            ev = ohm_iteration(state, p, budget, v, cfg, rng.random(6 + 2 * 3), tracker)
            assert ev["random"] is expected

    @pytest.mark.parametrize("replacement", ["move", "greedy", "offspring"])
    def test_invariants_each_mode(self, replacement):
        p = make_benchmark("Ackley", 2)
        cfg = HierarchyConfig(replacement=replacement)
        for name in ("OHMPSO", "OHMICA"):
            r = ohm_run(p, Budget(1500), name, cfg, make_rng(1))
            assert check_invariants(r.info["state"], 1e-12) == []
            assert r.info["state"].n_alive == population_cap(cfg, 200, 1.0) == 20

    def test_checker_detects_corruption(self):
        p = make_benchmark("Sphere", 2)
        fresh = lambda: init_hierarchy(p, Budget(200), HierarchyConfig(), make_rng(0))[0]
        state = fresh()
        assert check_invariants(state) == []
        state.tag[0, 3] = (state.tag[0, 3] + 1) % 40
        msgs = check_invariants(state)
        assert any("inconsistent tags" in m for m in msgs) or any("outside" in m for m in msgs)
        state = fresh()
        state.pos[5] = p.upper + 1.0
        assert any("solution 5 outside" in m for m in check_invariants(state))
        state = fresh()
        state.org_alive[state.org_index(2, state.tag[7, 2])] = False
        msgs = check_invariants(state)
        assert any("dead org" in m for m in msgs)
        state = fresh()
        state.alive[state.members(3, 0)] = False
        state.n_alive = int(state.alive.sum())
        assert "live org (3, 0) is empty" in check_invariants(state)

    def test_population_cap(self):
        cfg = HierarchyConfig()
        assert population_cap(cfg, 200, 0.0) == 200
        assert population_cap(cfg, 200, 0.5) == 110
        assert population_cap(cfg, 200, 1.0) == 20
        assert population_cap(HierarchyConfig(final_population=None), 200, 0.7) == 200

    @settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(
        children=st.sampled_from([(2, 4, 5, 5), (3, 3), (2, 2, 3), (6,), (1, 2, 4)]),
        org_sel=st.sampled_from(list(OrgSelector)),
        sol_sel=st.sampled_from(list(SolutionSelector)),
        metric=st.sampled_from(list(CenterMetric)),
        replacement=st.sampled_from(["move", "greedy", "offspring"]),
        thr=st.floats(0, 1),
        beta=st.floats(0, 3),
        final=st.one_of(st.none(), st.integers(1, 30)),
        tuning=st.booleans(),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_property_invariants(self, children, org_sel, sol_sel, metric, replacement, thr, beta, final,
                                 tuning, seed):
        p = make_benchmark("Rastrigin", 3)
        cfg = HierarchyConfig(children_per_level=children, initial_effectiveness=tuple(range(1, len(children) + 1)),
                              random_update_threshold=thr, beta_move=beta, final_population=final,
                              replacement=replacement, self_tuning=tuning)
        v = Variant("custom", SelectorConfig(sol_sel, org_sel, metric))
        trace = []
        r = ohm_run(p, Budget(cfg.population + 150), v, cfg, make_rng(seed), trace=trace.append)
        state = r.info["state"]
        assert check_invariants(state, 1e-9) == []
        assert np.all(np.diff(r.history) <= 0)
        assert np.all(state.eff > 0)
        assert r.nfe_used == cfg.population + 150
        best = [e["best"] for e in trace]
        assert best == sorted(best, reverse=True)


class TestRun:
    def test_accounting_and_determinism(self):
        p = make_benchmark("Griewank", 3)
        a = ohm_run(p, Budget(2345), "OHMICA", rng=make_rng(9))
        b = ohm_run(p, Budget(2345), "OHMICA", rng=make_rng(9))
        assert a.nfe_used == 2345 and a.history.size == 2345
        np.testing.assert_array_equal(a.history, b.history)
        assert np.all(np.diff(a.history) <= 0)
        assert a.best_cost == pytest.approx(p.cost(a.best_x))

    def test_zero_budget_after_init(self):
        p = make_benchmark("Rastrigin", 3)
        r = ohm_run(p, Budget(200), "OHMPSO", rng=make_rng(3))
        state, X, c = init_hierarchy(p, Budget(200), HierarchyConfig(), make_rng(3))
        assert r.best_cost == c.min() and r.info["iterations"] == 0

    def test_small_budget(self):
        r = ohm_run(make_benchmark("Sphere", 2), Budget(50), "OHMPSO", rng=make_rng(0))
        assert r.nfe_used == 50

    def test_variants(self):
        assert get_variant("ohmpso").selectors.org_selector == OrgSelector.EntailingOrg
        assert get_variant("OHMICA").selectors.org_selector == OrgSelector.MinCostExcludingOrg
        assert get_variant("OHMPSO-ST").self_tuning
        assert get_variant("OHMICA-ST").selectors.org_selector == OrgSelector.MinCostExcludingOrgRWS
        assert get_variant("OHMPSO-ST", table_literal=True).selectors.org_selector == OrgSelector.MinCostExcludingOrg
        with pytest.raises(KeyError):
            get_variant("OHMX")

    def test_variant_separation(self):
        p = make_benchmark("Rastrigin", 3)
        ta, tb = [], []
        ohm_run(p, Budget(400), "OHMPSO", rng=make_rng(11), trace=ta.append)
        ohm_run(p, Budget(400), "OHMICA", rng=make_rng(11), trace=tb.append)
        # identical draws: the runs agree until the ICA selector picks a different org
        k = next(i for i, (a, b) in enumerate(zip(ta, tb)) if a != b)
        assert ta[k]["src"] == tb[k]["src"] and ta[k]["level"] == tb[k]["level"]
        assert ta[k]["org"] != tb[k]["org"]

    def test_self_tuning_moves_effectiveness(self):
        p = make_benchmark("Sphere", 3)
        r = ohm_run(p, Budget(3000), "OHMPSO-ST", rng=make_rng(0))
        assert r.info["effectiveness"] != [5.0, 15.0, 30.0, 50.0]
        r = ohm_run(p, Budget(3000), "OHMPSO", rng=make_rng(0))
        assert r.info["effectiveness"] == [5.0, 15.0, 30.0, 50.0]

    def test_jsonl_trace(self):
        buf = io.StringIO()
        ohm_run(make_benchmark("Sphere", 2), Budget(230), "OHMPSO", rng=make_rng(0), trace=JsonlTrace(buf))
        rows = [json.loads(line) for line in buf.getvalue().splitlines()]
        assert len(rows) == 30
        assert {"iter", "level", "org", "distance", "best"} <= set(rows[0])

    def test_sphere_median(self):
        p = make_benchmark("Sphere", 3)
        errs = [ohm_run(p, Budget(30000), "OHMPSO", rng=make_rng(k)).best_cost for k in range(20)]
        assert np.median(errs) < 1e-2
