import math

import numpy as np
import pytest

from fdcell.geometry import ScenarioConfig, generate_scenario
from fdcell.link import EMPTY, PowerAllocation, Selection, link_matrix, sinr_triple
from fdcell.optimizer import (
    BoxBounds,
    OptimizerConfig,
    SinrFloors,
    class_frontier,
    grid_search_maximize,
    min_power_for_targets,
    pattern_search_maximize,
)
from fdcell.scheduler import optimize_selection, selection_objective
from fdcell.utility import RateState

from oracles import grid_loop, lp_best_utility


def random_state(rng, sc):
    n, m = sc.num_cues, sc.num_d2d
    return RateState(10 ** rng.uniform(4, 7.5, n), 10 ** rng.uniform(4, 7.5, n), 10 ** rng.uniform(4, 7.5, m),
                     np.ones(n), np.ones(n), np.ones(m))


def instances(count, seed=0, cues=2, d2d=1):
    rng = np.random.default_rng(seed)
    for k in range(count):
        sc = generate_scenario(ScenarioConfig(num_cues=cues, num_d2d_links=d2d), seed=1000 + k + 7919 * seed)
        yield sc, random_state(rng, sc), rng


UNIT = BoxBounds(np.zeros(3), np.ones(3), np.ones(3, bool))


def test_quadratic_interior_optimum():
    c = np.array([0.31, 0.77, 0.52])
    cfg = OptimizerConfig()
    res = pattern_search_maximize(lambda p: -np.sum((p - c) ** 2), UNIT, cfg=cfg)
    assert res.feasible
    assert np.all(np.abs(np.array(res.best_power) - c) <= cfg.mesh_tolerance * 1.0)


def test_inactive_dimensions_stay_zero():
    b = BoxBounds(np.zeros(3), np.ones(3), [True, False, True])
    res = pattern_search_maximize(lambda p: p.sum(), b)
    assert res.best_power.p_ul == 0.0
    assert res.best_power.p_dl == 1.0 and res.best_power.p_d2d == 1.0


def test_unsatisfiable_floors(small_scenario):
    sel = Selection(0, 1, 0)
    _, sinr_fn = selection_objective(small_scenario, sel, RateState.initial(2, 1), None or __import__("fdcell").default_cqi_table())
    floors = SinrFloors(1e12, 1e12, 1e12)
    b = BoxBounds.for_selection(small_scenario.p_max, sel.active)
    assert not pattern_search_maximize(lambda p: 0.0, b, floors, sinr_fn=sinr_fn).feasible
    res = grid_search_maximize(lambda p: 0.0, b, floors, 5, sinr_fn=sinr_fn)
    assert not res.feasible and res.best_utility == -math.inf


def test_grid_monotone_takes_upper_corner():
    res = grid_search_maximize(lambda p: p.sum(), BoxBounds(np.zeros(3), [1, 2, 3], np.ones(3, bool)), levels_per_dim=2)
    assert tuple(res.best_power) == (1.0, 2.0, 3.0)
    with pytest.raises(ValueError):
        grid_search_maximize(lambda p: 0.0, UNIT, levels_per_dim=1)


def test_grid_tie_break_lexicographic():
    res = grid_search_maximize(lambda p: 1.0, UNIT, levels_per_dim=3)
    assert tuple(res.best_power) == (0.0, 0.0, 0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(mesh_contraction=1.5)
    with pytest.raises(ValueError):
        OptimizerConfig(method="newton")
    with pytest.raises(ValueError):
        BoxBounds(np.ones(3), np.zeros(3), np.ones(3, bool))


def test_min_power_meets_targets_exactly(hand_scenario, scenario):
    lm = link_matrix(hand_scenario, Selection(0, 1, 0))
    targets = np.array([[3.0, 0.5, 10.0], [0.2, 0.2, 0.2]])
    p = min_power_for_targets(lm, targets)
    np.testing.assert_allclose(lm.sinr(p), targets, rtol=1e-9)
    # unreachable without a power cap
    assert np.all(np.isnan(min_power_for_targets(lm, [[1e9, 1e9, 1e9]])))
    # DL CUE 1 and UL CUE 4 sit close together in this drop: even modest targets are out of reach
    assert np.all(np.isnan(min_power_for_targets(link_matrix(scenario, Selection(1, 4, 2)), [[0.2, 0.2, 0.2]])))


def test_frontier_points_are_feasible_and_maximal(scenario, table):
    floors = SinrFloors.from_table(table)
    for sel in (Selection(0, 3, 1), Selection(2, EMPTY, 4), Selection(EMPTY, 5, EMPTY)):
        fr = class_frontier(link_matrix(scenario, sel), scenario.p_max, table, floors)
        assert len(fr) > 0
        for c, p in zip(fr.classes, fr.powers):
            s = sinr_triple(scenario, sel, PowerAllocation(*p))
            assert np.all(p <= scenario.p_max) and np.all(p >= 0)
            for i in range(3):
                if sel.active[i]:
                    assert s[i] >= floors.as_array()[i]
                    assert int(table.cqi_class(s[i])) == c[i]
                else:
                    assert p[i] == 0 and c[i] == 0
        # no frontier point dominates another
        for a in fr.classes:
            dominated = np.all(fr.classes >= a, axis=1) & np.any(fr.classes > a, axis=1)
            assert not dominated.any()


def test_grid_matches_independent_loop(table):
    floor = table.thresholds_linear[0]
    for sc, st, _ in instances(4, seed=5):
        for sel in (Selection(0, 1, 0), Selection(1, EMPTY, 0)):
            obj, sinr_fn = selection_objective(sc, sel, st, table)
            b = BoxBounds.for_selection(sc.p_max, sel.active)
            res = grid_search_maximize(obj, b, SinrFloors.from_table(table), 6, sinr_fn, vectorized=True)
            ref, ref_p = grid_loop(sc, sel, st, table, 6, floor)
            if ref_p is None:
                assert not res.feasible
                continue
            assert res.best_utility == pytest.approx(ref, rel=1e-12)
            np.testing.assert_allclose(res.best_power, ref_p, rtol=1e-12)


def test_grid_refinement_not_worse(table):
    floors = SinrFloors.from_table(table)
    for sc, st, _ in instances(10, seed=6):
        sel = Selection(0, 1, 0)
        obj, sinr_fn = selection_objective(sc, sel, st, table)
        b = BoxBounds.for_selection(sc.p_max, sel.active)
        coarse = grid_search_maximize(obj, b, floors, 11, sinr_fn, vectorized=True)
        fine = grid_search_maximize(obj, b, floors, 21, sinr_fn, vectorized=True)
        assert fine.best_utility >= coarse.best_utility


def _grid_seeds(sc, sel, levels=11):
    axes = [np.linspace(0, pm, levels) if a else [0.0] for pm, a in zip(sc.p_max, sel.active)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)


def test_pattern_search_beats_seeded_grid_and_frontier_beats_both(table):
    floors = SinrFloors.from_table(table)
    pattern = OptimizerConfig(method="pattern")
    exact = OptimizerConfig()
    for sc, st, _ in instances(15, seed=7):
        for sel in (Selection(0, 1, 0), Selection(1, 0, EMPTY), Selection(EMPTY, 0, 0)):
            obj, sinr_fn = selection_objective(sc, sel, st, table)
            b = BoxBounds.for_selection(sc.p_max, sel.active)
            grid = grid_search_maximize(obj, b, floors, 11, sinr_fn, vectorized=True)
            ps = optimize_selection(sc, sel, st, pattern, table, seeds=_grid_seeds(sc, sel))
            fr = optimize_selection(sc, sel, st, exact, table)
            assert ps.best_utility >= grid.best_utility
            assert fr.best_utility >= ps.best_utility - 1e-12
            if ps.feasible:
                p = np.array(ps.best_power)
                assert b.contains(p)
                s = sinr_fn(p)
                assert np.all((s >= floors.as_array()) | ~b.active)


def test_frontier_matches_lp_oracle(table):
    for sc, st, _ in instances(3, seed=8):
        for sel in (Selection(0, 1, 0), Selection(EMPTY, 1, 0)):
            fr = optimize_selection(sc, sel, st, OptimizerConfig(), table)
            ref = lp_best_utility(sc, sel, st, table)
            assert fr.best_utility == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_pattern_search_is_deterministic(table):
    sc, st, _ = next(instances(1, seed=9))
    cfg = OptimizerConfig(method="pattern")
    a = optimize_selection(sc, Selection(0, 1, 0), st, cfg, table)
    b = optimize_selection(sc, Selection(0, 1, 0), st, cfg, table)
    assert a == b


def test_full_power_seed_dominates_fpa_without_floors(table):
    no_floor = SinrFloors(0.0, 0.0, 0.0)
    for sc, st, _ in instances(10, seed=10):
        for sel in (Selection(0, 1, 0), Selection(1, EMPTY, 0)):
            obj, sinr_fn = selection_objective(sc, sel, st, table)
            fpa = obj(np.where(sel.active, sc.p_max, 0.0))
            for method in ("pattern", "frontier"):
                res = optimize_selection(sc, sel, st, OptimizerConfig(method=method, floors=no_floor), table)
                assert res.best_utility >= fpa - 1e-12
