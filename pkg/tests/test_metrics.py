import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdcell.link import EMPTY
from fdcell.metrics import (
    ExperimentConfig,
    ExperimentRunner,
    MetricsReport,
    aggregate_throughput,
    average_throughputs,
    combination_distribution,
    energy_efficiency,
    sic_sweep,
    throughput_cdf,
    weight_sweep,
)
from fdcell.geometry import ScenarioConfig
from fdcell.scheduler import SchedulerMode, SimulationTrace, initial_state


def toy_trace(sc, selections, rates, powers=None, tau=1e-3):
    sels = np.array(selections, dtype=int).reshape(-1, 3)
    rates = np.array(rates, dtype=float).reshape(-1, 3)
    powers = np.full(sels.shape, 1e-3) * (sels != EMPTY) if powers is None else np.array(powers, float).reshape(-1, 3)
    st0 = initial_state(sc)
    return SimulationTrace(sc, SchedulerMode.DPA, sels, powers, np.zeros(sels.shape), rates, np.zeros(len(sels)), st0, st0, tau)


def test_single_constant_link_cdf_is_one_step(small_scenario):
    tr = toy_trace(small_scenario, [[0, EMPTY, EMPTY]] * 4, [[5e6, 0, 0]] * 4)
    cdf = throughput_cdf(tr, "DL")
    assert cdf == [(0.0, 0.5), (5e6, 1.0)]  # CUE 1 never scheduled, CUE 0 at a constant rate


def test_two_link_hand_computed_cdf(small_scenario):
    sels = [[0, 1, 0], [1, EMPTY, 0], [1, 0, EMPTY], [0, EMPTY, EMPTY]]
    rates = [[4e6, 1e6, 8e6], [2e6, 0, 6e6], [6e6, 3e6, 0], [2e6, 0, 0]]
    tr = toy_trace(small_scenario, sels, rates)
    # DL: CUE0 (4+2)/4 = 1.5 Mb/s, CUE1 (2+6)/4 = 2 Mb/s; UL: CUE0 0.75, CUE1 0.25
    assert throughput_cdf(tr, "DL") == [(1.5e6, 0.5), (2e6, 1.0)]
    assert throughput_cdf(tr, "UL") == [(0.25e6, 0.5), (0.75e6, 1.0)]
    assert throughput_cdf(tr, "D2D") == [(3.5e6, 1.0)]


def test_cdf_pools_links_across_traces(small_scenario):
    a = toy_trace(small_scenario, [[0, EMPTY, EMPTY]], [[1e6, 0, 0]])
    b = toy_trace(small_scenario, [[1, EMPTY, EMPTY]], [[3e6, 0, 0]])
    assert [x for x, _ in throughput_cdf([a, b], "DL")] == [0.0, 0.0, 1e6, 3e6]


def test_unknown_link_class(small_scenario):
    with pytest.raises(ValueError):
        average_throughputs(toy_trace(small_scenario, [[0, -1, -1]], [[1, 0, 0]]), "SL")


def test_all_dl_trace_distribution(small_scenario):
    pct = combination_distribution(toy_trace(small_scenario, [[0, EMPTY, EMPTY]] * 3, [[1, 0, 0]] * 3))
    assert pct["DL"] == 100.0
    assert pct["simultaneous"] == 0.0 and pct["D2D transmissions"] == 0.0
    assert sum(v for k, v in pct.items() if k not in ("simultaneous", "D2D transmissions")) == 100.0


def test_aggregates(small_scenario):
    sels = [[0, 1, 0], [0, 1, EMPTY], [EMPTY, EMPTY, 0], [EMPTY, 1, EMPTY]]
    pct = combination_distribution(toy_trace(small_scenario, sels, np.ones((4, 3))))
    assert pct["UL+DL+D2D"] == pct["UL+DL"] == pct["D2D"] == pct["UL"] == 25.0
    assert pct["simultaneous"] == 50.0
    assert pct["D2D transmissions"] == 50.0


def test_energy_efficiency_single_link(small_scenario):
    tr = toy_trace(small_scenario, [[0, EMPTY, EMPTY]], [[7e6, 0, 0]], [[2e-3, 0, 0]], tau=1e-3)
    assert energy_efficiency(tr) == pytest.approx(7e6 / 2e-3, rel=1e-12)


def test_halving_power_doubles_efficiency(small_scenario):
    sels, rates = [[0, 1, 0], [1, EMPTY, EMPTY]], [[1e6, 2e6, 3e6], [4e6, 0, 0]]
    p = np.array([[1e-3, 5e-4, 2e-4], [1e-3, 0, 0]])
    full = energy_efficiency(toy_trace(small_scenario, sels, rates, p))
    half = energy_efficiency(toy_trace(small_scenario, sels, rates, p / 2))
    assert half == pytest.approx(2 * full, rel=1e-12)


def test_zero_energy_is_nan(small_scenario):
    tr = toy_trace(small_scenario, [[EMPTY, EMPTY, EMPTY]], [[0, 0, 0]])
    assert math.isnan(energy_efficiency(tr))


def test_aggregate_is_sum_of_class_throughputs(small_scenario):
    sels = [[0, 1, 0], [1, EMPTY, 0], [1, 0, EMPTY]]
    tr = toy_trace(small_scenario, sels, [[4e6, 1e6, 8e6], [2e6, 0, 6e6], [6e6, 3e6, 0]])
    per_class = sum(average_throughputs(tr, c).sum() for c in ("DL", "UL", "D2D"))
    assert aggregate_throughput(tr) == pytest.approx(per_class, rel=1e-12)


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.tuples(st.integers(-1, 1), st.integers(-1, 1), st.integers(-1, 0), st.floats(0, 1e8)), min_size=1, max_size=30))
def test_cdf_and_distribution_well_formed(small_scenario, rows):
    sels = [(d, u if u != d or u == EMPTY else EMPTY, l) for d, u, l, _ in rows]
    rates = [[r * (s != EMPTY) for s in sel] for sel, (*_, r) in zip(sels, rows)]
    tr = toy_trace(small_scenario, sels, rates)
    for c in ("DL", "UL", "D2D"):
        cdf = throughput_cdf(tr, c)
        xs, fs = zip(*cdf)
        assert list(xs) == sorted(xs) and all(x >= 0 for x in xs)
        assert list(fs) == sorted(fs) and fs[-1] == 1.0
    pct = combination_distribution(tr)
    assert abs(sum(v for k, v in pct.items() if k not in ("simultaneous", "D2D transmissions")) - 100.0) < 1e-9


@pytest.fixture(scope="module")
def runner():
    return ExperimentRunner(ExperimentConfig(scenario=ScenarioConfig(num_cues=3, num_d2d_links=2), num_scenarios=2, num_ttis=60, seed=4))


def test_sic_sweep_shape_and_hd_row(runner):
    table = sic_sweep(runner, [65, 75, 85, 95, 105])
    assert set(table) == {"fpa", "dpa", "hd"}
    assert all(len(v) == 5 for v in table.values())
    assert len(set(table["hd"])) == 1


def test_sic_sweep_rejects_empty(runner):
    with pytest.raises(ValueError):
        sic_sweep(runner, [])


def test_weight_one_reproduces_default_run(runner):
    sweep = weight_sweep(runner, [1.0])
    base = runner.run("dpa")
    assert np.array_equal(sweep[1.0]["D2D"], average_throughputs(base, "D2D"))


def test_weight_sweep_rejects_out_of_range(runner):
    with pytest.raises(ValueError):
        weight_sweep(runner, [0.0])


def test_paired_seeds(runner):
    a, b = runner.run("fpa", 65), runner.run("dpa", 105)
    assert [t.metadata["seed"] for t in a] == [t.metadata["seed"] for t in b] == [4, 5]
    assert a[0].scenario.cue_xy.tolist() == b[0].scenario.cue_xy.tolist()


def test_report_is_pure_function_of_traces(runner):
    traces = runner.run("hd")
    r1, r2 = MetricsReport.from_traces(traces), MetricsReport.from_traces(traces)
    assert r1.combinations == r2.combinations and r1.energy_efficiency == r2.energy_efficiency
    assert all(np.array_equal(r1.throughputs[c], r2.throughputs[c]) for c in r1.throughputs)
    assert all(np.all(v >= 0) for v in r1.throughputs.values())
