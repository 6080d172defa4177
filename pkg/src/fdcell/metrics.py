"""Monte-Carlo experiment driver and the metrics computed from simulation traces."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from fdcell.geometry import Scenario, ScenarioConfig, generate_scenario
from fdcell.link import CqiTable, default_cqi_table
from fdcell.optimizer import OptimizerConfig
from fdcell.scheduler import (
    COMBINATION_CLASSES,
    CandidateTable,
    SchedulerMode,
    SimulationTrace,
    build_candidates,
    run_pattern_simulations,
    run_simulation,
)
from fdcell.utility import UtilityConfig

LINK_CLASSES = ("DL", "UL", "D2D")
SIMULTANEOUS = tuple(c for c in COMBINATION_CLASSES if "+" in c)
WITH_D2D = tuple(c for c in COMBINATION_CLASSES if "D2D" in c)


def _as_list(traces) -> list[SimulationTrace]:
    return [traces] if isinstance(traces, SimulationTrace) else list(traces)


def average_throughputs(traces, link_class: str) -> np.ndarray:
    """Per-link average throughput (bits/s) over each run, concatenated across traces."""
    if link_class not in LINK_CLASSES:
        raise ValueError(f"link_class must be one of {LINK_CLASSES}")
    out = []
    for tr in _as_list(traces):
        out.append(tr.delivered_bits()[link_class] / (len(tr) * tr.tti_duration))
    return np.concatenate(out) if out else np.zeros(0)


def throughput_cdf(traces, link_class: str) -> list[tuple[float, float]]:
    """Empirical CDF of per-link average throughput as (throughput, cumulative fraction)."""
    x = np.sort(average_throughputs(traces, link_class))
    n = len(x)
    return [(float(v), (i + 1) / n) for i, v in enumerate(x)]


def combination_distribution(traces) -> dict[str, float]:
    """Percentage of TTIs per combination class, plus the 'simultaneous' and 'D2D' aggregates."""
    counts: Counter = Counter()
    total = 0
    for tr in _as_list(traces):
        counts.update(tr.combination_classes)
        total += len(tr)
    if total == 0:
        raise ValueError("empty trace")
    pct = {c: 100.0 * counts.get(c, 0) / total for c in COMBINATION_CLASSES}
    pct["simultaneous"] = sum(pct[c] for c in SIMULTANEOUS)
    pct["D2D transmissions"] = sum(pct[c] for c in WITH_D2D)
    return pct


def energy_efficiency(traces) -> float:
    """Delivered bits per joule of radiated transmit energy, pooled over the traces.

    Returns NaN when no energy was spent (every TTI empty).
    """
    bits = energy = 0.0
    for tr in _as_list(traces):
        bits += sum(float(v.sum()) for v in tr.delivered_bits().values())
        energy += tr.energy()
    return bits / energy if energy > 0 else math.nan


def aggregate_throughput(trace: SimulationTrace) -> float:
    """All delivered bits divided by the run time, in bits/s."""
    bits = sum(float(v.sum()) for v in trace.delivered_bits().values())
    return bits / (len(trace) * trace.tti_duration)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    utility: UtilityConfig = field(default_factory=UtilityConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    cqi_table: CqiTable = field(default_factory=default_cqi_table)
    num_scenarios: int = 20
    num_ttis: int = 2000
    seed: int = 0
    tti_duration: float = 1e-3

    def scenario_seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.num_scenarios)]


class ExperimentRunner:
    """Runs paired experiments: every mode, SIC value and weight reuses the same scenario seeds.

    Candidate tables depend only on (scenario, SIC, mode), so they are cached and shared
    between modes (HD is a restriction of the DPA table) and across weight values.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.scenarios = [generate_scenario(cfg.scenario, s) for s in cfg.scenario_seeds()]
        self._cands: dict[tuple, CandidateTable] = {}

    def scenario(self, i: int, sic: float | None = None) -> Scenario:
        sc = self.scenarios[i]
        return sc if sic is None or sic == sc.config.sic else sc.with_sic(sic)

    def candidates(self, i: int, sic: float, mode: SchedulerMode) -> CandidateTable:
        key = (i, float(sic), mode)
        if key not in self._cands:
            if mode is SchedulerMode.HD:
                # no UL+DL selection in HD, so the table does not depend on SIC
                hd_key = (i, None, mode)
                if hd_key not in self._cands:
                    self._cands[hd_key] = self.candidates(i, sic, SchedulerMode.DPA).half_duplex()
                self._cands[key] = self._cands[hd_key]
            else:
                self._cands[key] = build_candidates(self.scenario(i, sic), mode, self.cfg.optimizer, self.cfg.cqi_table)
        return self._cands[key]

    def run(self, mode, sic: float | None = None, utility: UtilityConfig | None = None) -> list[SimulationTrace]:
        mode = SchedulerMode(mode)
        sic = self.cfg.scenario.sic if sic is None else sic
        utility = utility or self.cfg.utility
        if mode is not SchedulerMode.FPA and self.cfg.optimizer.method == "pattern":
            jobs = [(self.scenario(i, sic), mode, utility) for i in range(len(self.scenarios))]
            traces = run_pattern_simulations(jobs, self.cfg.num_ttis, self.cfg.optimizer, self.cfg.cqi_table, self.cfg.tti_duration)
        else:
            traces = [
                run_simulation(
                    self.scenario(i, sic),
                    mode,
                    self.cfg.num_ttis,
                    utility,
                    self.cfg.optimizer,
                    self.cfg.cqi_table,
                    candidates=self.candidates(i, sic, mode),
                    tti_duration=self.cfg.tti_duration,
                )
                for i in range(len(self.scenarios))
            ]
        for tr, seed in zip(traces, self.cfg.scenario_seeds()):
            tr.metadata.update(seed=seed, mode=mode.value, sic=sic, w_d2d=utility.w_d2d, ttis=self.cfg.num_ttis)
        return traces


def sic_sweep(runner: ExperimentRunner, sic_values, modes=("fpa", "dpa", "hd")) -> dict[str, list[float]]:
    """Mean aggregate throughput (bits/s) over the scenarios for each mode and SIC value."""
    if len(sic_values) == 0:
        raise ValueError("sic_values must be non-empty")
    table = {}
    for mode in modes:
        table[SchedulerMode(mode).value] = [
            float(np.mean([aggregate_throughput(tr) for tr in runner.run(mode, sic)])) for sic in sic_values
        ]
    return table


def weight_sweep(runner: ExperimentRunner, w_l_values, sic: float | None = None) -> dict[float, dict[str, np.ndarray]]:
    """DPA with w_dl = w_ul = 1 and the given D2D weightages; per-class average-throughput samples."""
    out = {}
    base = runner.cfg.utility
    for w in w_l_values:
        if not 0 < w <= 1:
            raise ValueError("D2D weightage must lie in (0, 1]")
        util = UtilityConfig(beta=base.beta, epsilon_rate=base.epsilon_rate, w_dl=1.0, w_ul=1.0, w_d2d=float(w))
        traces = runner.run(SchedulerMode.DPA, sic, util)
        out[float(w)] = {c: average_throughputs(traces, c) for c in LINK_CLASSES}
    return out


@dataclass
class MetricsReport:
    throughputs: dict[str, np.ndarray]
    combinations: dict[str, float]
    aggregate_throughput: float
    energy_efficiency: float
    metadata: dict

    @classmethod
    def from_traces(cls, traces, **metadata) -> MetricsReport:
        traces = _as_list(traces)
        return cls(
            throughputs={c: average_throughputs(traces, c) for c in LINK_CLASSES},
            combinations=combination_distribution(traces),
            aggregate_throughput=float(np.mean([aggregate_throughput(t) for t in traces])),
            energy_efficiency=energy_efficiency(traces),
            metadata=metadata,
        )
