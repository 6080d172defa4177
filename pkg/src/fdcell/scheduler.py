"""Per-TTI user selection and power control (FPA, DPA, HD) and the multi-TTI simulation loop.

Every mode reduces to the same per-TTI step: score a table of candidate (selection, powers)
pairs with the current rate state and take the argmax. Candidate rates do not depend on the
rate state, so tables are built once per scenario:

* FPA: one candidate per selection, every active source at peak power.
* DPA / HD: the maximal feasible CQI-class triples of each selection with their minimum-power
  vectors (see :func:`fdcell.optimizer.class_frontier`). The state-dependent maximum over
  powers is then a maximum over this frontier, which is exact. ``OptimizerConfig(method=
  "pattern")`` instead re-solves every selection by pattern search each TTI.

Ties are broken by fewer active slots first, then enumeration order (DL index, UL index,
D2D index, EMPTY last in each), then lower total power.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from fdcell.geometry import Scenario
from fdcell.link import (
    EMPTY,
    CqiTable,
    PowerAllocation,
    Selection,
    SinrTriple,
    default_cqi_table,
    link_matrix,
)
from fdcell.optimizer import (
    BoxBounds,
    OptimizerConfig,
    OptResult,
    SinrFloors,
    class_frontier,
    pattern_search_batch,
    pattern_search_maximize,
)
from fdcell.utility import RateState, UtilityConfig, full_rate_vectors, update_average_rates

COMBINATION_CLASSES = ("UL+DL+D2D", "UL+DL", "UL+D2D", "DL+D2D", "UL", "DL", "D2D", "NONE")


class SchedulerMode(str, enum.Enum):
    FPA = "fpa"
    DPA = "dpa"
    HD = "hd"


def enumerate_selections(num_cues: int, num_d2d: int, mode: SchedulerMode | str = SchedulerMode.DPA) -> list[Selection]:
    """All legal (DL, UL, D2D) triples in enumeration order; HD forbids DL and UL together."""
    mode = SchedulerMode(mode)
    cues = list(range(num_cues)) + [EMPTY]
    links = list(range(num_d2d)) + [EMPTY]
    out = []
    for dl in cues:
        for ul in cues:
            if dl == ul and dl != EMPTY:
                continue
            if mode is SchedulerMode.HD and dl != EMPTY and ul != EMPTY:
                continue
            for d2d in links:
                if dl == ul == d2d == EMPTY:
                    continue
                out.append(Selection(dl, ul, d2d))
    return out


@dataclass(frozen=True)
class TtiDecision:
    selection: Selection
    powers: PowerAllocation
    sinrs: SinrTriple
    rates: tuple[float, float, float]
    utility: float

    @property
    def combination_class(self) -> str:
        return self.selection.combination_class


NONE_DECISION = TtiDecision(Selection(), PowerAllocation(), SinrTriple(), (0.0, 0.0, 0.0), 0.0)


def resolve_floors(cfg: OptimizerConfig, table: CqiTable) -> SinrFloors:
    return cfg.floors if cfg.floors is not None else SinrFloors.from_table(table)


@dataclass(frozen=True)
class CandidateTable:
    """Flat, tie-break-ordered arrays of (selection, classes, powers, SINRs)."""

    selections: np.ndarray  # (K, 3) int, EMPTY = -1
    classes: np.ndarray  # (K, 3) int
    powers: np.ndarray  # (K, 3)
    sinrs: np.ndarray  # (K, 3)

    def __len__(self) -> int:
        return len(self.selections)

    def restrict(self, mask: np.ndarray) -> CandidateTable:
        return CandidateTable(self.selections[mask], self.classes[mask], self.powers[mask], self.sinrs[mask])

    def half_duplex(self) -> CandidateTable:
        return self.restrict((self.selections[:, 0] == EMPTY) | (self.selections[:, 1] == EMPTY))

    def utilities(self, state: RateState, bandwidth: float, table: CqiTable) -> np.ndarray:
        rate_by_class = bandwidth * table.class_efficiency
        total = None
        for slot, (avg, w) in enumerate(((state.avg_dl, state.w_dl), (state.avg_ul, state.w_ul), (state.avg_d2d, state.w_d2d))):
            u = np.zeros((len(avg) + 1, len(rate_by_class)))  # last row serves EMPTY
            u[:-1] = w[:, None] * np.log1p(state.gamma * rate_by_class[None, :] / (state.beta * avg[:, None]))
            term = u[self.selections[:, slot], self.classes[:, slot]]
            total = term if total is None else total + term
        return total


def _ordered(rows: list[tuple]) -> CandidateTable:
    # rows: (n_active, enumeration position, total power, selection, classes, powers, sinrs)
    rows.sort(key=lambda r: r[:3])
    if not rows:
        z = np.zeros((0, 3))
        return CandidateTable(z.astype(int), z.astype(int), z, z)
    return CandidateTable(
        selections=np.array([r[3] for r in rows], dtype=int),
        classes=np.array([r[4] for r in rows], dtype=int),
        powers=np.array([r[5] for r in rows], dtype=float),
        sinrs=np.array([r[6] for r in rows], dtype=float),
    )


def _slot_utilities(avgs, ws, state: RateState, rate_by_class: np.ndarray) -> np.ndarray:
    """Utility of every CQI class for each slot: shape ``avgs.shape + (n_classes,)``."""
    avgs, ws = np.asarray(avgs)[..., None], np.asarray(ws)[..., None]
    return ws * np.log1p(state.gamma * rate_by_class / (state.beta * avgs))


def _lookup_utility(tables: np.ndarray, classes: np.ndarray) -> np.ndarray:
    return np.take_along_axis(tables, classes[..., None], axis=-1)[..., 0].sum(axis=-1)


def build_candidates(
    scenario: Scenario,
    mode: SchedulerMode | str,
    optimizer_cfg: OptimizerConfig | None = None,
    table: CqiTable | None = None,
) -> CandidateTable:
    mode = SchedulerMode(mode)
    table = table or default_cqi_table()
    optimizer_cfg = optimizer_cfg or OptimizerConfig()
    floors = resolve_floors(optimizer_cfg, table)
    rows = []
    for pos, sel in enumerate(enumerate_selections(scenario.num_cues, scenario.num_d2d, mode)):
        lm = link_matrix(scenario, sel)
        if mode is SchedulerMode.FPA:
            p = np.where(lm.active, scenario.p_max, 0.0)
            s = lm.sinr(p)
            c = np.where(lm.active, table.cqi_class(np.where(lm.active, s, 1.0)), 0)
            rows.append((sel.num_active, pos, p.sum(), sel, c, p, s))
        else:
            fr = class_frontier(lm, scenario.p_max, table, floors)
            for c, p, s in zip(fr.classes, fr.powers, fr.sinrs):
                rows.append((sel.num_active, pos, p.sum(), sel, c, p, s))
    return _ordered(rows)


def _decision(cands: CandidateTable, k: int, utility: float, bandwidth: float, table: CqiTable) -> TtiDecision:
    sel = Selection(*map(int, cands.selections[k]))
    rates = tuple(float(bandwidth * table.class_efficiency[c]) if a else 0.0 for c, a in zip(cands.classes[k], sel.active))
    sinrs = SinrTriple(*(float(s) if a else 0.0 for s, a in zip(cands.sinrs[k], sel.active)))
    return TtiDecision(sel, PowerAllocation(*map(float, cands.powers[k])), sinrs, rates, float(utility))


def schedule_from_candidates(scenario: Scenario, state: RateState, cands: CandidateTable, table: CqiTable) -> TtiDecision:
    if len(cands) == 0:
        return NONE_DECISION
    util = cands.utilities(state, scenario.config.bandwidth, table)
    k = int(np.argmax(util))
    return _decision(cands, k, util[k], scenario.config.bandwidth, table)


def schedule_fpa(scenario: Scenario, state: RateState, table: CqiTable | None = None, candidates: CandidateTable | None = None) -> TtiDecision:
    """Best selection with every scheduled source at peak power; no SINR floors."""
    table = table or default_cqi_table()
    cands = candidates if candidates is not None else build_candidates(scenario, SchedulerMode.FPA, table=table)
    return schedule_from_candidates(scenario, state, cands, table)


def _slot_state(sel: Selection, state: RateState):
    idx = [i if a else 0 for i, a in zip(sel, sel.active)]
    avgs = np.array([state.avg_dl[idx[0]], state.avg_ul[idx[1]], state.avg_d2d[idx[2]]])
    ws = np.where(sel.active, [state.w_dl[idx[0]], state.w_ul[idx[1]], state.w_d2d[idx[2]]], 0.0)
    return avgs, ws


def selection_objective(scenario: Scenario, sel: Selection, state: RateState, table: CqiTable):
    """(utility, sinr) callables over power vectors of shape (3,) or (M, 3) for one selection."""
    lm = link_matrix(scenario, sel)
    avgs, ws = _slot_state(sel, state)
    util = _slot_utilities(avgs, ws, state, scenario.config.bandwidth * table.class_efficiency)

    def objective(p):
        s = lm.sinr(p)
        c = np.where(lm.active, table.cqi_class(np.where(lm.active, s, 1.0)), 0)
        return _lookup_utility(np.broadcast_to(util, c.shape + util.shape[-1:]), c)

    return objective, lm.sinr


@dataclass(frozen=True)
class SelectionBatch:
    """Link matrices of every selection of a mode, in tie-break order, for batched searches."""

    selections: np.ndarray  # (S, 3)
    own: np.ndarray  # (S, 3)
    cross: np.ndarray  # (S, 3, 3)
    noise: np.ndarray  # (S, 3)
    active: np.ndarray  # (S, 3)

    @classmethod
    def build(cls, scenario: Scenario, mode: SchedulerMode | str) -> SelectionBatch:
        sels = enumerate_selections(scenario.num_cues, scenario.num_d2d, mode)
        order = sorted(range(len(sels)), key=lambda k: (sels[k].num_active, k))
        mats = [link_matrix(scenario, sels[k]) for k in order]
        return cls(
            selections=np.array([sels[k] for k in order], dtype=int).reshape(-1, 3),
            own=np.array([m.own for m in mats]).reshape(-1, 3),
            cross=np.array([m.cross for m in mats]).reshape(-1, 3, 3),
            noise=np.array([m.noise for m in mats]).reshape(-1, 3),
            active=np.array([m.active for m in mats], dtype=bool).reshape(-1, 3),
        )

    def __len__(self) -> int:
        return len(self.selections)

    def sinr(self, rows: np.ndarray, p: np.ndarray) -> np.ndarray:
        interference = (p[:, None, :] * self.cross[rows]).sum(axis=-1)
        return np.where(self.active[rows], self.own[rows] * p / (self.noise[rows] + interference), 0.0)

    def evaluator(self, state: RateState, table: CqiTable, floors: SinrFloors, bandwidth: float):
        """``evaluate(rows, powers)`` for :func:`pattern_search_batch`: utility or -inf below a floor."""
        idx = np.where(self.active, self.selections, 0)
        avgs = np.stack([state.avg_dl[idx[:, 0]], state.avg_ul[idx[:, 1]], state.avg_d2d[idx[:, 2]]], axis=1)
        ws = np.where(self.active, np.stack([state.w_dl[idx[:, 0]], state.w_ul[idx[:, 1]], state.w_d2d[idx[:, 2]]], axis=1), 0.0)
        util = _slot_utilities(avgs, ws, state, bandwidth * table.class_efficiency)
        floor = floors.as_array()

        def evaluate(rows, p):
            act = self.active[rows]
            s = self.sinr(rows, p)
            c = np.where(act, table.cqi_class(np.where(act, s, 1.0)), 0)
            val = _lookup_utility(util[rows], c)
            return np.where(np.any(act & (s < floor), axis=1), -np.inf, val)

        return evaluate


def optimize_selection(
    scenario: Scenario,
    sel: Selection,
    state: RateState,
    optimizer_cfg: OptimizerConfig | None = None,
    table: CqiTable | None = None,
    seeds=None,
) -> OptResult:
    """Best powers for one selection under the box and SINR-floor constraints."""
    optimizer_cfg = optimizer_cfg or OptimizerConfig()
    table = table or default_cqi_table()
    floors = resolve_floors(optimizer_cfg, table)
    objective, sinr_fn = selection_objective(scenario, sel, state, table)
    if optimizer_cfg.method == "pattern":
        bounds = BoxBounds.for_selection(scenario.p_max, sel.active)
        return pattern_search_maximize(objective, bounds, floors, optimizer_cfg, sinr_fn, seeds=seeds)
    fr = class_frontier(link_matrix(scenario, sel), scenario.p_max, table, floors)
    if len(fr) == 0:
        return OptResult(PowerAllocation(), -np.inf, False, 0)
    vals = objective(fr.powers)
    k = int(np.argmax(vals))
    return OptResult(PowerAllocation(*map(float, fr.powers[k])), float(vals[k]), True, len(fr))


class _PatternStack:
    """Selection batches of several simulations stacked row-wise for one lockstep search."""

    FIRST_PASS = 16  # rows per simulation searched before bounding the rest

    def __init__(self, scenarios: list[Scenario], batches: list[SelectionBatch], table: CqiTable, frontiers: list[CandidateTable]):
        self.scenarios, self.batches, self.table = scenarios, batches, table
        self.frontiers = frontiers
        self.sizes = np.array([len(b) for b in batches])
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.job = np.repeat(np.arange(len(batches)), self.sizes)
        cat = lambda name: np.concatenate([getattr(b, name) for b in batches]) if batches else np.zeros((0, 3))
        self.all = SelectionBatch(cat("selections").astype(int), cat("own"), cat("cross").reshape(-1, 3, 3), cat("noise"), cat("active").astype(bool))
        self.p_max = np.concatenate([np.broadcast_to(sc.p_max, b.active.shape) for sc, b in zip(scenarios, batches)]) if batches else np.zeros((0, 3))
        self.bandwidth = np.repeat([sc.config.bandwidth for sc in scenarios], self.sizes)
        # row of each frontier candidate inside the stacked batch
        self.owner = []
        for off, b, fr in zip(self.offsets, batches, frontiers):
            pos = {tuple(r): off + k for k, r in enumerate(b.selections.tolist())}
            self.owner.append(np.array([pos[tuple(r)] for r in fr.selections.tolist()], dtype=int))

    def _utilities(self, states: list[RateState]) -> np.ndarray:
        out = []
        for b, st, sc in zip(self.batches, states, self.scenarios):
            idx = np.where(b.active, b.selections, 0)
            avgs = np.stack([st.avg_dl[idx[:, 0]], st.avg_ul[idx[:, 1]], st.avg_d2d[idx[:, 2]]], axis=1)
            ws = np.where(b.active, np.stack([st.w_dl[idx[:, 0]], st.w_ul[idx[:, 1]], st.w_d2d[idx[:, 2]]], axis=1), 0.0)
            out.append(_slot_utilities(avgs, ws, st, sc.config.bandwidth * self.table.class_efficiency))
        return np.concatenate(out)

    def step(self, states: list[RateState], cfg: OptimizerConfig, floors: SinrFloors) -> list[TtiDecision]:
        util = self._utilities(states)
        floor, table, sb = floors.as_array(), self.table, self.all

        def evaluate(rows, p):
            act = sb.active[rows]
            s = sb.sinr(rows, p)
            c = np.where(act, table.cqi_class(np.where(act, s, 1.0)), 0)
            return np.where(np.any(act & (s < floor), axis=1), -np.inf, _lookup_utility(util[rows], c))

        best_u = np.full(len(sb), -np.inf)
        best_p = np.zeros((len(sb), 3))

        def search(rows):
            if rows.size:
                res = pattern_search_batch(lambda r, p: evaluate(rows[r], p), self.p_max[rows], sb.active[rows], cfg)
                best_u[rows], best_p[rows] = res.best_utility, res.best_power

        # the exact optimum of each selection bounds what pattern search can reach there;
        # selections without a feasible class triple stay at -inf and are never searched
        bound = np.full(len(sb), -np.inf)
        for st, sc, fr, owner in zip(states, self.scenarios, self.frontiers, self.owner):
            np.maximum.at(bound, owner, fr.utilities(st, sc.config.bandwidth, table))
        first = np.concatenate([o + np.argsort(-bound[o:o + n], kind="stable")[: self.FIRST_PASS] for o, n in zip(self.offsets, self.sizes)]).astype(int)
        search(first[bound[first] > -np.inf])
        job_best = np.array([best_u[o:o + n].max(initial=-np.inf) for o, n in zip(self.offsets, self.sizes)])
        rest = np.ones(len(sb), bool)
        rest[first] = False
        # a row whose bound is below the best found can neither win nor tie
        search(np.flatnonzero(rest & (bound > -np.inf) & (bound >= job_best[self.job])))

        out = []
        for j, (o, n) in enumerate(zip(self.offsets, self.sizes)):
            if n == 0 or best_u[o:o + n].max() == -np.inf:
                out.append(NONE_DECISION)
                continue
            k = o + int(np.argmax(best_u[o:o + n]))
            sel = Selection(*map(int, sb.selections[k]))
            p = best_p[k]
            sinr = sb.sinr(np.array([k]), p[None, :])[0]
            c = np.where(sel.active, table.cqi_class(np.where(sel.active, sinr, 1.0)), 0)
            bw = self.bandwidth[k]
            rates = tuple(float(bw * table.class_efficiency[ci]) if a else 0.0 for ci, a in zip(c, sel.active))
            out.append(TtiDecision(sel, PowerAllocation(*map(float, p)), SinrTriple(*map(float, sinr)), rates, float(best_u[k])))
        return out


def schedule_pattern(
    scenario: Scenario,
    state: RateState,
    batch: SelectionBatch,
    optimizer_cfg: OptimizerConfig | None = None,
    table: CqiTable | None = None,
) -> TtiDecision:
    """Pattern-search the selections of ``batch`` and keep the best.

    Selections whose interference-free utility bound falls below the best value already
    found are skipped; this never changes the decision.
    """
    optimizer_cfg = optimizer_cfg or OptimizerConfig(method="pattern")
    table = table or default_cqi_table()
    mode = SchedulerMode.HD if np.all((batch.selections[:, 0] == EMPTY) | (batch.selections[:, 1] == EMPTY)) else SchedulerMode.DPA
    frontier = build_candidates(scenario, mode, optimizer_cfg, table)
    stack = _PatternStack([scenario], [batch], table, [frontier])
    return stack.step([state], optimizer_cfg, resolve_floors(optimizer_cfg, table))[0]


def _schedule_optimized(scenario, state, mode, optimizer_cfg, table, candidates) -> TtiDecision:
    table = table or default_cqi_table()
    optimizer_cfg = optimizer_cfg or OptimizerConfig()
    if optimizer_cfg.method == "pattern":
        return schedule_pattern(scenario, state, SelectionBatch.build(scenario, mode), optimizer_cfg, table)
    if candidates is None:
        candidates = build_candidates(scenario, mode, optimizer_cfg, table)
    return schedule_from_candidates(scenario, state, candidates, table)


def schedule_dpa(scenario, state, optimizer_cfg=None, table=None, candidates=None) -> TtiDecision:
    """Best selection after optimizing each selection's powers; all-EMPTY if none is feasible."""
    return _schedule_optimized(scenario, state, SchedulerMode.DPA, optimizer_cfg, table, candidates)


def schedule_hd(scenario, state, optimizer_cfg=None, table=None, candidates=None) -> TtiDecision:
    """DPA restricted to selections without simultaneous DL and UL."""
    return _schedule_optimized(scenario, state, SchedulerMode.HD, optimizer_cfg, table, candidates)


@dataclass
class SimulationTrace:
    """Per-TTI decisions stored column-wise. Row ``t`` is one :class:`TtiDecision`."""

    scenario: Scenario
    mode: SchedulerMode
    selections: np.ndarray  # (T, 3) int
    powers: np.ndarray  # (T, 3)
    sinrs: np.ndarray  # (T, 3)
    rates: np.ndarray  # (T, 3) bits/s
    utilities: np.ndarray  # (T,)
    initial_state: RateState
    final_state: RateState
    tti_duration: float = 1e-3
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.selections)

    def decision(self, t: int) -> TtiDecision:
        sel = Selection(*map(int, self.selections[t]))
        return TtiDecision(
            sel,
            PowerAllocation(*map(float, self.powers[t])),
            SinrTriple(*map(float, self.sinrs[t])),
            tuple(map(float, self.rates[t])),
            float(self.utilities[t]),
        )

    @property
    def decisions(self) -> list[TtiDecision]:
        return [self.decision(t) for t in range(len(self))]

    @property
    def combination_classes(self) -> list[str]:
        return [Selection(*map(int, s)).combination_class for s in self.selections]

    def link_rate_vectors(self, t: int):
        return full_rate_vectors(Selection(*map(int, self.selections[t])), self.rates[t], self.scenario.num_cues, self.scenario.num_d2d)

    def replay(self) -> RateState:
        """Re-run the rate averaging from the recorded decisions."""
        state = self.initial_state
        for t in range(len(self)):
            state = update_average_rates(state, *self.link_rate_vectors(t))
        return state

    def delivered_bits(self) -> dict[str, np.ndarray]:
        """Total bits per link over the run, keyed by link class."""
        out = {"DL": np.zeros(self.scenario.num_cues), "UL": np.zeros(self.scenario.num_cues), "D2D": np.zeros(self.scenario.num_d2d)}
        for slot, key in enumerate(("DL", "UL", "D2D")):
            idx = self.selections[:, slot]
            on = idx != EMPTY
            np.add.at(out[key], idx[on], self.rates[on, slot] * self.tti_duration)
        return out

    def energy(self) -> float:
        return float(self.powers.sum() * self.tti_duration)


def initial_state(scenario: Scenario, utility_cfg: UtilityConfig | None = None) -> RateState:
    return RateState.initial(scenario.num_cues, scenario.num_d2d, utility_cfg)


class _Recorder:
    def __init__(self, scenario: Scenario, mode: SchedulerMode, num_ttis: int, state: RateState):
        self.scenario, self.mode, self.start, self.state = scenario, mode, state, state
        self.sels = np.full((num_ttis, 3), EMPTY, dtype=int)
        self.powers, self.sinrs, self.rates = (np.zeros((num_ttis, 3)) for _ in range(3))
        self.utils = np.zeros(num_ttis)

    def record(self, t: int, dec: TtiDecision) -> None:
        self.sels[t], self.powers[t], self.sinrs[t], self.rates[t], self.utils[t] = dec.selection, dec.powers, dec.sinrs, dec.rates, dec.utility
        sc = self.scenario
        self.state = update_average_rates(self.state, *full_rate_vectors(dec.selection, dec.rates, sc.num_cues, sc.num_d2d))

    def trace(self, tti_duration: float) -> SimulationTrace:
        return SimulationTrace(
            scenario=self.scenario,
            mode=self.mode,
            selections=self.sels,
            powers=self.powers,
            sinrs=self.sinrs,
            rates=self.rates,
            utilities=self.utils,
            initial_state=self.start,
            final_state=self.state,
            tti_duration=tti_duration,
        )


def run_simulation(
    scenario: Scenario,
    mode: SchedulerMode | str,
    num_ttis: int,
    utility_cfg: UtilityConfig | None = None,
    optimizer_cfg: OptimizerConfig | None = None,
    table: CqiTable | None = None,
    candidates: CandidateTable | None = None,
    tti_duration: float = 1e-3,
) -> SimulationTrace:
    if num_ttis < 1:
        raise ValueError("num_ttis must be at least 1")
    mode = SchedulerMode(mode)
    table = table or default_cqi_table()
    optimizer_cfg = optimizer_cfg or OptimizerConfig()
    if mode is not SchedulerMode.FPA and optimizer_cfg.method == "pattern":
        return run_pattern_simulations([(scenario, mode, utility_cfg)], num_ttis, optimizer_cfg, table, tti_duration)[0]
    if candidates is None:
        candidates = build_candidates(scenario, mode, optimizer_cfg, table)
    rec = _Recorder(scenario, mode, num_ttis, initial_state(scenario, utility_cfg))
    for t in range(num_ttis):
        rec.record(t, schedule_from_candidates(scenario, rec.state, candidates, table))
    return rec.trace(tti_duration)


def run_pattern_simulations(
    jobs,
    num_ttis: int,
    optimizer_cfg: OptimizerConfig | None = None,
    table: CqiTable | None = None,
    tti_duration: float = 1e-3,
) -> list[SimulationTrace]:
    """Advance several pattern-search simulations in lockstep.

    ``jobs`` holds ``(scenario, mode, utility_cfg)`` triples with mode DPA or HD. Each trace
    equals the one :func:`run_simulation` produces for that job alone.
    """
    if num_ttis < 1:
        raise ValueError("num_ttis must be at least 1")
    table = table or default_cqi_table()
    optimizer_cfg = optimizer_cfg or OptimizerConfig(method="pattern")
    floors = resolve_floors(optimizer_cfg, table)
    recs, batches, frontiers, cache = [], [], [], {}
    for scenario, mode, utility_cfg in jobs:
        mode = SchedulerMode(mode)
        if mode is SchedulerMode.FPA:
            raise ValueError("FPA has no power search; use run_simulation")
        key = (id(scenario), mode)
        if key not in cache:
            cache[key] = (SelectionBatch.build(scenario, mode), build_candidates(scenario, mode, optimizer_cfg, table))
        batches.append(cache[key][0])
        frontiers.append(cache[key][1])
        recs.append(_Recorder(scenario, mode, num_ttis, initial_state(scenario, utility_cfg)))
    stack = _PatternStack([r.scenario for r in recs], batches, table, frontiers)
    for t in range(num_ttis):
        for rec, dec in zip(recs, stack.step([r.state for r in recs], optimizer_cfg, floors)):
            rec.record(t, dec)
    return [r.trace(tti_duration) for r in recs]
