"""Proportional-fair bookkeeping: smoothed rates, per-TTI utility and the log-sum objective."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from fdcell.geometry import Scenario
from fdcell.link import EMPTY, CqiTable, PowerAllocation, Selection, default_cqi_table, link_rates


@dataclass(frozen=True)
class UtilityConfig:
    beta: float = 0.9
    epsilon_rate: float = 1e3  # bits/s; initial average and floor for every link
    w_dl: float = 1.0
    w_ul: float = 1.0
    w_d2d: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.epsilon_rate <= 0:
            raise ValueError("epsilon_rate must be positive")
        for w in (self.w_dl, self.w_ul, self.w_d2d):
            if not 0.0 <= w <= 1.0:
                raise ValueError("weightages must lie in [0, 1]")

    @property
    def gamma(self) -> float:
        return 1.0 - self.beta


@dataclass(frozen=True)
class RateState:
    """Per-link smoothed throughputs (bits/s) and weightages. Immutable; updates return a copy."""

    avg_dl: np.ndarray
    avg_ul: np.ndarray
    avg_d2d: np.ndarray
    w_dl: np.ndarray
    w_ul: np.ndarray
    w_d2d: np.ndarray
    beta: float = 0.9
    gamma: float = 0.1
    epsilon_rate: float = 1e3

    def __post_init__(self):
        if abs(self.beta + self.gamma - 1.0) > 1e-12 or not 0 < self.beta < 1:
            raise ValueError("beta and gamma must lie in (0, 1) and sum to 1")
        for name in ("avg_dl", "avg_ul", "avg_d2d", "w_dl", "w_ul", "w_d2d"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.avg_dl) != len(self.avg_ul) or len(self.w_dl) != len(self.avg_dl):
            raise ValueError("per-CUE arrays must share one length")
        if len(self.w_d2d) != len(self.avg_d2d):
            raise ValueError("per-D2D arrays must share one length")
        if min(self.avg_dl.min(initial=1), self.avg_ul.min(initial=1), self.avg_d2d.min(initial=1)) <= 0:
            raise ValueError("average rates must be positive")

    @classmethod
    def initial(cls, num_cues: int, num_d2d: int, cfg: UtilityConfig | None = None) -> RateState:
        cfg = cfg or UtilityConfig()
        eps = cfg.epsilon_rate
        return cls(
            avg_dl=np.full(num_cues, eps),
            avg_ul=np.full(num_cues, eps),
            avg_d2d=np.full(num_d2d, eps),
            w_dl=np.full(num_cues, cfg.w_dl),
            w_ul=np.full(num_cues, cfg.w_ul),
            w_d2d=np.full(num_d2d, cfg.w_d2d),
            beta=cfg.beta,
            gamma=cfg.gamma,
            epsilon_rate=eps,
        )

    def replace(self, **changes) -> RateState:
        return dataclasses.replace(self, **changes)

    @property
    def total_weight(self) -> float:
        return float(self.w_dl.sum() + self.w_ul.sum() + self.w_d2d.sum())


def link_utility(avg, rate, weight, beta: float, gamma: float):
    """w * [log(beta*avg + gamma*rate) - log(beta*avg)], written as a log1p."""
    return weight * np.log1p(gamma * np.asarray(rate) / (beta * np.asarray(avg)))


def utility_from_rates(sel: Selection, rates, state: RateState) -> float:
    """Utility of a selection given its instantaneous (dl, ul, d2d) rates."""
    total = 0.0
    for idx, rate, avg, w in zip(sel, rates, (state.avg_dl, state.avg_ul, state.avg_d2d), (state.w_dl, state.w_ul, state.w_d2d)):
        if idx != EMPTY:
            total += float(link_utility(avg[idx], rate, w[idx], state.beta, state.gamma))
    return total


def utility_value(
    sel: Selection,
    p: PowerAllocation,
    state: RateState,
    scenario: Scenario,
    table: CqiTable | None = None,
) -> float:
    rates = link_rates(scenario, sel, p, table or default_cqi_table())
    return utility_from_rates(sel, rates, state)


def full_rate_vectors(sel: Selection, rates, num_cues: int, num_d2d: int):
    """Scatter the three slot rates into per-link vectors; unscheduled links get 0."""
    dl, ul, d2d = np.zeros(num_cues), np.zeros(num_cues), np.zeros(num_d2d)
    for vec, idx, rate in zip((dl, ul, d2d), sel, rates):
        if idx != EMPTY:
            vec[idx] = rate
    return dl, ul, d2d


def update_average_rates(state: RateState, rates_dl, rates_ul, rates_d2d, floor: bool = True) -> RateState:
    """One EMA step for every link, scheduled or not.

    With ``floor`` the result is clipped from below at ``state.epsilon_rate``.
    """
    b, g = state.beta, state.gamma
    new = [b * avg + g * np.asarray(r, dtype=float) for avg, r in
           ((state.avg_dl, rates_dl), (state.avg_ul, rates_ul), (state.avg_d2d, rates_d2d))]
    if floor:
        new = [np.maximum(a, state.epsilon_rate) for a in new]
    return state.replace(avg_dl=new[0], avg_ul=new[1], avg_d2d=new[2])


def objective_value(state: RateState) -> float:
    return float(
        np.dot(state.w_dl, np.log(state.avg_dl))
        + np.dot(state.w_ul, np.log(state.avg_ul))
        + np.dot(state.w_d2d, np.log(state.avg_d2d))
    )


def verify_telescoping_identity(
    state_before: RateState,
    sel: Selection,
    p: PowerAllocation,
    scenario: Scenario,
    table: CqiTable | None = None,
) -> float:
    """|O(t) - O(t-1) - sum(w) log(beta) - utility|, using the unfloored EMA step."""
    table = table or default_cqi_table()
    rates = link_rates(scenario, sel, p, table)
    after = update_average_rates(
        state_before, *full_rate_vectors(sel, rates, len(state_before.avg_dl), len(state_before.avg_d2d)), floor=False
    )
    lhs = objective_value(after) - objective_value(state_before)
    rhs = state_before.total_weight * math.log(state_before.beta) + utility_from_rates(sel, rates, state_before)
    return abs(lhs - rhs)
