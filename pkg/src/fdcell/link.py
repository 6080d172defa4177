"""SINR of a scheduled (DL, UL, D2D) triple, CQI lookup and instantaneous rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from fdcell.geometry import Scenario

EMPTY = -1

# CQI 1..15: SINR thresholds (dB) at 10% BLER and the LTE 4-bit CQI spectral efficiencies.
DEFAULT_CQI_ROWS = (
    (-6.936, 0.1523),
    (-5.147, 0.2344),
    (-3.180, 0.3770),
    (-1.253, 0.6016),
    (0.761, 0.8770),
    (2.699, 1.1758),
    (4.694, 1.4766),
    (6.525, 1.9141),
    (8.573, 2.4063),
    (10.366, 2.7305),
    (12.289, 3.3223),
    (14.173, 3.9023),
    (15.888, 4.5234),
    (17.814, 5.1152),
    (19.829, 5.5547),
)


class Selection(NamedTuple):
    """CUE index served in DL, CUE index served in UL, active D2D link; ``EMPTY`` for none."""

    dl: int = EMPTY
    ul: int = EMPTY
    d2d: int = EMPTY

    @property
    def active(self) -> tuple[bool, bool, bool]:
        return (self.dl != EMPTY, self.ul != EMPTY, self.d2d != EMPTY)

    @property
    def num_active(self) -> int:
        return sum(self.active)

    @property
    def combination_class(self) -> str:
        names = [n for n, a in zip(("UL", "DL", "D2D"), (self.ul != EMPTY, self.dl != EMPTY, self.d2d != EMPTY)) if a]
        return "+".join(names) if names else "NONE"


class PowerAllocation(NamedTuple):
    p_dl: float = 0.0
    p_ul: float = 0.0
    p_d2d: float = 0.0


class SinrTriple(NamedTuple):
    sinr_dl: float = 0.0
    sinr_ul: float = 0.0
    sinr_d2d: float = 0.0


@dataclass(frozen=True)
class CqiTable:
    thresholds_db: np.ndarray
    efficiencies: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds_db, dtype=float)
        e = np.asarray(self.efficiencies, dtype=float)
        if t.ndim != 1 or t.shape != e.shape or len(t) == 0:
            raise ValueError("CQI table needs matching, non-empty threshold and efficiency columns")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(e) <= 0):
            raise ValueError("CQI thresholds and efficiencies must be strictly increasing")
        if e[0] <= 0:
            raise ValueError("CQI efficiencies must be positive")
        t.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "thresholds_db", t)
        object.__setattr__(self, "efficiencies", e)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> CqiTable:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 2:
            raise ValueError("CQI rows must be (threshold_db, efficiency) pairs")
        return cls(rows[:, 0], rows[:, 1])

    def __len__(self) -> int:
        return len(self.thresholds_db)

    @property
    def thresholds_linear(self) -> np.ndarray:
        return 10.0 ** (self.thresholds_db / 10.0)

    @property
    def class_efficiency(self) -> np.ndarray:
        """Efficiency per class index, with class 0 (out of range) mapping to 0."""
        return np.concatenate([[0.0], self.efficiencies])

    def cqi_class(self, sinr):
        """Highest class whose threshold the SINR (linear) reaches; 0 below the table."""
        sinr = np.asarray(sinr, dtype=float)
        with np.errstate(divide="ignore"):
            sinr_db = 10.0 * np.log10(sinr)
        return np.searchsorted(self.thresholds_db, sinr_db, side="right")


def default_cqi_table() -> CqiTable:
    return CqiTable.from_rows(DEFAULT_CQI_ROWS)


def spectral_efficiency(sinr, table: CqiTable):
    """Bits/s/Hz for a linear SINR; a right-continuous step function in dB."""
    out = table.class_efficiency[table.cqi_class(sinr)]
    return float(out) if np.ndim(out) == 0 else out


def instantaneous_rate(bandwidth: float, sinr, table: CqiTable):
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if sinr is None:
        return 0.0
    return bandwidth * spectral_efficiency(sinr, table)


def _check(sel: Selection, p: PowerAllocation):
    for active, power in zip(sel.active, p):
        if not active and power != 0:
            raise ValueError("an EMPTY slot must carry zero power")


def sinr_downlink(scenario: Scenario, sel: Selection, p: PowerAllocation) -> float:
    if sel.dl == EMPTY:
        raise ValueError("no DL CUE scheduled")
    _check(sel, p)
    g = scenario.gains
    interference = 0.0
    if sel.ul != EMPTY:
        interference += g.cue_to_cue[sel.ul, sel.dl] * p.p_ul
    if sel.d2d != EMPTY:
        interference += g.d2d_to_cue[sel.d2d, sel.dl] * p.p_d2d
    return g.fbs_to_cue[sel.dl] * p.p_dl / (scenario.noise_dl + interference)


def sinr_uplink(scenario: Scenario, sel: Selection, p: PowerAllocation, sic_linear: float | None = None) -> float:
    if sel.ul == EMPTY:
        raise ValueError("no UL CUE scheduled")
    _check(sel, p)
    sic = scenario.sic_linear if sic_linear is None else sic_linear
    if sic <= 0:
        raise ValueError("sic_linear must be positive")
    g = scenario.gains
    interference = p.p_dl / sic
    if sel.d2d != EMPTY:
        interference += g.d2d_to_fbs[sel.d2d] * p.p_d2d
    return g.cue_to_fbs[sel.ul] * p.p_ul / (scenario.noise_ul + interference)


def sinr_d2d(scenario: Scenario, sel: Selection, p: PowerAllocation) -> float:
    if sel.d2d == EMPTY:
        raise ValueError("no D2D link scheduled")
    _check(sel, p)
    g = scenario.gains
    interference = g.fbs_to_d2d_rx[sel.d2d] * p.p_dl
    if sel.ul != EMPTY:
        interference += g.cue_to_d2d_rx[sel.ul, sel.d2d] * p.p_ul
    return g.d2d_direct[sel.d2d] * p.p_d2d / (scenario.noise_d2d + interference)


def sinr_triple(scenario: Scenario, sel: Selection, p: PowerAllocation, sic_linear: float | None = None) -> SinrTriple:
    """All three SINRs; unused slots report 0."""
    return SinrTriple(
        sinr_downlink(scenario, sel, p) if sel.dl != EMPTY else 0.0,
        sinr_uplink(scenario, sel, p, sic_linear) if sel.ul != EMPTY else 0.0,
        sinr_d2d(scenario, sel, p) if sel.d2d != EMPTY else 0.0,
    )


def link_rates(scenario: Scenario, sel: Selection, p: PowerAllocation, table: CqiTable) -> np.ndarray:
    """Instantaneous (dl, ul, d2d) rates in bits/s; unscheduled slots are exactly 0."""
    sinrs = sinr_triple(scenario, sel, p)
    B = scenario.config.bandwidth
    return np.array([instantaneous_rate(B, s, table) if a else 0.0 for s, a in zip(sinrs, sel.active)])


@dataclass(frozen=True)
class LinkMatrix:
    """Linear interference structure of one selection.

    ``sinr = own * p / (noise + cross @ p)`` with rows ordered (DL receiver, FBS, D2D receiver)
    and columns ordered (FBS, UL CUE, D2D transmitter). Inactive slots have zero coupling.
    """

    own: np.ndarray
    cross: np.ndarray
    noise: np.ndarray
    active: np.ndarray

    def sinr(self, powers: np.ndarray) -> np.ndarray:
        powers = np.asarray(powers, dtype=float)
        interference = (powers[..., None, :] * self.cross).sum(axis=-1)
        return np.where(self.active, self.own * powers / (self.noise + interference), 0.0)


def link_matrix(scenario: Scenario, sel: Selection) -> LinkMatrix:
    g = scenario.gains
    d, u, l = sel
    active = np.array(sel.active)
    own = np.ones(3)
    cross = np.zeros((3, 3))
    if d != EMPTY:
        own[0] = g.fbs_to_cue[d]
        if u != EMPTY:
            cross[0, 1] = g.cue_to_cue[u, d]
        if l != EMPTY:
            cross[0, 2] = g.d2d_to_cue[l, d]
    if u != EMPTY:
        own[1] = g.cue_to_fbs[u]
        if d != EMPTY:
            cross[1, 0] = 1.0 / scenario.sic_linear
        if l != EMPTY:
            cross[1, 2] = g.d2d_to_fbs[l]
    if l != EMPTY:
        own[2] = g.d2d_direct[l]
        if d != EMPTY:
            cross[2, 0] = g.fbs_to_d2d_rx[l]
        if u != EMPTY:
            cross[2, 1] = g.cue_to_d2d_rx[u, l]
    return LinkMatrix(own=own, cross=cross, noise=scenario.noise, active=active)
