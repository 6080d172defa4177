"""Node placement, path loss and the channel gain table of one random drop."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

MIN_DISTANCE = 1.0  # meters; reference distance floor for the log-distance model
RX_PLACEMENT_ATTEMPTS = 10_000


class Position(NamedTuple):
    x: float
    y: float


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    area_width: float = 60.0
    area_height: float = 50.0
    num_cues: int = 10
    num_d2d_links: int = 5
    max_d2d_length: float = 4.0
    bandwidth: float = 1e7
    nf_dl: float = 8.0
    nf_ul: float = 9.0
    nf_d2d: float = 8.0
    thermal_noise_density: float = -174.0
    p_fbs_max: float = 1.78
    p_cue_max: float = 0.78
    p_d2d_max: float = 0.78
    sic: float = 65.0
    seed: int = 0

    def __post_init__(self):
        if self.area_width <= 0 or self.area_height <= 0:
            raise ValueError("area dimensions must be positive")
        if self.num_cues <= 0 or self.num_d2d_links <= 0:
            raise ValueError("num_cues and num_d2d_links must be positive")
        if self.max_d2d_length <= 0:
            raise ValueError("max_d2d_length must be positive")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.sic < 0:
            raise ValueError("sic must be non-negative")

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)


def path_loss_db(distance):
    """NLOS path loss in dB; ``distance`` in meters (vectorized)."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path loss undefined for non-positive distance (co-located nodes)")
    out = 147.4 + 43.3 * np.log10(d / 1000.0)
    return float(out) if out.ndim == 0 else out


def _gain_from_distance(d, min_distance: float = MIN_DISTANCE):
    d = np.maximum(np.asarray(d, dtype=float), min_distance)
    return 10.0 ** (-np.asarray(path_loss_db(d)) / 10.0)


def channel_gain(a, b, min_distance: float = MIN_DISTANCE) -> float:
    """Linear power gain between two positions, with the distance floored at ``min_distance``."""
    d = math.hypot(a[0] - b[0], a[1] - b[1])
    return float(_gain_from_distance(d, min_distance))


def noise_power(bandwidth: float, noise_figure: float, density: float = -174.0) -> float:
    """Receiver noise power in watts."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    dbm = density + 10.0 * math.log10(bandwidth) + noise_figure
    return float(dbm_to_watt(dbm))


def _pairwise_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])


@dataclass(frozen=True)
class GainTable:
    """Linear gains for every (source, destination) pair the SINR formulas use.

    Index conventions: ``cue_to_cue[u, d]`` is the gain from CUE ``u`` to CUE ``d``;
    ``d2d_to_cue[l, c]`` from D2D transmitter ``l`` to CUE ``c``; ``cue_to_d2d_rx[c, l]``
    from CUE ``c`` to the receiver of D2D link ``l``.
    """

    fbs_to_cue: np.ndarray
    cue_to_fbs: np.ndarray
    cue_to_cue: np.ndarray
    d2d_direct: np.ndarray
    d2d_to_fbs: np.ndarray
    d2d_to_cue: np.ndarray
    fbs_to_d2d_rx: np.ndarray
    cue_to_d2d_rx: np.ndarray

    def all_gains(self) -> np.ndarray:
        return np.concatenate([np.ravel(getattr(self, f.name)) for f in dataclasses.fields(self)])


def build_gain_table(fbs, cues, d2d_tx, d2d_rx, min_distance: float = MIN_DISTANCE) -> GainTable:
    fbs = np.asarray(fbs, dtype=float).reshape(1, 2)
    g = lambda a, b: _gain_from_distance(_pairwise_distance(a, b), min_distance)
    fbs_cue = g(fbs, cues)[0]
    d2d_fbs = g(d2d_tx, fbs)[:, 0]
    return GainTable(
        fbs_to_cue=fbs_cue,
        cue_to_fbs=fbs_cue.copy(),
        cue_to_cue=g(cues, cues),
        d2d_direct=np.diag(g(d2d_tx, d2d_rx)).copy(),
        d2d_to_fbs=d2d_fbs,
        d2d_to_cue=g(d2d_tx, cues),
        fbs_to_d2d_rx=g(fbs, d2d_rx)[0],
        cue_to_d2d_rx=g(cues, d2d_rx),
    )


@dataclass(frozen=True)
class Scenario:
    """One drop: positions plus everything derived from them, in linear units."""

    config: ScenarioConfig
    fbs_position: Position
    cue_xy: np.ndarray  # (num_cues, 2)
    d2d_tx_xy: np.ndarray  # (num_d2d, 2)
    d2d_rx_xy: np.ndarray  # (num_d2d, 2)
    gains: GainTable = field(repr=False)
    noise_dl: float = field(repr=False)
    noise_ul: float = field(repr=False)
    noise_d2d: float = field(repr=False)
    p_max: np.ndarray = field(repr=False)  # watts, (dl, ul, d2d)
    sic_linear: float = field(repr=False)

    @property
    def num_cues(self) -> int:
        return len(self.cue_xy)

    @property
    def num_d2d(self) -> int:
        return len(self.d2d_tx_xy)

    @property
    def cue_positions(self) -> list[Position]:
        return [Position(float(x), float(y)) for x, y in self.cue_xy]

    @property
    def d2d_pairs(self) -> list[tuple[Position, Position]]:
        return [
            (Position(*map(float, tx)), Position(*map(float, rx)))
            for tx, rx in zip(self.d2d_tx_xy, self.d2d_rx_xy)
        ]

    @property
    def noise(self) -> np.ndarray:
        return np.array([self.noise_dl, self.noise_ul, self.noise_d2d])

    def with_config(self, config: ScenarioConfig) -> Scenario:
        """Same node positions, link budget recomputed from ``config``."""
        return build_scenario(config, self.cue_xy, self.d2d_tx_xy, self.d2d_rx_xy)

    def with_sic(self, sic_db: float) -> Scenario:
        return self.with_config(self.config.replace(sic=sic_db))


def build_scenario(config: ScenarioConfig, cue_xy, d2d_tx_xy, d2d_rx_xy) -> Scenario:
    fbs = Position(config.area_width / 2.0, config.area_height / 2.0)
    cue_xy = np.array(cue_xy, dtype=float).reshape(-1, 2)
    d2d_tx_xy = np.array(d2d_tx_xy, dtype=float).reshape(-1, 2)
    d2d_rx_xy = np.array(d2d_rx_xy, dtype=float).reshape(-1, 2)
    for arr in (cue_xy, d2d_tx_xy, d2d_rx_xy):
        arr.setflags(write=False)
    B, rho = config.bandwidth, config.thermal_noise_density
    p_max = dbm_to_watt([config.p_fbs_max, config.p_cue_max, config.p_d2d_max])
    p_max.setflags(write=False)
    return Scenario(
        config=config,
        fbs_position=fbs,
        cue_xy=cue_xy,
        d2d_tx_xy=d2d_tx_xy,
        d2d_rx_xy=d2d_rx_xy,
        gains=build_gain_table(fbs, cue_xy, d2d_tx_xy, d2d_rx_xy),
        noise_dl=noise_power(B, config.nf_dl, rho),
        noise_ul=noise_power(B, config.nf_ul, rho),
        noise_d2d=noise_power(B, config.nf_d2d, rho),
        p_max=p_max,
        sic_linear=float(db_to_linear(config.sic)),
    )


def _place_rx(rng: np.random.Generator, tx: np.ndarray, config: ScenarioConfig):
    # uniform over the disc, rejected outside the rectangle
    for _ in range(RX_PLACEMENT_ATTEMPTS):
        r = config.max_d2d_length * math.sqrt(rng.random())
        theta = 2.0 * math.pi * rng.random()
        x, y = tx[0] + r * math.cos(theta), tx[1] + r * math.sin(theta)
        inside = 0.0 <= x <= config.area_width and 0.0 <= y <= config.area_height
        if inside and math.hypot(x - tx[0], y - tx[1]) <= config.max_d2d_length:
            return np.array([x, y])
    return None


def generate_scenario(config: ScenarioConfig, seed: int | None = None) -> Scenario:
    """Draw a random drop; bit-identical for a fixed ``(config, seed)``.

    ``seed`` defaults to ``config.seed``.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    size = np.array([config.area_width, config.area_height])
    cues = rng.random((config.num_cues, 2)) * size
    tx_list, rx_list = [], []
    while len(tx_list) < config.num_d2d_links:
        tx = rng.random(2) * size
        rx = _place_rx(rng, tx, config)
        if rx is None:
            continue
        tx_list.append(tx)
        rx_list.append(rx)
    return build_scenario(config, cues, tx_list, rx_list)
