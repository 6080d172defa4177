"""Experiment configuration files (YAML or JSON).

Sections mirror the config dataclasses; every key is optional::

    scenario:   {num_cues: 10, num_d2d_links: 5, sic: 65.0, ...}   # ScenarioConfig
    utility:    {beta: 0.9, epsilon_rate: 1000.0, w_d2d: 1.0}     # UtilityConfig
    optimizer:  {method: frontier, floors: {min_sinr_dl: 0.2}}    # OptimizerConfig, floors linear
    experiment: {num_scenarios: 20, num_ttis: 2000, seed: 0, tti_duration: 0.001}
    cqi_table:  [[-6.936, 0.1523], [-5.147, 0.2344], ...]          # (threshold dB, bits/s/Hz)
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import yaml

from fdcell.geometry import ScenarioConfig
from fdcell.link import CqiTable, default_cqi_table
from fdcell.metrics import ExperimentConfig
from fdcell.optimizer import OptimizerConfig, SinrFloors
from fdcell.utility import UtilityConfig

SECTIONS = ("scenario", "utility", "optimizer", "experiment", "cqi_table")
EXPERIMENT_KEYS = ("num_scenarios", "num_ttis", "seed", "tti_duration")


class ConfigError(ValueError):
    pass


def _build(cls, section: str, values):
    if values is None:
        return cls()
    if not isinstance(values, dict):
        raise ConfigError(f"[{section}] must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def experiment_from_dict(data: dict | None) -> ExperimentConfig:
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(unknown)}")

    opt = data.get("optimizer") or {}
    if not isinstance(opt, dict):
        raise ConfigError("[optimizer] must be a mapping")
    opt = dict(opt)
    if "floors" in opt and opt["floors"] is not None:
        opt["floors"] = _build(SinrFloors, "optimizer.floors", opt["floors"])
    if "multistart_points" in opt:
        opt["multistart_points"] = tuple(opt["multistart_points"])

    exp = data.get("experiment") or {}
    if not isinstance(exp, dict):
        raise ConfigError("[experiment] must be a mapping")
    bad = sorted(set(exp) - set(EXPERIMENT_KEYS))
    if bad:
        raise ConfigError(f"[experiment] unknown keys: {', '.join(bad)}")

    table = default_cqi_table()
    if data.get("cqi_table") is not None:
        try:
            table = CqiTable.from_rows(data["cqi_table"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[cqi_table] {exc}") from exc

    if not all(isinstance(exp.get(k, 1), int) for k in ("num_scenarios", "num_ttis", "seed")):
        raise ConfigError("[experiment] num_scenarios, num_ttis and seed must be integers")
    cfg = ExperimentConfig(
        scenario=_build(ScenarioConfig, "scenario", data.get("scenario")),
        utility=_build(UtilityConfig, "utility", data.get("utility")),
        optimizer=_build(OptimizerConfig, "optimizer", opt),
        cqi_table=table,
        **exp,
    )
    if cfg.num_scenarios < 1 or cfg.num_ttis < 1 or cfg.tti_duration <= 0:
        raise ConfigError("[experiment] num_scenarios and num_ttis must be >= 1 and tti_duration > 0")
    return cfg


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return experiment_from_dict({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return experiment_from_dict(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain-data view of a config, as written to the run manifest."""
    opt = dataclasses.asdict(cfg.optimizer)
    opt["multistart_points"] = list(opt["multistart_points"])
    return {
        "scenario": dataclasses.asdict(cfg.scenario),
        "utility": dataclasses.asdict(cfg.utility),
        "optimizer": opt,
        "experiment": {k: getattr(cfg, k) for k in EXPERIMENT_KEYS},
        "cqi_table": [[float(t), float(e)] for t, e in zip(cfg.cqi_table.thresholds_db, cfg.cqi_table.efficiencies)],
    }
