"""Command line entry point: ``fdcell simulate | sweep-sic | sweep-weight``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from fdcell import __version__
from fdcell.config import ConfigError, config_to_dict, load_config
from fdcell.metrics import (
    LINK_CLASSES,
    ExperimentConfig,
    ExperimentRunner,
    MetricsReport,
    combination_distribution,
    sic_sweep,
    throughput_cdf,
    weight_sweep,
)
from fdcell.scheduler import COMBINATION_CLASSES

log = logging.getLogger("fdcell")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON experiment config")
    common.add_argument("--scenarios", type=int, help="number of random scenarios")
    common.add_argument("--ttis", type=int, help="TTIs per scenario")
    common.add_argument("--seed", type=int, help="base scenario seed; scenario i uses seed + i")
    common.add_argument("--method", choices=("frontier", "pattern"), help="DPA/HD power solver")
    common.add_argument("--out", default="out", help="output directory (created if missing)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fdcell", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="one mode: throughput CDFs and combination shares")
    sim.add_argument("--mode", choices=("fpa", "dpa", "hd"), default="dpa")
    sim.add_argument("--sic-db", type=float, help="self-interference cancellation in dB")
    sim.add_argument("--w-d2d", type=float, help="D2D weightage in (0, 1]")

    sic = sub.add_parser("sweep-sic", parents=[common], help="aggregate throughput vs SIC for every mode")
    sic.add_argument("--values", type=_float_list, default=[65, 75, 85, 95, 105], help="SIC values in dB, e.g. '65,75,85'")
    sic.add_argument("--modes", default="fpa,dpa,hd")

    w = sub.add_parser("sweep-weight", parents=[common], help="DPA throughput CDFs vs D2D weightage")
    w.add_argument("--values", type=_float_list, default=[0.2, 0.4, 0.6, 0.8, 1.0], help="weightages, e.g. '0.2,0.6,1'")
    w.add_argument("--sic-db", type=float)
    return p


def _experiment(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    exp = {}
    if args.scenarios is not None:
        exp["num_scenarios"] = args.scenarios
    if args.ttis is not None:
        exp["num_ttis"] = args.ttis
    if args.seed is not None:
        exp["seed"] = args.seed
    try:
        if getattr(args, "sic_db", None) is not None and args.command == "simulate":
            exp["scenario"] = cfg.scenario.replace(sic=args.sic_db)
        if getattr(args, "w_d2d", None) is not None:
            if not 0 < args.w_d2d <= 1:
                raise ConfigError("--w-d2d must lie in (0, 1]")
            exp["utility"] = dataclasses.replace(cfg.utility, w_d2d=args.w_d2d)
        if args.method is not None:
            exp["optimizer"] = dataclasses.replace(cfg.optimizer, method=args.method)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = dataclasses.replace(cfg, **exp)
    if cfg.num_scenarios < 1 or cfg.num_ttis < 1:
        raise ConfigError("--scenarios and --ttis must be >= 1")
    return cfg


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _manifest(out: Path, cfg: ExperimentConfig, command: str, results: dict, started: float) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": config_to_dict(cfg),
        "scenario_seeds": cfg.scenario_seeds(),
        "elapsed_s": round(time.time() - started, 3),
        "results": results,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float))


def cmd_simulate(args, cfg: ExperimentConfig, out: Path) -> dict:
    traces = ExperimentRunner(cfg).run(args.mode)
    report = MetricsReport.from_traces(traces)
    for cls in LINK_CLASSES:
        _write_csv(out / f"cdf_{cls.lower()}.csv", ["throughput_bps", "cdf"], throughput_cdf(traces, cls))
    pct = combination_distribution(traces)
    _write_csv(out / "combos.csv", ["combination", "percent"], [(c, pct[c]) for c in (*COMBINATION_CLASSES, "simultaneous", "D2D transmissions")])
    return {
        "mode": args.mode,
        "aggregate_throughput_bps": report.aggregate_throughput,
        "energy_efficiency_bits_per_joule": report.energy_efficiency,
        "mean_throughput_bps": {c: float(np.mean(v)) for c, v in report.throughputs.items()},
        "combinations_percent": pct,
    }


def cmd_sweep_sic(args, cfg: ExperimentConfig, out: Path) -> dict:
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    bad = set(modes) - {"fpa", "dpa", "hd"}
    if bad or not modes or not args.values:
        raise ConfigError(f"bad --modes/--values (unknown modes: {sorted(bad)})")
    table = sic_sweep(ExperimentRunner(cfg), args.values, modes)
    _write_csv(out / "sic_sweep.csv", ["sic_db", *(f"{m}_bps" for m in modes)],
               [(s, *(table[m][k] for m in modes)) for k, s in enumerate(args.values)])
    return {"sic_db": args.values, "aggregate_throughput_bps": table}


def cmd_sweep_weight(args, cfg: ExperimentConfig, out: Path) -> dict:
    if not args.values or any(not 0 < v <= 1 for v in args.values):
        raise ConfigError("--values must be weightages in (0, 1]")
    sweep = weight_sweep(ExperimentRunner(cfg), args.values, args.sic_db)
    rows = []
    for w, per_class in sweep.items():
        for cls, samples in per_class.items():
            x = np.sort(samples)
            rows += [(w, cls, float(v), (i + 1) / len(x)) for i, v in enumerate(x)]
    _write_csv(out / "weight_sweep.csv", ["w_d2d", "link_class", "throughput_bps", "cdf"], rows)
    return {"median_throughput_bps": {str(w): {c: float(np.median(v)) for c, v in pc.items()} for w, pc in sweep.items()}}


COMMANDS = {"simulate": cmd_simulate, "sweep-sic": cmd_sweep_sic, "sweep-weight": cmd_sweep_weight}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    started = time.time()
    try:
        cfg = _experiment(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        log.info("running %s: %d scenarios x %d TTIs", args.command, cfg.num_scenarios, cfg.num_ttis)
        results = COMMANDS[args.command](args, cfg, out)
    except ConfigError as exc:
        print(f"fdcell: config error: {exc}", file=sys.stderr)
        return 2
    _manifest(out, cfg, " ".join(sys.argv[:1] + list(argv if argv is not None else sys.argv[1:])), results, started)
    log.info("wrote %s", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
