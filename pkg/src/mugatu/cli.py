"""Command line interface.

Exit codes: 0 success, 1 configuration error, 2 simulation divergence,
3 no feasible gait found by the search.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import GaitMetrics
from .dynamics import SimulationDiverged
from .harness import ConfigError, ExperimentConfig, gait_search, run_speed_sweep, \
    run_trial, run_turn_sweep
from .model import check_design_rules, load_params

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_INFEASIBLE = 3


def _add_common_flags(parser):
    parser.add_argument("--out", metavar="DIR", help="output directory override")
    parser.add_argument("--dt", type=float, help="integration step override (s)")
    parser.add_argument("--duration", type=float, help="trial duration override (s)")
    parser.add_argument("--parallelism", type=int, help="worker count override")


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.dt is not None:
        overrides["dt_s"] = args.dt
    if args.duration is not None:
        overrides["duration_s"] = args.duration
    if args.parallelism is not None:
        overrides["parallelism"] = args.parallelism
    return replace(config, **overrides) if overrides else config


def _cmd_check_rules(args) -> int:
    params = load_params(args.walker)
    report = check_design_rules(params)
    for rule in report.rules:
        status = "PASS" if rule.passed else "FAIL"
        tag = " (advisory)" if rule.advisory else ""
        print(f"rule {rule.number} [{status}]{tag} {rule.name}: "
              f"measured {rule.measured:.5g}, threshold {rule.threshold:.5g}")
        print(f"  {rule.explanation}")
    print(f"yaw inertia ratio (one body / total): {report.spin_inertia_ratio:.3f}")
    print("required rules pass" if report.all_required_pass
          else "required rules FAIL")
    return EXIT_OK


def _print_metrics(metrics: GaitMetrics) -> None:
    if metrics.error:
        print(f"trial failed: {metrics.error}")
        return
    print(f"stable: {metrics.stable}  speed: {metrics.mean_speed:.4f} m/s  "
          f"steps: {metrics.steps}  cot: {metrics.cot_total:.3g}")
    if math.isfinite(metrics.mean_yaw_rate):
        print(f"yaw rate: {math.degrees(metrics.mean_yaw_rate):.3f} deg/s  "
              f"roll amp: {math.degrees(metrics.roll_amp_mean):.2f} deg")


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    metrics = run_trial(config)
    _print_metrics(metrics)
    if metrics.error == "simulation diverged":
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_speed_sweep(args) -> int:
    config = _load_config(args)
    result = run_speed_sweep(config)
    stable = sum(1 for m in result.cells.values() if m.stable)
    print(f"speed sweep: {len(result.cells)} cells, {stable} stable -> "
          f"{Path(config.output_dir) / 'aggregate.csv'}")
    return EXIT_OK


def _cmd_turn_sweep(args) -> int:
    config = _load_config(args)
    result = run_turn_sweep(config)
    stable = sum(1 for m in result.cells.values() if m.stable)
    print(f"turn sweep: {len(result.cells)} cells, {stable} stable -> "
          f"{Path(config.output_dir) / 'aggregate.csv'}")
    return EXIT_OK


def _cmd_search(args) -> int:
    config = _load_config(args)
    objective = {"speed": "max-speed", "cot": "min-cot"}[args.objective]
    result = gait_search(config, objective=objective)
    if not result.feasible:
        print("no feasible gait")
        return EXIT_INFEASIBLE
    print(json.dumps(result.ranking, indent=2))
    best = result.ranking[0]
    print(f"best ({objective}): {best['frequency_hz']:g} Hz, "
          f"{best['amplitude_deg']:g} deg")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mugatu",
        description="Simulator and experiment harness for a single-actuator "
                    "two-body bipedal walker")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-rules", help="evaluate the design rules of a walker file")
    p.add_argument("walker", help="walker JSON file")
    p.set_defaults(func=_cmd_check_rules)

    for name, func, help_text in (
            ("simulate", _cmd_simulate, "run a single trial"),
            ("speed-sweep", _cmd_speed_sweep, "frequency x amplitude sweep"),
            ("turn-sweep", _cmd_turn_sweep, "frequency x amplitude-difference sweep")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="experiment config JSON file")
        _add_common_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("search", help="grid search over stable gait cells")
    p.add_argument("config", help="experiment config JSON file")
    p.add_argument("--objective", choices=("speed", "cot"), default="speed")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_search)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, KeyError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
