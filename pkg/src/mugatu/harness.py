"""Experiment orchestration: single trials, the two parameter sweeps and
grid-based gait search, with persisted artifacts.

Output layout for a sweep:
  <out>/config.json                       copy of the resolved configuration
  <out>/cells/<freq>_<amp>[_<diff>]/      telemetry.csv + metrics.json
  <out>/aggregate.csv                     one row per requested cell
  <out>/yaw_midlines.csv                  (turn sweeps) per-step midline series
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .analysis import GaitMetrics, PowerModel, analyze, segment_steps, find_window
from .dynamics import SimulationDiverged, simulate
from .gait import GaitCommand
from .model import WalkerParams, load_params, params_to_dict, params_from_dict

DEFAULT_FREQUENCIES = (1.3, 1.4, 1.5, 1.6, 1.7)
DEFAULT_AMPLITUDES = (33.4, 37.8, 42.0)
DEFAULT_AMPLITUDE_DIFFS = (-8.8, -4.4, 0.0, 4.4, 8.8)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    walker_path: str
    amp_left_deg: float = 42.0
    amp_right_deg: float = 42.0
    frequency_hz: float = 1.5
    break_mode: str = "midpoint"
    start_delay_s: float = 1.0
    duration_s: float = 40.0
    dt_s: float = 1e-4
    sample_rate_hz: float = 200.0
    frequencies_hz: tuple = DEFAULT_FREQUENCIES
    amplitudes_deg: tuple = DEFAULT_AMPLITUDES
    amplitude_diffs_deg: tuple = DEFAULT_AMPLITUDE_DIFFS
    output_dir: str = "out"
    parallelism: int = 1
    power_baseline_w: float = 2.0
    power_efficiency: float = 0.5
    grace_s: float = 10.0
    window_s: float = 15.0

    def __post_init__(self):
        # durations shorter than start delay + grace are allowed: the trial
        # runs and yields a recorded "no steady region" failure artifact
        if self.duration_s <= 0.0:
            raise ConfigError("duration must be positive")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")

    @property
    def gait(self) -> GaitCommand:
        return GaitCommand(math.radians(self.amp_left_deg),
                           math.radians(self.amp_right_deg),
                           self.frequency_hz, self.break_mode, self.start_delay_s)

    @property
    def power(self) -> PowerModel:
        return PowerModel(self.power_baseline_w, self.power_efficiency)

    def effective_parallelism(self) -> int:
        env = os.environ.get("MUGATU_SIM_THREADS")
        return int(env) if env else self.parallelism

    def to_dict(self) -> dict:
        return {
            "walker": self.walker_path,
            "gait": {
                "amp_left_deg": self.amp_left_deg,
                "amp_right_deg": self.amp_right_deg,
                "frequency_hz": self.frequency_hz,
                "break_mode": self.break_mode,
                "start_delay_s": self.start_delay_s,
            },
            "duration_s": self.duration_s,
            "dt_s": self.dt_s,
            "sample_rate_hz": self.sample_rate_hz,
            "sweep": {
                "frequencies_hz": list(self.frequencies_hz),
                "amplitudes_deg": list(self.amplitudes_deg),
                "amplitude_diffs_deg": list(self.amplitude_diffs_deg),
            },
            "output_dir": self.output_dir,
            "parallelism": self.parallelism,
            "power": {
                "baseline_w": self.power_baseline_w,
                "efficiency": self.power_efficiency,
            },
            "grace_s": self.grace_s,
            "window_s": self.window_s,
        }

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        try:
            gait = data.get("gait", {})
            sweep = data.get("sweep", {})
            power = data.get("power", {})
            walker = data["walker"]
            if base_dir is not None and not Path(walker).is_absolute():
                walker = str(base_dir / walker)
            return cls(
                walker_path=walker,
                amp_left_deg=gait.get("amp_left_deg", 42.0),
                amp_right_deg=gait.get("amp_right_deg", 42.0),
                frequency_hz=gait.get("frequency_hz", 1.5),
                break_mode=gait.get("break_mode", "midpoint"),
                start_delay_s=gait.get("start_delay_s", 1.0),
                duration_s=data.get("duration_s", 40.0),
                dt_s=data.get("dt_s", 1e-4),
                sample_rate_hz=data.get("sample_rate_hz", 200.0),
                frequencies_hz=tuple(sweep.get("frequencies_hz", DEFAULT_FREQUENCIES)),
                amplitudes_deg=tuple(sweep.get("amplitudes_deg", DEFAULT_AMPLITUDES)),
                amplitude_diffs_deg=tuple(sweep.get("amplitude_diffs_deg",
                                                    DEFAULT_AMPLITUDE_DIFFS)),
                output_dir=data.get("output_dir", "out"),
                parallelism=data.get("parallelism", 1),
                power_baseline_w=power.get("baseline_w", 2.0),
                power_efficiency=power.get("efficiency", 0.5),
                grace_s=data.get("grace_s", 10.0),
                window_s=data.get("window_s", 15.0),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"invalid experiment config: {err}") from err

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        return cls.from_dict(data, base_dir=path.parent)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SweepResult:
    """Metrics per requested cell; failed and unstable cells stay present."""

    cells: dict
    provenance: dict = field(default_factory=dict)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.10g}"
    return str(value)


def _run_cell(walker_dict: dict, cmd: GaitCommand, config: ExperimentConfig,
              cell_dir: Path, echo: dict):
    """Simulate + analyze one trial and persist its artifacts.

    Returns (metrics, step mid-times within the steady window). All failures
    become recorded artifacts, never dropped cells.
    """
    params = params_from_dict(walker_dict)
    cell_dir.mkdir(parents=True, exist_ok=True)
    step_times = []
    try:
        telemetry = simulate(params, cmd, config.duration_s, config.dt_s,
                             config.sample_rate_hz, config.power_baseline_w,
                             config.power_efficiency)
    except SimulationDiverged as err:
        telemetry = err.telemetry
        nan = float("nan")
        metrics = GaitMetrics(nan, nan, nan, 0, (), nan, nan, False, False,
                              error="simulation diverged")
    else:
        metrics = analyze(telemetry, params, config.power,
                          gait_period=cmd.period, grace=config.grace_s,
                          window_length=config.window_s)
        if metrics.error is None:
            window = find_window(telemetry, config.grace_s, config.window_s)
            step_times = [0.5 * (s.start_time + s.end_time)
                          for s in segment_steps(telemetry, window)]
    if telemetry is not None:
        telemetry.to_csv(cell_dir / "telemetry.csv")
    payload = {"input": echo, "metrics": metrics.to_dict(),
               "step_mid_times": step_times}
    (cell_dir / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n")
    return metrics, step_times


def _cell_worker(args):
    return _run_cell(*args)


def run_trial(config: ExperimentConfig, out_dir=None):
    """Single trial at the configured gait; returns its metrics."""
    params = _load_walker(config)
    out = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    echo = config.to_dict()
    metrics, _ = _run_cell(params_to_dict(params), config.gait, config, out, echo)
    return metrics


def _load_walker(config: ExperimentConfig) -> WalkerParams:
    try:
        return load_params(config.walker_path)
    except (OSError, KeyError, ValueError) as err:
        raise ConfigError(
            f"invalid walker file {config.walker_path}: {err}") from err


def _run_cells(config: ExperimentConfig, jobs):
    """Execute trial jobs serially or in a process pool; order-preserving."""
    workers = config.effective_parallelism()
    if workers <= 1 or len(jobs) <= 1:
        return [_cell_worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_cell_worker, jobs))


def _write_sweep_common(config: ExperimentConfig, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")


def _provenance(config: ExperimentConfig) -> dict:
    return {"config_hash": config.config_hash(), "code_version": __version__}


def run_speed_sweep(config: ExperimentConfig, out_dir=None) -> SweepResult:
    """Cartesian frequency x amplitude sweep with symmetric commands."""
    params = _load_walker(config)
    walker_dict = params_to_dict(params)
    out = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    _write_sweep_common(config, out)
    jobs = []
    keys = []
    for freq in config.frequencies_hz:
        for amp in config.amplitudes_deg:
            cmd = GaitCommand(math.radians(amp), math.radians(amp), freq,
                              config.break_mode, config.start_delay_s)
            cfg = replace(config, frequency_hz=freq, amp_left_deg=amp,
                          amp_right_deg=amp)
            cell = out / "cells" / f"{freq:g}_{amp:g}"
            echo = {"frequency_hz": freq, "amplitude_deg": amp,
                    "break_mode": config.break_mode}
            jobs.append((walker_dict, cmd, cfg, cell, echo))
            keys.append((freq, amp))
    results = _run_cells(config, jobs)
    cells = {k: m for k, (m, _) in zip(keys, results)}
    lines = ["frequency_hz,amplitude_deg,stable,speed,roll_amp_mean,roll_amp_std,cot_total"]
    for (freq, amp), metrics in cells.items():
        lines.append(",".join([
            _fmt(float(freq)), _fmt(float(amp)), _fmt(metrics.stable),
            _fmt(metrics.mean_speed), _fmt(metrics.roll_amp_mean),
            _fmt(metrics.roll_amp_std), _fmt(metrics.cot_total)]))
    (out / "aggregate.csv").write_text("\n".join(lines) + "\n")
    return SweepResult(cells=cells, provenance=_provenance(config))


def turn_amplitudes(base_deg: float, diff_deg: float):
    """Left/right amplitudes for an amplitude difference (left minus right);
    positive difference enlarges the left swing."""
    return base_deg + max(diff_deg, 0.0), base_deg + max(-diff_deg, 0.0)


def run_turn_sweep(config: ExperimentConfig, out_dir=None,
                   base_amplitude_deg: float = 33.4) -> SweepResult:
    """Frequency x amplitude-difference sweep for steering characterization."""
    params = _load_walker(config)
    walker_dict = params_to_dict(params)
    out = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    _write_sweep_common(config, out)
    jobs = []
    keys = []
    for freq in config.frequencies_hz:
        for diff in config.amplitude_diffs_deg:
            amp_l, amp_r = turn_amplitudes(base_amplitude_deg, diff)
            cmd = GaitCommand(math.radians(amp_l), math.radians(amp_r), freq,
                              config.break_mode, config.start_delay_s)
            cfg = replace(config, frequency_hz=freq, amp_left_deg=amp_l,
                          amp_right_deg=amp_r)
            cell = out / "cells" / f"{freq:g}_{base_amplitude_deg:g}_{diff:+g}"
            echo = {"frequency_hz": freq, "base_amplitude_deg": base_amplitude_deg,
                    "amplitude_diff_deg": diff, "break_mode": config.break_mode}
            jobs.append((walker_dict, cmd, cfg, cell, echo))
            keys.append((freq, diff))
    results = _run_cells(config, jobs)
    cells = {k: m for k, (m, _) in zip(keys, results)}
    lines = ["frequency_hz,amplitude_diff_deg,stable,yaw_rate_deg_s,speed,"
             "roll_amp_mean,roll_amp_std,cot_total"]
    midline_lines = ["frequency_hz,amplitude_diff_deg,step,t_mid_s,yaw_rad"]
    for ((freq, diff), metrics), (_, step_times) in zip(cells.items(), results):
        yaw_rate = math.degrees(metrics.mean_yaw_rate) \
            if math.isfinite(metrics.mean_yaw_rate) else float("nan")
        lines.append(",".join([
            _fmt(float(freq)), _fmt(float(diff)), _fmt(metrics.stable),
            _fmt(yaw_rate), _fmt(metrics.mean_speed), _fmt(metrics.roll_amp_mean),
            _fmt(metrics.roll_amp_std), _fmt(metrics.cot_total)]))
        for (idx, value), t_mid in zip(metrics.yaw_midline, step_times):
            midline_lines.append(",".join([
                _fmt(float(freq)), _fmt(float(diff)), str(idx),
                _fmt(float(t_mid)), _fmt(float(value))]))
    (out / "aggregate.csv").write_text("\n".join(lines) + "\n")
    (out / "yaw_midlines.csv").write_text("\n".join(midline_lines) + "\n")
    return SweepResult(cells=cells, provenance=_provenance(config))


@dataclass
class SearchResult:
    feasible: bool
    objective: str
    ranking: list  # dicts with frequency_hz, amplitude_deg, speed, cot_total


def gait_search(config: ExperimentConfig, objective: str = "max-speed",
                sweep: SweepResult | None = None, out_dir=None) -> SearchResult:
    """Rank stable sweep cells by objective (max-speed or min-cot).

    Ties break toward lower frequency, then lower amplitude. Unstable grids
    yield an explicit infeasible result.
    """
    if objective not in ("max-speed", "min-cot"):
        raise ConfigError(f"unknown objective {objective!r}")
    if sweep is None:
        sweep = run_speed_sweep(config, out_dir=out_dir)
    rows = []
    for (freq, amp), metrics in sweep.cells.items():
        if not metrics.stable:
            continue
        rows.append({"frequency_hz": freq, "amplitude_deg": amp,
                     "speed": metrics.mean_speed, "cot_total": metrics.cot_total})
    if objective == "max-speed":
        rows.sort(key=lambda r: (-r["speed"], r["frequency_hz"], r["amplitude_deg"]))
    else:
        rows.sort(key=lambda r: (r["cot_total"], r["frequency_hz"], r["amplitude_deg"]))
    return SearchResult(feasible=bool(rows), objective=objective, ranking=rows)
