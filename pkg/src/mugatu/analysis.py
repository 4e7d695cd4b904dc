"""Trial metrics: steady window, speed, roll statistics, yaw midline, cost
of transport and stability classification.

All functions are pure consumers of Telemetry. Angles are radians and
speeds m/s throughout; unit conversion is left to presentation layers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .dynamics import Telemetry
from .model import GRAVITY, WalkerParams

PEAK_PROMINENCE = math.radians(0.5)
MOVEMENT_THRESHOLD = math.radians(0.5)


class AnalysisError(ValueError):
    pass


class NoSteadyRegion(AnalysisError):
    pass


class NoOscillation(AnalysisError):
    pass


class NoProgress(AnalysisError):
    pass


@dataclass(frozen=True)
class AnalysisWindow:
    """Steady-state region of interest of one trial."""

    first_movement_time: float
    steady_start: float
    steady_end: float

    def __post_init__(self):
        if not self.steady_start < self.steady_end:
            raise NoSteadyRegion("no steady region")

    @property
    def duration(self) -> float:
        return self.steady_end - self.steady_start


@dataclass(frozen=True)
class PowerModel:
    """Constant electronics baseline plus drive power at fixed efficiency."""

    baseline_power: float = 2.0
    efficiency: float = 0.5

    def __post_init__(self):
        if self.baseline_power < 0.0:
            raise ValueError("baseline_power must be non-negative")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")


@dataclass
class GaitMetrics:
    """Per-trial derived quantities."""

    mean_speed: float
    roll_amp_mean: float
    roll_amp_std: float
    steps: int
    yaw_midline: tuple
    cot_total: float
    cot_mechanical: float
    stable: bool
    cap_extent_flag: bool
    mean_yaw_rate: float = float("nan")
    fell: bool = False
    fall_time: float | None = None
    error: str | None = None

    def __post_init__(self):
        for v in (self.cot_total, self.cot_mechanical):
            if np.isfinite(v) and v < 0.0:
                raise ValueError("cost of transport cannot be negative")
        if np.isfinite(self.roll_amp_std) and self.roll_amp_std < 0.0:
            raise ValueError("roll_amp_std cannot be negative")
        if self.stable and self.steps < 4:
            raise ValueError("a stable trial needs at least 4 steps in the window")

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not np.isfinite(v):
                return None
            return v
        return {
            "mean_speed": clean(self.mean_speed),
            "roll_amp_mean": clean(self.roll_amp_mean),
            "roll_amp_std": clean(self.roll_amp_std),
            "steps": self.steps,
            "yaw_midline": [[int(i), float(v)] for i, v in self.yaw_midline],
            "cot_total": clean(self.cot_total),
            "cot_mechanical": clean(self.cot_mechanical),
            "stable": self.stable,
            "cap_extent_flag": self.cap_extent_flag,
            "mean_yaw_rate": clean(self.mean_yaw_rate),
            "fell": self.fell,
            "fall_time": self.fall_time,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaitMetrics":
        def num(v):
            return float("nan") if v is None else v
        return cls(
            mean_speed=num(data["mean_speed"]),
            roll_amp_mean=num(data["roll_amp_mean"]),
            roll_amp_std=num(data["roll_amp_std"]),
            steps=data["steps"],
            yaw_midline=tuple((i, v) for i, v in data["yaw_midline"]),
            cot_total=num(data["cot_total"]),
            cot_mechanical=num(data["cot_mechanical"]),
            stable=data["stable"],
            cap_extent_flag=data["cap_extent_flag"],
            mean_yaw_rate=num(data.get("mean_yaw_rate")),
            fell=data.get("fell", False),
            fall_time=data.get("fall_time"),
            error=data.get("error"),
        )


def _window_mask(telemetry: Telemetry, window: AnalysisWindow) -> np.ndarray:
    t = telemetry.t
    return (t >= window.steady_start - 1e-12) & (t <= window.steady_end + 1e-12)


def find_window(telemetry: Telemetry, grace: float = 10.0,
                window_length: float = 15.0) -> AnalysisWindow:
    """Locate the steady region: grace seconds after first commanded motion,
    truncated at the fall time or end of trial."""
    moving = np.abs(telemetry.hip_cmd) > MOVEMENT_THRESHOLD
    if not np.any(moving):
        raise NoSteadyRegion("no steady region")
    first = float(telemetry.t[np.argmax(moving)])
    start = first + grace
    end = min(start + window_length, telemetry.end_time)
    if end <= start:
        raise NoSteadyRegion("no steady region")
    return AnalysisWindow(first_movement_time=first, steady_start=start, steady_end=end)


def forward_speed(telemetry: Telemetry, window: AnalysisWindow) -> float:
    """Straight-line horizontal CG displacement over the window duration."""
    mask = _window_mask(telemetry, window)
    x = telemetry.cg_x[mask]
    y = telemetry.cg_y[mask]
    t = telemetry.t[mask]
    return float(math.hypot(x[-1] - x[0], y[-1] - y[0]) / (t[-1] - t[0]))


def roll_amplitude(telemetry: Telemetry, window: AnalysisWindow,
                   gait_period: float | None = None):
    """Mean and population std of |roll| at the oscillation peaks.

    Peaks of both signs count; prominence threshold rejects contact ringing.
    ``gait_period`` sets the minimum peak spacing (a quarter period).
    """
    mask = _window_mask(telemetry, window)
    roll = telemetry.roll[mask]
    distance = None
    if gait_period is not None:
        distance = max(1, int(round(0.25 * gait_period * telemetry.sample_rate)))
    peaks_hi, _ = find_peaks(roll, prominence=PEAK_PROMINENCE, distance=distance)
    peaks_lo, _ = find_peaks(-roll, prominence=PEAK_PROMINENCE, distance=distance)
    amps = np.abs(roll[np.concatenate([peaks_hi, peaks_lo])])
    if len(amps) < 2:
        raise NoOscillation("no oscillation")
    return float(np.mean(amps)), float(np.std(amps))


@dataclass(frozen=True)
class StepInterval:
    start_time: float
    end_time: float
    side: str  # leg that is forward during this interval


def segment_steps(telemetry: Telemetry, window: AnalysisWindow) -> list:
    """Split the window into steps at zero crossings of the actual hip angle.

    Each interval between consecutive crossings is one step; the label is
    the leg that is forward (sign of the hip angle) in that interval.
    """
    mask = _window_mask(telemetry, window)
    t = telemetry.t[mask]
    hip = telemetry.hip_act[mask]
    sign = np.sign(hip)
    # carry the previous sign over exact zeros so touching zero is not a crossing
    for i in range(1, len(sign)):
        if sign[i] == 0.0:
            sign[i] = sign[i - 1]
    crossings = np.nonzero(np.diff(sign) != 0.0)[0] + 1
    steps = []
    for a, b in zip(crossings[:-1], crossings[1:]):
        side = "left" if np.mean(hip[a:b]) > 0.0 else "right"
        steps.append(StepInterval(float(t[a]), float(t[b]), side))
    return steps


def yaw_midline(telemetry: Telemetry, steps) -> list:
    """Per-step midpoint of the (unwrapped) yaw signal: (max+min)/2."""
    t = telemetry.t
    yaw = np.unwrap(telemetry.yaw)
    out = []
    for k, step in enumerate(steps):
        mask = (t >= step.start_time - 1e-12) & (t <= step.end_time + 1e-12)
        seg = yaw[mask]
        out.append((k, float(0.5 * (seg.max() + seg.min()))))
    return out


def yaw_rate_from_midline(steps, midline) -> float:
    """Least-squares slope (rad/s) of the yaw midline against step mid-times."""
    if len(midline) < 2:
        return float("nan")
    times = np.array([0.5 * (s.start_time + s.end_time) for s in steps])
    vals = np.array([v for _, v in midline])
    slope = np.polyfit(times, vals, 1)[0]
    return float(slope)


def cost_of_transport(telemetry: Telemetry, window: AnalysisWindow,
                      power: PowerModel, params: WalkerParams):
    """(total, mechanical-only) cost of transport over the window.

    Electrical power is the baseline plus the positive mechanical hip power
    divided by drive efficiency; distance is the straight-line displacement.
    Negative (backdriven) mechanical power contributes zero.
    """
    mask = _window_mask(telemetry, window)
    t = telemetry.t[mask]
    x = telemetry.cg_x[mask]
    y = telemetry.cg_y[mask]
    dist = math.hypot(x[-1] - x[0], y[-1] - y[0])
    if dist <= 0.0:
        raise NoProgress("no progress")
    hip_rate = np.gradient(telemetry.hip_act, telemetry.t)[mask]
    mech = np.maximum(telemetry.tau[mask] * hip_rate, 0.0)
    e_mech = float(np.trapezoid(mech, t))
    e_total = power.baseline_power * (t[-1] - t[0]) + e_mech / power.efficiency
    weight_dist = params.total_mass * GRAVITY * dist
    return e_total / weight_dist, e_mech / weight_dist


def classify_stability(telemetry: Telemetry, window: AnalysisWindow,
                       foot_radius: float) -> bool:
    """Stable: survived the window, kept stepping, and made real progress."""
    if telemetry.fell and telemetry.fall_time <= window.steady_end:
        return False
    steps = segment_steps(telemetry, window)
    if len(steps) < 4:
        return False
    if any(a.side == b.side for a, b in zip(steps[:-1], steps[1:])):
        return False
    mask = _window_mask(telemetry, window)
    x = telemetry.cg_x[mask]
    y = telemetry.cg_y[mask]
    return math.hypot(x[-1] - x[0], y[-1] - y[0]) > foot_radius


def cap_extent_exceeded(telemetry: Telemetry, params: WalkerParams) -> bool:
    """True if a loaded foot tilted past the modeled cap half-angle.

    Feet are simulated as full spheres; this flags samples where a real
    hemispherical cap would have rolled onto its rim.
    """
    roll = telemetry.roll
    pitch = telemetry.pitch
    hip = telemetry.hip_act
    # body z-axis tilt from vertical; right body adds the hip angle in pitch
    cos_tilt_left = np.cos(roll) * np.cos(pitch)
    cos_tilt_right = np.cos(roll) * np.cos(pitch + hip)
    limit = math.cos(params.cap_half_angle)
    left_bad = (telemetry.n_left > 0.0) & (cos_tilt_left < limit)
    right_bad = (telemetry.n_right > 0.0) & (cos_tilt_right < limit)
    return bool(np.any(left_bad) or np.any(right_bad))


def analyze(telemetry: Telemetry, params: WalkerParams,
            power: PowerModel | None = None,
            gait_period: float | None = None,
            grace: float = 10.0, window_length: float = 15.0) -> GaitMetrics:
    """Full metric extraction for one trial; analysis failures are recorded
    in the metrics instead of raised."""
    power = power or PowerModel()
    nan = float("nan")
    try:
        window = find_window(telemetry, grace=grace, window_length=window_length)
    except AnalysisError as err:
        return GaitMetrics(nan, nan, nan, 0, (), nan, nan, False, False,
                           fell=telemetry.fell, fall_time=telemetry.fall_time,
                           error=str(err))
    speed = forward_speed(telemetry, window)
    try:
        roll_mean, roll_std = roll_amplitude(telemetry, window, gait_period)
    except AnalysisError:
        roll_mean, roll_std = nan, nan
    steps = segment_steps(telemetry, window)
    midline = yaw_midline(telemetry, steps)
    try:
        cot_total, cot_mech = cost_of_transport(telemetry, window, power, params)
    except AnalysisError:
        cot_total, cot_mech = nan, nan
    return GaitMetrics(
        mean_speed=speed,
        roll_amp_mean=roll_mean,
        roll_amp_std=roll_std,
        steps=len(steps),
        yaw_midline=tuple(midline),
        cot_total=cot_total,
        cot_mechanical=cot_mech,
        stable=classify_stability(telemetry, window, params.foot_radius),
        cap_extent_flag=cap_extent_exceeded(telemetry, params),
        mean_yaw_rate=yaw_rate_from_midline(steps, midline),
        fell=telemetry.fell,
        fall_time=telemetry.fall_time,
    )
