import math

import numpy as np
import pytest

from mugatu import (
    AnalysisWindow,
    GaitCommand,
    GaitMetrics,
    PowerModel,
    analyze,
    classify_stability,
    cost_of_transport,
    find_window,
    forward_speed,
    roll_amplitude,
    segment_steps,
    simulate,
    yaw_midline,
)
from mugatu.analysis import NoOscillation, NoProgress, NoSteadyRegion, \
    yaw_rate_from_midline
from conftest import synthetic_telemetry

RATE = 200.0


def _times(duration):
    return np.arange(0.0, duration + 1e-9, 1.0 / RATE)


def _commanded(t, delay=1.0, freq=1.5, amp=math.radians(30.0)):
    out = amp * np.sin(2 * math.pi * freq * (t - delay))
    out[t < delay] = 0.0
    return out


# ----- window -----

def test_window_standard_trial():
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE, hip_cmd=_commanded(t))
    window = find_window(tel)
    assert window.first_movement_time == pytest.approx(1.0, abs=0.05)
    assert window.steady_start == pytest.approx(11.0, abs=0.05)
    assert window.steady_end == pytest.approx(26.0, abs=0.05)


def test_window_truncated_by_fall():
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE, hip_cmd=_commanded(t),
                              fell=True, fall_time=18.0)
    window = find_window(tel)
    assert window.steady_end == pytest.approx(18.0, abs=1e-9)


def test_window_requires_movement():
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE)
    with pytest.raises(NoSteadyRegion, match="no steady region"):
        find_window(tel)


def test_window_requires_time_past_grace():
    t = _times(5.0)
    tel = synthetic_telemetry(t, RATE, hip_cmd=_commanded(t))
    with pytest.raises(NoSteadyRegion):
        find_window(tel)


def test_window_validation():
    with pytest.raises(NoSteadyRegion):
        AnalysisWindow(1.0, 11.0, 11.0)


# ----- speed -----

def test_speed_constant_velocity():
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE, cg_x=0.16 * t)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    assert forward_speed(tel, window) == pytest.approx(0.16)


def test_speed_stationary():
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    assert forward_speed(tel, window) == 0.0


def test_speed_quarter_circle_uses_displacement():
    t = _times(10.0)
    angle = 0.5 * math.pi * t / 10.0
    tel = synthetic_telemetry(t, RATE, cg_x=np.sin(angle), cg_y=1.0 - np.cos(angle))
    window = AnalysisWindow(-10.0, 0.0, 10.0)
    assert forward_speed(tel, window) == pytest.approx(math.sqrt(2.0) / 10.0)


def test_speed_invariant_under_rigid_motion():
    t = _times(10.0)
    x = 0.1 * t + 0.02 * np.sin(3.0 * t)
    y = 0.01 * np.cos(3.0 * t)
    window = AnalysisWindow(-10.0, 0.0, 10.0)
    base = forward_speed(synthetic_telemetry(t, RATE, cg_x=x, cg_y=y), window)
    ang = 1.1
    xr = math.cos(ang) * x - math.sin(ang) * y + 5.0
    yr = math.sin(ang) * x + math.cos(ang) * y - 3.0
    rotated = forward_speed(synthetic_telemetry(t, RATE, cg_x=xr, cg_y=yr), window)
    assert rotated == pytest.approx(base, rel=1e-12)


# ----- roll amplitude -----

def test_roll_pure_sinusoid():
    t = _times(30.0)
    roll = 0.1 * np.sin(2 * math.pi * 1.4 * t)
    tel = synthetic_telemetry(t, RATE, roll=roll, hip_cmd=_commanded(t))
    window = AnalysisWindow(1.0, 11.0, 26.0)
    mean, std = roll_amplitude(tel, window, gait_period=1.0 / 1.4)
    assert mean == pytest.approx(0.1, abs=1e-3)
    assert std == pytest.approx(0.0, abs=1e-3)


def test_roll_alternating_peaks():
    t = _times(30.0)
    # odd harmonic content alternates the peak heights between 0.08 and 0.12
    base = 2 * math.pi * 1.0 * t
    roll = 0.1 * np.sin(base) + 0.02 * np.sin(base) * np.sign(np.cos(base / 2.0))
    window = AnalysisWindow(1.0, 11.0, 26.0)
    tel = synthetic_telemetry(t, RATE, roll=roll)
    mean, std = roll_amplitude(tel, window, gait_period=1.0)
    assert mean == pytest.approx(0.10, abs=0.005)
    assert std == pytest.approx(0.02, abs=0.005)


def test_roll_noisy_sinusoid():
    rng = np.random.default_rng(12)
    t = _times(30.0)
    roll = 0.1 * np.sin(2 * math.pi * 1.4 * t) + rng.normal(0.0, 0.002, len(t))
    tel = synthetic_telemetry(t, RATE, roll=roll)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    mean, _ = roll_amplitude(tel, window, gait_period=1.0 / 1.4)
    assert 0.095 <= mean <= 0.107


def test_roll_needs_oscillation():
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE, roll=np.full(len(t), 0.2))
    window = AnalysisWindow(1.0, 11.0, 26.0)
    with pytest.raises(NoOscillation, match="no oscillation"):
        roll_amplitude(tel, window)


# ----- steps -----

def test_steps_from_sine():
    t = _times(30.0)
    hip = math.radians(30.0) * np.sin(2 * math.pi * 1.0 * t)
    tel = synthetic_telemetry(t, RATE, hip_act=hip)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    steps = segment_steps(tel, window)
    # 15 s at 2 steps per 1 Hz cycle, minus the open edges
    assert 28 <= len(steps) <= 30
    sides = [s.side for s in steps]
    assert all(a != b for a, b in zip(sides[:-1], sides[1:]))
    assert {"left", "right"} == set(sides)


def test_steps_constant_signal_empty():
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE, hip_act=np.full(len(t), 0.3))
    window = AnalysisWindow(1.0, 11.0, 26.0)
    assert segment_steps(tel, window) == []


def test_steps_per_second_in_simulation(stock):
    cmd = GaitCommand(math.radians(42.0), math.radians(42.0), 1.4)
    tel = simulate(stock, cmd, 30.0)
    window = find_window(tel)
    steps = segment_steps(tel, window)
    rate = len(steps) / window.duration
    assert rate == pytest.approx(2.8, abs=0.2)


# ----- yaw midline -----

def _steps_for(t, period):
    # step boundaries a quarter period off the yaw test signals, so each
    # step interval spans one yaw peak and one trough
    hip = np.cos(2 * math.pi * t / period)
    tel = synthetic_telemetry(t, RATE, hip_act=hip)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    return segment_steps(tel, window)


def test_midline_constant_yaw():
    t = _times(30.0)
    steps = _steps_for(t, 1.0)
    tel = synthetic_telemetry(t, RATE, yaw=np.full(len(t), math.radians(10.0)))
    midline = yaw_midline(tel, steps)
    assert all(v == pytest.approx(math.radians(10.0)) for _, v in midline)


def test_midline_symmetric_oscillation():
    t = _times(30.0)
    period = 1.0
    steps = _steps_for(t, period)
    yaw = math.radians(5.0) * np.sin(2 * math.pi * t / period)
    tel = synthetic_telemetry(t, RATE, yaw=yaw)
    midline = yaw_midline(tel, steps)
    for _, v in midline:
        assert abs(v) < math.radians(0.5)


def test_midline_tracks_ramp():
    t = _times(30.0)
    period = 1.0
    steps = _steps_for(t, period)
    ramp = math.radians(2.0) * t
    yaw = ramp + math.radians(5.0) * np.sin(2 * math.pi * t / period)
    tel = synthetic_telemetry(t, RATE, yaw=yaw)
    midline = yaw_midline(tel, steps)
    for step, (_, v) in zip(steps, midline):
        t_mid = 0.5 * (step.start_time + step.end_time)
        assert abs(v - math.radians(2.0) * t_mid) < math.radians(0.5)
    rate = yaw_rate_from_midline(steps, midline)
    assert rate == pytest.approx(math.radians(2.0), abs=math.radians(0.1))


def test_midline_of_mirrored_trajectory_negates():
    t = _times(30.0)
    steps = _steps_for(t, 1.0)
    yaw = math.radians(2.0) * t + math.radians(5.0) * np.sin(2 * math.pi * t)
    a = yaw_midline(synthetic_telemetry(t, RATE, yaw=yaw), steps)
    b = yaw_midline(synthetic_telemetry(t, RATE, yaw=-yaw), steps)
    for (_, va), (_, vb) in zip(a, b):
        assert va == pytest.approx(-vb, abs=1e-12)


# ----- cost of transport -----

def test_cot_constant_power(stock):
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE, cg_x=0.16 * t)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    power = PowerModel(baseline_power=6.73, efficiency=1.0)
    cot_total, cot_mech = cost_of_transport(tel, window, power, stock)
    assert cot_total == pytest.approx(6.73 / (0.809 * 9.81 * 0.16), abs=1e-9)
    assert cot_total == pytest.approx(5.30, abs=0.01)
    assert cot_mech == 0.0


def test_cot_zero_when_free(stock):
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE, cg_x=0.1 * t)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    power = PowerModel(baseline_power=0.0, efficiency=1.0)
    assert cost_of_transport(tel, window, power, stock) == (0.0, 0.0)


def test_cot_halves_with_double_displacement(stock):
    t = _times(30.0)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    power = PowerModel(baseline_power=2.0, efficiency=0.5)
    slow = synthetic_telemetry(t, RATE, cg_x=0.1 * t)
    fast = synthetic_telemetry(t, RATE, cg_x=0.2 * t)
    cot_slow, _ = cost_of_transport(slow, window, power, stock)
    cot_fast, _ = cost_of_transport(fast, window, power, stock)
    assert cot_fast == pytest.approx(0.5 * cot_slow)


def test_cot_requires_progress(stock):
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE)
    window = AnalysisWindow(1.0, 11.0, 26.0)
    with pytest.raises(NoProgress, match="no progress"):
        cost_of_transport(tel, window, PowerModel(), stock)


def test_cot_total_dominates_mechanical(stock, stable_telemetry):
    window = find_window(stable_telemetry)
    total, mech = cost_of_transport(stable_telemetry, window, PowerModel(), stock)
    assert total >= mech > 0.0
    free = PowerModel(baseline_power=0.0, efficiency=1.0)
    total0, mech0 = cost_of_transport(stable_telemetry, window, free, stock)
    assert total0 == pytest.approx(mech0)


# ----- stability -----

def test_fall_during_window_is_unstable(stock):
    t = _times(30.0)
    hip = math.radians(30.0) * np.sin(2 * math.pi * 1.5 * t)
    tel = synthetic_telemetry(t, RATE, hip_cmd=_commanded(t), hip_act=hip,
                              cg_x=0.1 * t, fell=True, fall_time=12.0)
    window = find_window(tel)
    assert not classify_stability(tel, window, stock.foot_radius)


def test_standing_trial_is_unstable(stock):
    t = _times(30.0)
    tel = synthetic_telemetry(t, RATE, hip_cmd=_commanded(t))
    window = find_window(tel)
    assert not classify_stability(tel, window, stock.foot_radius)


def test_stock_operating_point_is_stable(stock, fast_telemetry):
    window = find_window(fast_telemetry)
    assert classify_stability(fast_telemetry, window, stock.foot_radius)


def test_progress_threshold_is_foot_radius(stock):
    t = _times(30.0)
    hip = math.radians(30.0) * np.sin(2 * math.pi * 1.5 * t)
    short = synthetic_telemetry(t, RATE, hip_cmd=_commanded(t), hip_act=hip,
                                cg_x=0.003 * t)
    window = find_window(short)
    assert not classify_stability(short, window, stock.foot_radius)


# ----- metrics object and full pipeline -----

def test_metrics_validation():
    with pytest.raises(ValueError):
        GaitMetrics(0.1, 0.1, 0.0, 10, (), -1.0, 0.0, False, False)
    with pytest.raises(ValueError):
        GaitMetrics(0.1, 0.1, 0.0, 2, (), 1.0, 0.5, True, False)


def test_metrics_dict_roundtrip():
    metrics = GaitMetrics(0.1, 0.2, 0.01, 20, ((0, 0.1), (1, 0.2)),
                          3.0, 0.5, True, False, mean_yaw_rate=float("nan"))
    rebuilt = GaitMetrics.from_dict(metrics.to_dict())
    assert rebuilt.mean_speed == metrics.mean_speed
    assert rebuilt.yaw_midline == metrics.yaw_midline
    assert math.isnan(rebuilt.mean_yaw_rate)


def test_analyze_records_failures(stock):
    t = _times(5.0)
    tel = synthetic_telemetry(t, RATE)
    metrics = analyze(tel, stock)
    assert metrics.error == "no steady region"
    assert not metrics.stable


def test_analyze_full_trial(stock, stable_telemetry):
    metrics = analyze(stable_telemetry, stock, gait_period=1.0 / 1.5)
    assert metrics.error is None
    assert metrics.stable
    assert metrics.steps >= 20
    assert 0.03 <= metrics.mean_speed <= 0.40
    assert metrics.cot_total > metrics.cot_mechanical > 0.0
    assert metrics.roll_amp_std >= 0.0


def test_metrics_resampling_invariance(stock, stable_telemetry):
    a = analyze(stable_telemetry, stock, gait_period=1.0 / 1.5)
    b = analyze(stable_telemetry.resampled(2), stock, gait_period=1.0 / 1.5)
    assert b.stable == a.stable
    assert b.mean_speed == pytest.approx(a.mean_speed, rel=0.01)
    assert b.roll_amp_mean == pytest.approx(a.roll_amp_mean, rel=0.01)
    assert abs(b.steps - a.steps) <= 1
    assert b.cot_total == pytest.approx(a.cot_total, rel=0.01)
