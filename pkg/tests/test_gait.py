import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mugatu import GaitCommand, ServoParams, commanded_angle, commanded_velocity, \
    servo_torque


def _cmd(a1, a2, f, mode="midpoint", delay=0.0):
    return GaitCommand(a1, a2, f, mode, delay)


# ----- commanded angle -----

def test_zero_at_origin():
    cmd = _cmd(math.radians(42.0), math.radians(42.0), 1.5)
    assert commanded_angle(0.0, cmd) == 0.0


def test_first_quarter_peak():
    cmd = _cmd(math.radians(42.0), math.radians(42.0), 1.5)
    t = 0.25 * cmd.period
    assert commanded_angle(t, cmd) == pytest.approx(0.733, abs=5e-4)


def test_second_branch_trough():
    # asymmetric command: the trough uses the second amplitude
    cmd = _cmd(math.radians(33.4), math.radians(37.8), 1.4)
    t = 0.75 * cmd.period
    assert commanded_angle(t, cmd) == pytest.approx(-math.radians(37.8), abs=1e-12)
    assert commanded_angle(t, cmd) == pytest.approx(-0.660, abs=5e-4)


def test_start_delay_is_silent():
    cmd = _cmd(math.radians(30.0), math.radians(30.0), 1.5, delay=1.0)
    t = np.linspace(0.0, 0.999, 50)
    assert np.all(commanded_angle(t, cmd) == 0.0)
    assert np.all(commanded_velocity(t, cmd) == 0.0)
    # the signal restarts its phase at the end of the delay
    assert commanded_angle(1.0 + 0.25 * cmd.period, cmd) == pytest.approx(
        math.radians(30.0))


def test_invert_flag_mirrors_signal():
    cmd = _cmd(math.radians(33.4), math.radians(42.0), 1.5)
    inv = GaitCommand(cmd.amp_left, cmd.amp_right, cmd.frequency,
                      cmd.break_mode, cmd.start_delay, invert=True)
    t = np.linspace(0.0, 3.0, 400)
    assert np.allclose(commanded_angle(t, inv), -commanded_angle(t, cmd))


@given(st.floats(0.0, 1.5), st.floats(0.0, 1.5), st.floats(0.5, 3.0),
       st.floats(0.0, 10.0))
@settings(max_examples=100, deadline=None)
def test_periodicity(a1, a2, f, t):
    for mode in ("midpoint", "extrema"):
        cmd = _cmd(a1, a2, f, mode)
        assert commanded_angle(t + cmd.period, cmd) == pytest.approx(
            commanded_angle(t, cmd), abs=1e-9)


@given(st.floats(0.1, 1.5), st.floats(0.1, 1.5), st.floats(0.5, 3.0))
@settings(max_examples=100, deadline=None)
def test_midpoint_continuity(a1, a2, f):
    cmd = _cmd(a1, a2, f)
    t = 0.5 * cmd.period
    eps = 1e-9 * cmd.period
    gap = abs(commanded_angle(t - eps, cmd) - commanded_angle(t + eps, cmd))
    assert gap < 1e-6  # both branches vanish at the midpoint
    # exact branch values at the switch itself
    assert abs(commanded_angle(t, cmd)) < 1e-12


@given(st.floats(0.1, 1.5), st.floats(0.1, 1.5), st.floats(0.5, 3.0))
@settings(max_examples=100, deadline=None)
def test_extrema_mode_continuous(a1, a2, f):
    cmd = _cmd(a1, a2, f, "extrema")
    for frac in (0.25, 0.75, 1.0):
        t = frac * cmd.period
        eps = 1e-10 * cmd.period
        gap = abs(commanded_angle(t - eps, cmd) - commanded_angle(t + eps, cmd))
        assert gap < 1e-6


def test_extrema_mode_peaks():
    cmd = _cmd(math.radians(40.0), math.radians(20.0), 1.5, "extrema")
    assert commanded_angle(0.25 * cmd.period, cmd) == pytest.approx(
        math.radians(40.0))
    assert commanded_angle(0.75 * cmd.period, cmd) == pytest.approx(
        -math.radians(20.0))
    assert commanded_angle(0.9999 * cmd.period, cmd) == pytest.approx(0.0, abs=1e-3)


@given(st.floats(0.1, 1.5), st.floats(0.5, 3.0), st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_symmetric_command_odd_about_half_period(a, f, s_frac):
    cmd = _cmd(a, a, f)
    s = s_frac * 0.5 * cmd.period
    t_half = 0.5 * cmd.period
    left = commanded_angle(t_half + s, cmd)
    right = commanded_angle(t_half - s, cmd)
    assert left == pytest.approx(-right, abs=1e-12)


@given(st.floats(0.1, 1.5), st.floats(0.1, 1.5), st.floats(0.5, 3.0),
       st.floats(0.0, 5.0))
@settings(max_examples=100, deadline=None)
def test_amplitude_swap_mirrors(a1, a2, f, t):
    cmd = _cmd(a1, a2, f)
    swapped = cmd.swapped()
    mirrored = -commanded_angle(t + 0.5 * cmd.period, cmd)
    assert commanded_angle(t, swapped) == pytest.approx(mirrored, abs=1e-12)


# ----- commanded velocity -----

def test_velocity_at_origin():
    cmd = _cmd(math.radians(30.0), math.radians(20.0), 1.5)
    assert commanded_velocity(0.0, cmd) == pytest.approx(cmd.amp_left * cmd.omega)


def test_velocity_zero_at_peak():
    cmd = _cmd(math.radians(30.0), math.radians(20.0), 1.5)
    assert commanded_velocity(0.25 * cmd.period, cmd) == pytest.approx(0.0, abs=1e-12)


def test_velocity_jump_at_midpoint():
    cmd = _cmd(math.radians(40.0), math.radians(20.0), 1.5)
    t = 0.5 * cmd.period
    before = commanded_velocity(t - 1e-9, cmd)
    at = commanded_velocity(t, cmd)  # right-hand limit by definition
    assert before == pytest.approx(-cmd.amp_left * cmd.omega, rel=1e-6)
    assert at == pytest.approx(-cmd.amp_right * cmd.omega, rel=1e-9)


@given(st.floats(0.1, 1.5), st.floats(0.1, 1.5), st.floats(0.5, 3.0),
       st.floats(0.01, 5.0))
@settings(max_examples=100, deadline=None)
def test_velocity_matches_finite_difference(a1, a2, f, t):
    for mode in ("midpoint", "extrema"):
        cmd = _cmd(a1, a2, f, mode)
        period = cmd.period
        # stay away from the branch switches where the derivative is one-sided
        ph = (t % period) / period
        if min(abs(ph - b) for b in (0.0, 0.25, 0.5, 0.75, 1.0)) < 1e-4:
            continue
        h = 1e-6
        fd = (commanded_angle(t + h, cmd) - commanded_angle(t - h, cmd)) / (2 * h)
        assert abs(commanded_velocity(t, cmd) - fd) < 1e-6


# ----- validation -----

def test_command_validation():
    with pytest.raises(ValueError):
        GaitCommand(math.pi / 2, 0.1, 1.5)
    with pytest.raises(ValueError):
        GaitCommand(-0.1, 0.1, 1.5)
    with pytest.raises(ValueError):
        GaitCommand(0.1, 0.1, 0.0)
    with pytest.raises(ValueError):
        GaitCommand(0.1, 0.1, 1.5, "diagonal")
    with pytest.raises(ValueError):
        GaitCommand(0.1, 0.1, 1.5, start_delay=-1.0)


# ----- servo torque -----

SERVO = ServoParams()


def test_zero_error_zero_torque():
    cmd = _cmd(math.radians(30.0), math.radians(30.0), 1.5)
    t = 0.1
    theta = commanded_angle(t, cmd)
    theta_dot = commanded_velocity(t, cmd)
    assert servo_torque(theta, theta_dot, t, cmd, SERVO) == pytest.approx(0.0)


def test_linear_law_below_limit():
    servo = ServoParams(kp=5.0, kd=0.08, torque_limit=2.0, speed_limit=38.0)
    cmd = _cmd(0.0, 0.0, 1.5)  # command rests at zero
    tau = servo_torque(-0.1, 0.0, 0.0, cmd, servo)
    assert tau == pytest.approx(0.5)


def test_saturation_is_exact():
    servo = ServoParams(kp=6.0, kd=0.08, torque_limit=0.52, speed_limit=38.0)
    err = 10.0 * servo.torque_limit / servo.kp
    cmd = _cmd(0.0, 0.0, 1.5)
    assert servo_torque(-err, 0.0, 0.0, cmd, servo) == servo.torque_limit
    assert servo_torque(err, 0.0, 0.0, cmd, servo) == -servo.torque_limit


def test_soft_speed_cap():
    servo = ServoParams(kp=6.0, kd=0.08, torque_limit=0.52, speed_limit=10.0)
    cmd = _cmd(0.0, 0.0, 1.5)
    # joint already past 1.2x the speed limit and torque pushing it further
    tau = servo_torque(-1.0, 12.0 + 1e-9, 0.0, cmd, servo)
    assert tau == pytest.approx(0.0, abs=1e-9)
    # halfway into the fade band the torque is halved
    full = servo_torque(-1.0, 0.0, 0.0, cmd, servo)
    faded = servo_torque(-1.0, 11.0, 0.0, cmd, servo)
    assert 0.0 < faded < full
    # torque opposing the overspeed is not faded
    opposing = servo_torque(1.0, 12.0, 0.0, cmd, servo)
    assert opposing == pytest.approx(-servo.torque_limit)


@given(st.floats(-2.0, 2.0), st.floats(-80.0, 80.0), st.floats(0.0, 5.0))
@settings(max_examples=200, deadline=None)
def test_torque_never_exceeds_limit(theta, theta_dot, t):
    cmd = _cmd(math.radians(42.0), math.radians(33.4), 1.5)
    tau = servo_torque(theta, theta_dot, t, cmd, SERVO)
    assert abs(tau) <= SERVO.torque_limit + 1e-12
