"""Open-loop hip trajectory generation and the servo torque law.

The hip is driven with a piecewise sinusoid: one half-cycle per leg swing,
each half with its own amplitude but a shared period. ``midpoint`` mode
breaks the sinusoid at its zero crossings (the paper-standard signal);
``extrema`` mode breaks it at the quarter-period peaks instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

MODE_MIDPOINT = 0
MODE_EXTREMA = 1
_MODES = {"midpoint": MODE_MIDPOINT, "extrema": MODE_EXTREMA}


@dataclass(frozen=True)
class GaitCommand:
    """Hip trajectory parameters.

    ``amp_left`` is the amplitude of the half-cycle with the left leg
    forward (positive hip angle); ``amp_right`` the other half. ``invert``
    flips the whole signal so the right leg swings first.
    """

    amp_left: float
    amp_right: float
    frequency: float
    break_mode: str = "midpoint"
    start_delay: float = 1.0
    invert: bool = False

    def __post_init__(self):
        if not (0.0 <= self.amp_left < math.pi / 2 and 0.0 <= self.amp_right < math.pi / 2):
            raise ValueError("amplitudes must lie in [0, pi/2)")
        if self.frequency <= 0.0:
            raise ValueError("frequency must be positive")
        if self.break_mode not in _MODES:
            raise ValueError(f"unknown break_mode {self.break_mode!r}")
        if self.start_delay < 0.0:
            raise ValueError("start_delay must be non-negative")

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency

    def packed(self) -> np.ndarray:
        """Flat parameter vector for the jitted kernels."""
        return np.array([self.amp_left, self.amp_right, self.omega,
                         float(_MODES[self.break_mode]), self.start_delay,
                         -1.0 if self.invert else 1.0])

    def swapped(self) -> "GaitCommand":
        return GaitCommand(self.amp_right, self.amp_left, self.frequency,
                           self.break_mode, self.start_delay, self.invert)


@njit(cache=True)
def _angle_vel(t, gait):
    """Commanded hip angle and its analytic time derivative at time t.

    Velocity at branch switches is the right-hand limit. In extrema mode the
    signal is three half-cosine arcs per period, continuous by construction:
    rise 0 -> +A1, swing +A1 -> -A2, rise -A2 -> 0.
    """
    a1, a2, om, mode, delay, sign = gait[0], gait[1], gait[2], gait[3], gait[4], gait[5]
    if t < delay:
        return 0.0, 0.0
    ts = t - delay
    period = 2.0 * math.pi / om
    ph = ts % period
    if mode == 0.0:  # midpoint: amplitude switches at the zero crossings
        amp = a1 if ph < 0.5 * period else a2
        return sign * amp * math.sin(om * ph), sign * amp * om * math.cos(om * ph)
    # extrema: amplitude switches at the quarter-period peaks
    if ph < 0.25 * period:
        return sign * a1 * math.sin(om * ph), sign * a1 * om * math.cos(om * ph)
    if ph < 0.75 * period:
        mid = 0.5 * (a1 - a2)
        amp = 0.5 * (a1 + a2)
        x = om * (ph - 0.25 * period)
        return sign * (mid + amp * math.cos(x)), -sign * amp * om * math.sin(x)
    x = om * (ph - 0.75 * period)
    return -sign * a2 * math.cos(x), sign * a2 * om * math.sin(x)


@njit(cache=True)
def _servo_torque(theta, theta_dot, theta_cmd, thetad_cmd, kp, kd, tau_max, speed_limit):
    tau = kp * (theta_cmd - theta) + kd * (thetad_cmd - theta_dot)
    if tau > tau_max:
        tau = tau_max
    elif tau < -tau_max:
        tau = -tau_max
    # soft speed cap: torque driving the joint past the speed limit fades
    # linearly to zero at 1.2x the limit
    speed = abs(theta_dot)
    if speed > speed_limit and tau * theta_dot > 0.0:
        scale = 1.0 - (speed - speed_limit) / (0.2 * speed_limit)
        if scale < 0.0:
            scale = 0.0
        tau *= scale
    return tau


def commanded_angle(t, cmd: GaitCommand):
    """Commanded hip angle (rad) at time(s) t; zero during the start delay."""
    gait = cmd.packed()
    t_arr = np.asarray(t, dtype=float)
    if t_arr.ndim == 0:
        return _angle_vel(float(t_arr), gait)[0]
    return np.array([_angle_vel(ti, gait)[0] for ti in t_arr.ravel()]).reshape(t_arr.shape)


def commanded_velocity(t, cmd: GaitCommand):
    """Analytic derivative of the commanded angle (rad/s)."""
    gait = cmd.packed()
    t_arr = np.asarray(t, dtype=float)
    if t_arr.ndim == 0:
        return _angle_vel(float(t_arr), gait)[1]
    return np.array([_angle_vel(ti, gait)[1] for ti in t_arr.ravel()]).reshape(t_arr.shape)


@dataclass(frozen=True)
class ServoParams:
    """Position-tracking actuator with torque and speed limits.

    Defaults approximate a small smart servo with stiff tracking; they are
    configuration, not measured values.
    """

    kp: float = 6.0            # N*m/rad
    kd: float = 0.08           # N*m*s/rad
    torque_limit: float = 0.52  # N*m
    speed_limit: float = 38.0  # rad/s

    def __post_init__(self):
        if min(self.kp, self.kd, self.torque_limit, self.speed_limit) <= 0.0:
            raise ValueError("all servo parameters must be positive")

    def packed(self) -> np.ndarray:
        return np.array([self.kp, self.kd, self.torque_limit, self.speed_limit])


def servo_torque(hip_angle: float, hip_rate: float, t: float,
                 cmd: GaitCommand, servo: ServoParams) -> float:
    """PD tracking torque, clamped to the torque limit and speed-capped."""
    theta_cmd, thetad_cmd = _angle_vel(float(t), cmd.packed())
    return _servo_torque(float(hip_angle), float(hip_rate), theta_cmd, thetad_cmd,
                         servo.kp, servo.kd, servo.torque_limit, servo.speed_limit)
