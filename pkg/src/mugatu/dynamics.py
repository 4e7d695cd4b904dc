"""Floating-base simulation of the two-body walker.

The state is the 7-DOF generalized configuration (base pose + hip angle)
with its velocities. Walking, rolling and steering are emergent: the engine
only integrates rigid-body dynamics under gravity, the servo torque and
compliant foot-ground contact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _engine
from .gait import GaitCommand
from .model import GRAVITY, ContactMaterial, FootSphere, WalkerParams

COLUMNS = ("t", "x", "y", "z", "roll", "pitch", "yaw", "hip_cmd", "hip_act",
           "tau", "p_elec", "n_left", "n_right", "cg_x", "cg_y", "cg_z", "e_mech")

FALL_ANGLE = math.radians(60.0)


class SimulationDiverged(RuntimeError):
    """Raised when the integrator produces a non-finite state."""

    def __init__(self, message, last_state=None, telemetry=None):
        super().__init__(message)
        self.last_state = last_state
        self.telemetry = telemetry


@dataclass(frozen=True)
class WalkerState:
    """Generalized coordinates and velocities of the walker.

    The base is the left body; ``base_position`` is the hip-axis midpoint in
    the world frame, ``base_orientation`` a wxyz unit quaternion and
    ``base_angular_velocity`` is expressed in the base body frame.
    """

    base_position: np.ndarray
    base_orientation: np.ndarray
    hip_angle: float
    base_linear_velocity: np.ndarray
    base_angular_velocity: np.ndarray
    hip_rate: float
    time: float = 0.0

    def __post_init__(self):
        for name in ("base_position", "base_linear_velocity", "base_angular_velocity"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(3)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        quat = np.asarray(self.base_orientation, dtype=float).reshape(4)
        quat.setflags(write=False)
        object.__setattr__(self, "base_orientation", quat)
        if abs(np.linalg.norm(quat) - 1.0) > 1e-9:
            raise ValueError("base_orientation must be a unit quaternion")
        vals = np.concatenate([self.base_position, quat, self.base_linear_velocity,
                               self.base_angular_velocity,
                               [self.hip_angle, self.hip_rate, self.time]])
        if not np.all(np.isfinite(vals)):
            raise ValueError("state entries must be finite")

    def rotation(self) -> np.ndarray:
        return _engine._quat_to_rot(self.base_orientation)


def _pack_state(state: WalkerState) -> np.ndarray:
    y = np.empty(15)
    y[0:3] = state.base_position
    y[3:7] = state.base_orientation
    y[7:10] = state.base_linear_velocity
    y[10:13] = state.rotation() @ state.base_angular_velocity  # body -> world
    y[13] = state.hip_angle
    y[14] = state.hip_rate
    return y


def _unpack_state(y: np.ndarray, t: float) -> WalkerState:
    rot = _engine._quat_to_rot(y[3:7])
    return WalkerState(
        base_position=y[0:3].copy(),
        base_orientation=y[3:7].copy(),
        hip_angle=float(y[13]),
        base_linear_velocity=y[7:10].copy(),
        base_angular_velocity=rot.T @ y[10:13],
        hip_rate=float(y[14]),
        time=t,
    )


def pack_params(params: WalkerParams):
    """Flatten walker parameters into the engine's array layout."""
    bodies = np.empty((2, 13))
    for i, body in enumerate((params.left_body, params.right_body)):
        bodies[i, 0] = body.mass
        bodies[i, 1:4] = body.cg
        bodies[i, 4:13] = body.inertia.ravel()
    feet = np.empty((2, 4))
    for i, foot in enumerate((params.left_foot, params.right_foot)):
        feet[i, 0:3] = foot.center_offset
        feet[i, 3] = foot.radius
    mat = params.material
    mat_arr = np.array([mat.normal_stiffness, mat.normal_damping, mat.mu,
                        mat.spin_patch_radius, mat.slip_regularization_velocity])
    return bodies, feet, mat_arr, params.servo.packed()


def _misc(params: WalkerParams, power_baseline=2.0, power_efficiency=0.5) -> np.ndarray:
    return np.array([GRAVITY, params.hip_viscous_friction, power_baseline,
                     1.0 / power_efficiency, 0.5 * params.hip_height, FALL_ANGLE])


def initial_state(params: WalkerParams) -> WalkerState:
    """Standing at rest, legs aligned, both feet exactly tangent to ground."""
    return WalkerState(
        base_position=np.array([0.0, 0.0, params.hip_height]),
        base_orientation=np.array([1.0, 0.0, 0.0, 0.0]),
        hip_angle=0.0,
        base_linear_velocity=np.zeros(3),
        base_angular_velocity=np.zeros(3),
        hip_rate=0.0,
    )


def foot_lowest_point(foot: FootSphere, position, rotation):
    """Lowest point of a foot sphere and its gap to the ground plane.

    ``rotation`` may be a 3x3 matrix or a wxyz quaternion. A negative gap
    means penetration of that depth.
    """
    rot = np.asarray(rotation, dtype=float)
    if rot.shape == (4,):
        rot = _engine._quat_to_rot(rot)
    center = np.asarray(position, dtype=float) + rot @ foot.center_offset
    point = center - np.array([0.0, 0.0, foot.radius])
    return point, float(center[2] - foot.radius)


def contact_wrench(gap: float, point_velocity, spin_rate: float,
                   material: ContactMaterial):
    """World-frame contact force and torsional friction torque.

    Separated contacts (gap >= 0) produce a zero wrench; in contact the
    normal is spring-damper (compression only) and the tangential/spin
    friction is Coulomb with tanh slip regularization.
    """
    v = np.asarray(point_velocity, dtype=float).reshape(3)
    fx, fy, fz, spin_torque = _engine._contact(
        float(gap), v[0], v[1], v[2], float(spin_rate),
        material.normal_stiffness, material.normal_damping, material.mu,
        material.spin_patch_radius, material.slip_regularization_velocity)
    return np.array([fx, fy, fz]), spin_torque


def forward_dynamics(state: WalkerState, hip_torque: float, params: WalkerParams):
    """Generalized accelerations under the given hip torque.

    Returns (base linear acceleration, base angular acceleration in the body
    frame, hip angular acceleration). Contact wrenches are evaluated from
    the state; airborne states see gravity only.
    """
    bodies, feet, mat, servo = pack_params(params)
    y = _pack_state(state)
    gait = np.zeros(6)
    try:
        ydot = _engine._core(state.time, y, bodies, feet, mat, servo, gait,
                             _misc(params), 1, float(hip_torque))[0]
    except np.linalg.LinAlgError:
        raise ValueError("singular dynamics evaluation") from None
    if not np.all(np.isfinite(ydot)):
        raise ValueError("singular dynamics evaluation")
    rot = state.rotation()
    return ydot[7:10].copy(), rot.T @ ydot[10:13], float(ydot[14])


def integrate_step(state: WalkerState, dt: float, cmd: GaitCommand,
                   params: WalkerParams, hip_torque: float | None = None) -> WalkerState:
    """One RK4 step of the full state.

    The servo torque is recomputed at every RK4 stage unless an explicit
    ``hip_torque`` override is given (held constant across the step).
    """
    if not 0.0 < dt <= 1e-3:
        raise ValueError("dt must lie in (0, 1e-3] s")
    bodies, feet, mat, servo = pack_params(params)
    if hip_torque is None:
        tau_mode, tau_val = 0, 0.0
        gait = cmd.packed()
    else:
        tau_mode, tau_val = 1, float(hip_torque)
        gait = np.zeros(6)
    try:
        y = _engine._rk4_step(state.time, _pack_state(state), dt, bodies, feet,
                              mat, servo, gait, _misc(params), tau_mode, tau_val)
    except np.linalg.LinAlgError:
        raise SimulationDiverged("simulation diverged", last_state=state) from None
    if not np.all(np.isfinite(y)):
        raise SimulationDiverged("simulation diverged", last_state=state)
    return _unpack_state(y, state.time + dt)


def detect_fall(state: WalkerState, params: WalkerParams) -> bool:
    """True when attitude or hip height leaves the recoverable envelope."""
    rot = state.rotation()
    roll = math.atan2(rot[2, 1], rot[2, 2])
    pitch = math.asin(max(-1.0, min(1.0, -rot[2, 0])))
    return (abs(roll) > FALL_ANGLE or abs(pitch) > FALL_ANGLE
            or state.base_position[2] < 0.5 * params.hip_height)


@dataclass
class Telemetry:
    """Uniformly sampled trial record; one row per sample, columns COLUMNS."""

    sample_rate: float
    samples: np.ndarray
    fell: bool = False
    fall_time: float | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != len(COLUMNS):
            raise ValueError(f"telemetry needs {len(COLUMNS)} columns")
        t = self.samples[:, 0]
        if len(t) == 0 or t[0] != 0.0:
            raise ValueError("telemetry must start at t = 0")
        if len(t) > 1 and np.any(np.diff(t) <= 0.0):
            raise ValueError("telemetry time must be strictly increasing")

    def __getattr__(self, name):
        if name in COLUMNS:
            return self.samples[:, COLUMNS.index(name)]
        raise AttributeError(name)

    def column(self, name: str) -> np.ndarray:
        return self.samples[:, COLUMNS.index(name)]

    @property
    def duration(self) -> float:
        return float(self.samples[-1, 0])

    @property
    def end_time(self) -> float:
        """Usable end of the trial: fall time if it fell, else last sample."""
        return self.fall_time if self.fall_time is not None else self.duration

    def resampled(self, factor: int) -> "Telemetry":
        """Keep every ``factor``-th sample (integer decimation)."""
        return Telemetry(self.sample_rate / factor, self.samples[::factor].copy(),
                         self.fell, self.fall_time)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.samples, delimiter=",", comments="",
                   header=",".join(COLUMNS), fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "Telemetry":
        header = Path(path).open().readline().strip().split(",")
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected telemetry header in {path}")
        samples = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = samples[:, 0]
        rate = 1.0 / (t[1] - t[0]) if len(t) > 1 else 1.0
        return cls(sample_rate=rate, samples=samples)


def simulate(params: WalkerParams, cmd: GaitCommand, duration: float,
             dt: float = 1e-4, sample_rate: float = 200.0,
             power_baseline: float = 2.0, power_efficiency: float = 0.5,
             start_state: WalkerState | None = None) -> Telemetry:
    """Run a full trial, by default from the standing start.

    Stops early if the walker falls (recorded in the telemetry, not an
    error). Raises SimulationDiverged on a non-finite state.
    """
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    if not 0.0 < dt <= 1e-3:
        raise ValueError("dt must lie in (0, 1e-3] s")
    if sample_rate > 1.0 / dt:
        raise ValueError("sample_rate cannot exceed the step rate")
    stride = max(1, int(round(1.0 / (sample_rate * dt))))
    n_steps = int(round(duration / dt))
    out = np.full((n_steps // stride + 1, len(COLUMNS)), np.nan)
    bodies, feet, mat, servo = pack_params(params)
    misc = _misc(params, power_baseline, power_efficiency)
    y0 = _pack_state(start_state if start_state is not None else initial_state(params))
    try:
        rows, fell, fall_time, diverged = _engine._simulate(
            y0, dt, n_steps, stride, bodies, feet, mat, servo, cmd.packed(), misc, out)
    except np.linalg.LinAlgError:
        # overflow inside the 7x7 solve; salvage the rows recorded so far
        written = np.all(np.isfinite(out), axis=1)
        rows = int(np.argmin(written)) if not written.all() else len(out)
        telemetry = Telemetry(sample_rate=1.0 / (stride * dt),
                              samples=out[:max(rows, 1)].copy()) if rows else None
        raise SimulationDiverged("simulation diverged", telemetry=telemetry) from None
    telemetry = Telemetry(sample_rate=1.0 / (stride * dt), samples=out[:rows].copy(),
                          fell=bool(fell), fall_time=fall_time if fell else None)
    if diverged:
        raise SimulationDiverged("simulation diverged", telemetry=telemetry)
    return telemetry


# ----- diagnostic quantities (python-path, used by tests and analysis) -----

def _body_states(state: WalkerState, params: WalkerParams):
    rot_l = state.rotation()
    phi = state.hip_angle
    c, s = math.cos(phi), math.sin(phi)
    rot_r = rot_l @ np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    axis = rot_l[:, 1]
    w = rot_l @ state.base_angular_velocity
    omegas = (w, w + axis * state.hip_rate)
    out = []
    for body, rot, omega in zip((params.left_body, params.right_body),
                                (rot_l, rot_r), omegas):
        r = rot @ body.cg
        x = state.base_position + r
        v = state.base_linear_velocity + np.cross(omega, r)
        iw = rot @ body.inertia @ rot.T
        out.append((body.mass, x, v, omega, iw))
    return out


def cg_state(state: WalkerState, params: WalkerParams):
    """Whole-robot CG position and velocity in the world frame."""
    parts = _body_states(state, params)
    total = sum(p[0] for p in parts)
    pos = sum(p[0] * p[1] for p in parts) / total
    vel = sum(p[0] * p[2] for p in parts) / total
    return pos, vel


def mechanical_energy(state: WalkerState, params: WalkerParams) -> float:
    e = 0.0
    for m, x, v, omega, iw in _body_states(state, params):
        e += 0.5 * m * v @ v + 0.5 * omega @ iw @ omega + m * GRAVITY * x[2]
    return e


def angular_momentum_about_cg(state: WalkerState, params: WalkerParams) -> np.ndarray:
    cg_pos, cg_vel = cg_state(state, params)
    momentum = np.zeros(3)
    for m, x, v, omega, iw in _body_states(state, params):
        momentum += iw @ omega + m * np.cross(x - cg_pos, v - cg_vel)
    return momentum
