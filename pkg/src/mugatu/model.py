"""Walker geometry, mass properties and design-rule checks.

The walker is two rigid bodies (left and right leg-arm assemblies) joined by
a single revolute hip. Body frames have their origin on the hip axis
midpoint, x forward, y left, z up. Each body carries one spherical foot
segment whose rolling surface is a sphere of radius ``r`` centered at the
foot center of curvature.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .gait import ServoParams

GRAVITY = 9.81

_SHAPES = ("box", "cylinder", "sphere_cap", "point_mass")


def _rpy_matrix(rpy) -> np.ndarray:
    """Rotation matrix from roll-pitch-yaw (extrinsic x-y-z)."""
    r, p, y = rpy
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


@dataclass(frozen=True)
class Primitive:
    """One solid used to compose a rigid body.

    dims by shape:
      box        -- full extents (lx, ly, lz)
      cylinder   -- (radius, length), axis along local z
      sphere_cap -- (sphere_radius, cap_height), cap cut at the +z pole of a
                    sphere centered at the local origin
      point_mass -- unused
    Exactly one of ``mass`` or ``density`` must be given (point masses
    require ``mass``).
    """

    shape: str
    mass: float | None = None
    density: float | None = None
    dims: tuple = ()
    position: tuple = (0.0, 0.0, 0.0)
    rpy: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown primitive shape {self.shape!r}")
        if (self.mass is None) == (self.density is None):
            raise ValueError("specify exactly one of mass or density")
        if self.shape == "point_mass" and self.mass is None:
            raise ValueError("point_mass requires an explicit mass")

    def volume(self) -> float:
        if self.shape == "box":
            lx, ly, lz = self.dims
            return lx * ly * lz
        if self.shape == "cylinder":
            r, length = self.dims
            return math.pi * r * r * length
        if self.shape == "sphere_cap":
            r, h = self.dims
            return math.pi * h * h * (3.0 * r - h) / 3.0
        return 0.0

    def resolved_mass(self) -> float:
        m = self.mass if self.mass is not None else self.density * self.volume()
        if m <= 0.0:
            raise ValueError("primitive mass must be positive")
        return m


def _cap_local_properties(r: float, h: float, m: float):
    """Mass center and inertia (about its own CG) of a solid spherical cap.

    Cap occupies z in [r-h, r] of a sphere of radius r centered at the
    origin; obtained by integrating circular disks analytically.
    """
    a = r - h

    def ipow(n):  # integral of z^n over [a, r]
        return (r ** (n + 1) - a ** (n + 1)) / (n + 1)

    r2 = r * r
    vol = math.pi * (r2 * ipow(0) - ipow(2))
    rho = m / vol
    zbar = math.pi * rho * (r2 * ipow(1) - ipow(3)) / m
    # (r^2 - z^2)^2 = r^4 - 2 r^2 z^2 + z^4
    quart = r2 * r2 * ipow(0) - 2.0 * r2 * ipow(2) + ipow(4)
    izz = 0.5 * math.pi * rho * quart
    ixx_center = math.pi * rho * (0.25 * quart + (r2 * ipow(2) - ipow(4)))
    ixx = ixx_center - m * zbar * zbar
    inertia = np.diag([ixx, ixx, izz])
    return np.array([0.0, 0.0, zbar]), inertia


def _primitive_properties(prim: Primitive):
    """(mass, cg, inertia-about-cg) of one primitive in the body frame."""
    m = prim.resolved_mass()
    if prim.shape == "box":
        lx, ly, lz = prim.dims
        inertia = m / 12.0 * np.diag([ly * ly + lz * lz,
                                      lx * lx + lz * lz,
                                      lx * lx + ly * ly])
        cg_local = np.zeros(3)
    elif prim.shape == "cylinder":
        r, length = prim.dims
        ixx = m * (3.0 * r * r + length * length) / 12.0
        inertia = np.diag([ixx, ixx, 0.5 * m * r * r])
        cg_local = np.zeros(3)
    elif prim.shape == "sphere_cap":
        cg_local, inertia = _cap_local_properties(*prim.dims, m)
    else:  # point_mass
        inertia = np.zeros((3, 3))
        cg_local = np.zeros(3)
    rot = _rpy_matrix(prim.rpy)
    cg = np.asarray(prim.position, dtype=float) + rot @ cg_local
    return m, cg, rot @ inertia @ rot.T


def _combine(parts):
    """Combine (mass, cg, inertia_cg) triples into one rigid body."""
    total = sum(p[0] for p in parts)
    cg = sum(p[0] * p[1] for p in parts) / total
    inertia = np.zeros((3, 3))
    for m, c, i_cg in parts:
        d = c - cg
        inertia += i_cg + m * (np.dot(d, d) * np.eye(3) - np.outer(d, d))
    return total, cg, inertia


@dataclass(frozen=True)
class BodyMassProperties:
    """Mass, CG and inertia (about the CG) of one rigid body, body frame."""

    mass: float
    cg: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cg", np.asarray(self.cg, dtype=float).reshape(3))
        inertia = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        inertia.setflags(write=False)
        self.cg.setflags(write=False)
        object.__setattr__(self, "inertia", inertia)
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ValueError("inertia must be symmetric")
        eig = np.linalg.eigvalsh(inertia)
        if np.any(eig <= 0.0):
            raise ValueError("inertia must be positive-definite")
        i1, i2, i3 = np.sort(eig)
        if i1 + i2 < i3 * (1.0 - 1e-9):
            raise ValueError("principal moments violate the triangle inequality")


def compose_body(primitives) -> BodyMassProperties:
    """Exact composite mass properties of a list of primitives.

    CG is the mass-weighted mean; inertia is the parallel-axis sum about the
    composite CG. Point masses contribute no rotational inertia of their own.
    """
    prims = list(primitives)
    if not prims:
        raise ValueError("empty body")
    mass, cg, inertia = _combine([_primitive_properties(p) for p in prims])
    if np.allclose(inertia, 0.0):
        # all-point-mass bodies collinear with their CG have singular inertia;
        # keep the composition result representable for oracle cross-checks
        return _RawBodyProperties(mass, cg, inertia)
    try:
        return BodyMassProperties(mass, cg, inertia)
    except ValueError:
        return _RawBodyProperties(mass, cg, inertia)


@dataclass(frozen=True)
class _RawBodyProperties:
    """Composition result that skips physical-validity checks.

    Used for degenerate primitive sets (e.g. pure point masses) that are
    valid composition inputs but not valid walker bodies.
    """

    mass: float
    cg: np.ndarray
    inertia: np.ndarray


def _sample_in_shape(prim: Primitive, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples inside the primitive volume, local frame."""
    if prim.shape == "box":
        half = 0.5 * np.asarray(prim.dims)
        return rng.uniform(-half, half, size=(n, 3))
    if prim.shape == "cylinder":
        r, length = prim.dims
        rad = r * np.sqrt(rng.uniform(size=n))
        ang = rng.uniform(0.0, 2.0 * math.pi, size=n)
        z = rng.uniform(-0.5 * length, 0.5 * length, size=n)
        return np.column_stack([rad * np.cos(ang), rad * np.sin(ang), z])
    if prim.shape == "sphere_cap":
        r, h = prim.dims
        a = r - h
        # rejection in z against disk area, then uniform in the disk
        pts = np.empty((0, 3))
        while len(pts) < n:
            m = 2 * (n - len(pts)) + 16
            z = rng.uniform(a, r, size=m)
            keep = rng.uniform(size=m) * (r * r - a * a) < (r * r - z * z)
            z = z[keep]
            rad = np.sqrt((r * r - z * z) * rng.uniform(size=len(z)))
            ang = rng.uniform(0.0, 2.0 * math.pi, size=len(z))
            new = np.column_stack([rad * np.cos(ang), rad * np.sin(ang), z])
            pts = np.vstack([pts, new])
        return pts[:n]
    raise ValueError(prim.shape)


def mass_properties_oracle(primitives, n_samples: int, seed: int = 0):
    """Monte-Carlo estimate of composite mass properties (test oracle).

    Each volumetric primitive is represented by ``n_samples`` equal-mass
    particles drawn uniformly from its volume; point masses stay exact.
    """
    prims = list(primitives)
    if not prims:
        raise ValueError("empty body")
    if n_samples < 10 ** 5:
        raise ValueError("n_samples must be at least 1e5")
    rng = np.random.default_rng(seed)
    parts = []
    for prim in prims:
        m = prim.resolved_mass()
        if prim.shape == "point_mass":
            parts.append((m, np.asarray(prim.position, dtype=float), np.zeros((3, 3))))
            continue
        pts = _sample_in_shape(prim, n_samples, rng)
        rot = _rpy_matrix(prim.rpy)
        pts = pts @ rot.T + np.asarray(prim.position)
        cg = pts.mean(axis=0)
        d = pts - cg
        w = m / n_samples
        diag = w * np.sum(d * d)
        inertia = diag * np.eye(3) - w * (d.T @ d)
        parts.append((m, cg, inertia))
    mass, cg, inertia = _combine(parts)
    return _RawBodyProperties(mass, cg, inertia)


@dataclass(frozen=True)
class FootSphere:
    """Spherical rolling surface of one foot, in the owning body frame."""

    center_offset: np.ndarray
    radius: float

    def __post_init__(self):
        off = np.asarray(self.center_offset, dtype=float).reshape(3)
        off.setflags(write=False)
        object.__setattr__(self, "center_offset", off)
        if self.radius <= 0.0:
            raise ValueError("foot radius must be positive")


@dataclass(frozen=True)
class ContactMaterial:
    """Compliant foot-ground contact parameters."""

    normal_stiffness: float = 2.0e4   # N/m
    normal_damping: float = 300.0     # N*s/m
    mu: float = 0.8
    spin_patch_radius: float = 2.0e-2  # m, effective patch for torsional friction
    slip_regularization_velocity: float = 1.0e-3  # m/s

    def __post_init__(self):
        vals = (self.normal_stiffness, self.normal_damping, self.mu,
                self.spin_patch_radius, self.slip_regularization_velocity)
        if any(v <= 0.0 for v in vals):
            raise ValueError("all contact material fields must be positive")
        if self.mu > 2.0:
            raise ValueError("mu must lie in (0, 2]")


@dataclass(frozen=True)
class WalkerParams:
    """Full physical description of the walker.

    ``hip_axis_offset`` is the hip position relative to the foot center of
    curvature (houses h_x, h_z); ``foot_gap`` is the lateral distance between
    the two foot centers. Both are redundant with the foot definitions and
    are validated for consistency.
    """

    left_body: BodyMassProperties
    right_body: BodyMassProperties
    left_foot: FootSphere
    right_foot: FootSphere
    hip_axis_offset: np.ndarray
    foot_gap: float
    total_height: float
    material: ContactMaterial = field(default_factory=ContactMaterial)
    servo: ServoParams = field(default_factory=ServoParams)
    hip_viscous_friction: float = 0.0
    cap_half_angle: float = math.radians(40.0)

    def __post_init__(self):
        off = np.asarray(self.hip_axis_offset, dtype=float).reshape(3)
        off.setflags(write=False)
        object.__setattr__(self, "hip_axis_offset", off)
        lf, rf = self.left_foot, self.right_foot
        if abs((lf.center_offset[2] - lf.radius) - (rf.center_offset[2] - rf.radius)) > 1e-9:
            raise ValueError("feet must be tangent to the ground at the same height")
        if self.foot_gap < 0.0:
            raise ValueError("foot_gap must be non-negative")
        gap = abs(lf.center_offset[1] - rf.center_offset[1])
        if abs(gap - self.foot_gap) > 1e-9:
            raise ValueError("foot_gap inconsistent with foot center offsets")
        expected = np.array([-lf.center_offset[0], 0.0, -lf.center_offset[2]])
        if not np.allclose(off, expected, atol=1e-9):
            raise ValueError("hip_axis_offset inconsistent with foot center offsets")
        if self.total_height <= 0.0:
            raise ValueError("total_height must be positive")

    # ----- derived scalars (reference stance: legs aligned, upright) -----

    @property
    def total_mass(self) -> float:
        return self.left_body.mass + self.right_body.mass

    @property
    def whole_cg(self) -> np.ndarray:
        """Whole-robot CG in the body frame, reference stance."""
        return (self.left_body.mass * self.left_body.cg
                + self.right_body.mass * self.right_body.cg) / self.total_mass

    @property
    def h_x(self) -> float:
        return float(self.hip_axis_offset[0])

    @property
    def h_z(self) -> float:
        return float(self.hip_axis_offset[2])

    @property
    def c_z(self) -> float:
        """Vertical offset of the whole-robot CG from the foot center of curvature."""
        return float(self.whole_cg[2]) + self.h_z

    @property
    def foot_radius(self) -> float:
        return self.left_foot.radius

    @property
    def hip_height(self) -> float:
        """Hip-axis height above ground in the reference stance."""
        return self.foot_radius + self.h_z

    def spin_inertia_ratio(self) -> float:
        """Yaw inertia of one body about the hip axis over the whole-robot total."""
        def izz_about_origin(body):
            c = body.cg
            return body.inertia[2, 2] + body.mass * (c[0] ** 2 + c[1] ** 2)
        left = izz_about_origin(self.left_body)
        return left / (left + izz_about_origin(self.right_body))


@dataclass(frozen=True)
class RuleCheck:
    number: int
    name: str
    passed: bool
    measured: float
    threshold: float
    advisory: bool
    explanation: str


@dataclass(frozen=True)
class DesignRuleReport:
    rules: tuple
    spin_inertia_ratio: float

    def __post_init__(self):
        if len(self.rules) != 5:
            raise ValueError("report must carry exactly 5 rules")

    @property
    def all_required_pass(self) -> bool:
        return all(r.passed for r in self.rules if not r.advisory)


def check_design_rules(params: WalkerParams) -> DesignRuleReport:
    """Evaluate the five static design rules on a walker in reference stance.

    Rules 1-4 are strict sign conditions on the derived geometry scalars.
    Rule 5 is an advisory torsional-friction break check: the servo torque
    limit must exceed the static spin friction of one foot under half the
    robot weight.
    """
    c_z, h_z, h_x = params.c_z, params.h_z, params.h_x
    gap = params.foot_gap
    mat = params.material
    tau_needed = mat.mu * (params.total_mass * GRAVITY / 2.0) * mat.spin_patch_radius
    tau_max = params.servo.torque_limit
    rules = (
        RuleCheck(1, "cg_below_foot_center", c_z < 0.0, c_z, 0.0, False,
                  f"whole-robot CG sits {c_z * 100:+.2f} cm from the foot center of "
                  "curvature; must be below (negative) for passive roll restoring"),
        RuleCheck(2, "hip_above_foot_center", h_z > 0.0, h_z, 0.0, False,
                  f"hip axis sits {h_z * 100:+.2f} cm above the foot center of "
                  "curvature; must be positive so hip rotation lifts the swing foot"),
        RuleCheck(3, "hip_behind_cg", h_x < 0.0, h_x, 0.0, False,
                  f"hip axis sits {h_x * 100:+.2f} cm fore of the foot center of "
                  "curvature; must be negative (behind) to bias forward stepping"),
        RuleCheck(4, "positive_foot_gap", gap > 0.0, gap, 0.0, False,
                  f"lateral foot-center gap is {gap * 100:.2f} cm; a positive gap "
                  "widens the range of stable walking frequencies"),
        RuleCheck(5, "torque_breaks_spin_friction", tau_max >= tau_needed,
                  tau_max, tau_needed, True,
                  f"servo torque limit {tau_max:.3f} N*m vs static spin friction "
                  f"{tau_needed:.4f} N*m on one loaded foot (advisory heuristic)"),
    )
    return DesignRuleReport(rules=rules, spin_inertia_ratio=params.spin_inertia_ratio())


# ----- stock configuration -----

def stock_primitives(side: str):
    """Primitive decomposition of one stock body (side 'left' or 'right').

    Point-mass placements are hand-tuned so the assembled robot hits the
    stock targets: total mass 0.809 kg, CG 5.4 cm below the foot center of
    curvature, hip 1.4 cm behind the CG, mirror-symmetric bodies.
    """
    s = {"left": 1.0, "right": -1.0}[side]
    return [
        Primitive("point_mass", mass=0.235, position=(0.014, s * 0.016, -0.128)),
        Primitive("box", mass=0.100, dims=(0.05, 0.04, 0.16),
                  position=(0.014, s * 0.010, -0.055)),
        Primitive("box", mass=0.0455, dims=(0.02, 0.06, 0.03),
                  position=(0.014, s * 0.035, 0.012)),
        Primitive("point_mass", mass=0.024, position=(0.014, s * 0.005, -0.010)),
    ]


def stock_params(material: ContactMaterial | None = None,
                 servo: ServoParams | None = None) -> WalkerParams:
    """The stock walker: two mirror-symmetric bodies, 12 cm foot spheres."""
    r = 0.12
    h_z, h_x, gap = 0.033, -0.014, 0.032
    return WalkerParams(
        left_body=compose_body(stock_primitives("left")),
        right_body=compose_body(stock_primitives("right")),
        left_foot=FootSphere(center_offset=(-h_x, gap / 2.0, -h_z), radius=r),
        right_foot=FootSphere(center_offset=(-h_x, -gap / 2.0, -h_z), radius=r),
        hip_axis_offset=(h_x, 0.0, h_z),
        foot_gap=gap,
        total_height=0.185,
        material=material or ContactMaterial(),
        servo=servo or ServoParams(),
    )


def mirror_params(params: WalkerParams) -> WalkerParams:
    """Reflect the walker about its sagittal (xz) plane, swapping sides."""
    flip = np.diag([1.0, -1.0, 1.0])

    def mirror_body(body):
        return BodyMassProperties(body.mass, flip @ body.cg,
                                  flip @ body.inertia @ flip)

    def mirror_foot(foot):
        return FootSphere(flip @ foot.center_offset, foot.radius)

    return WalkerParams(
        left_body=mirror_body(params.right_body),
        right_body=mirror_body(params.left_body),
        left_foot=mirror_foot(params.right_foot),
        right_foot=mirror_foot(params.left_foot),
        hip_axis_offset=params.hip_axis_offset,
        foot_gap=params.foot_gap,
        total_height=params.total_height,
        material=params.material,
        servo=params.servo,
        hip_viscous_friction=params.hip_viscous_friction,
        cap_half_angle=params.cap_half_angle,
    )


# ----- JSON configuration file I/O -----

def params_to_dict(params: WalkerParams) -> dict:
    def body_dict(b):
        return {"mass": b.mass, "cg": list(b.cg),
                "inertia": [list(row) for row in b.inertia]}

    def foot_dict(f):
        return {"center_offset": list(f.center_offset), "radius": f.radius}

    return {
        "left_body": body_dict(params.left_body),
        "right_body": body_dict(params.right_body),
        "left_foot": foot_dict(params.left_foot),
        "right_foot": foot_dict(params.right_foot),
        "hip_axis_offset": list(params.hip_axis_offset),
        "foot_gap": params.foot_gap,
        "total_height": params.total_height,
        "material": asdict(params.material),
        "servo": asdict(params.servo),
        "hip_viscous_friction": params.hip_viscous_friction,
        "cap_half_angle": params.cap_half_angle,
    }


def params_from_dict(data: dict) -> WalkerParams:
    def body(d):
        return BodyMassProperties(d["mass"], d["cg"], d["inertia"])

    def foot(d):
        return FootSphere(d["center_offset"], d["radius"])

    return WalkerParams(
        left_body=body(data["left_body"]),
        right_body=body(data["right_body"]),
        left_foot=foot(data["left_foot"]),
        right_foot=foot(data["right_foot"]),
        hip_axis_offset=data["hip_axis_offset"],
        foot_gap=data["foot_gap"],
        total_height=data["total_height"],
        material=ContactMaterial(**data.get("material", {})),
        servo=ServoParams(**data.get("servo", {})),
        hip_viscous_friction=data.get("hip_viscous_friction", 0.0),
        cap_half_angle=data.get("cap_half_angle", math.radians(40.0)),
    )


def save_params(params: WalkerParams, path) -> None:
    Path(path).write_text(json.dumps(params_to_dict(params), indent=2) + "\n")


def load_params(path) -> WalkerParams:
    return params_from_dict(json.loads(Path(path).read_text()))


def stock_params_path() -> Path:
    """Path of the bundled stock walker configuration file."""
    return Path(__file__).parent / "data" / "mugatu.json"
