#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple
import logging
import math
import numpy as np

from .geometry import Cuboid
from .utils import check_finite, rot_y, rot_z

logger = logging.getLogger(__name__)

LEGS = ("LF", "MF", "RF", "LR", "MR", "RR")
NX = 36
NU = 17

# state layout
POSITION = slice(0, 3)
YAW = 3
SPEED = 4
YAW_RATE = 5
BODY_X, BODY_Z, BODY_PITCH = 6, 7, 8
BODY_Q = slice(6, 9)
BODY_QD = slice(9, 12)

# input layout
U_ACC = 0
U_YAW_ACC = 1
U_BODY = slice(2, 5)

MAX_DT = 0.01
_LATERAL_TOL = 1e-9


def ee_state_index(leg: int) -> Tuple[int, int, int, int]:
    """State indices `(x, z, xdot, zdot)` of end-effector `leg`."""
    base = 12 + 4 * leg
    return base, base + 1, base + 2, base + 3


def ee_input_index(leg: int) -> Tuple[int, int]:
    base = 5 + 2 * leg
    return base, base + 1


def leg_index(leg) -> int:
    if isinstance(leg, str):
        if leg not in LEGS:
            raise ValueError(f"unknown leg {leg!r}; expected one of {LEGS}")
        return LEGS.index(leg)
    if not 0 <= int(leg) < len(LEGS):
        raise ValueError(f"leg index must be in [0, 6), got {leg}")
    return int(leg)


@dataclass(frozen=True)
class LegGeometry:
    r"""One telescopic leg: hip anchor in the body frame, hip angle range
    (measured from straight down, positive pointing away from the body center
    along x), prismatic knee range and the wheel radius.
    """
    name: str
    hip_anchor: Tuple[float, float, float]
    hip_range: Tuple[float, float]
    knee_range: Tuple[float, float]
    outward: float = 1.0
    wheel_radius: float = 0.08

    def __post_init__(self):
        if self.name not in LEGS:
            raise ValueError(f"unknown leg {self.name!r}")
        if not self.hip_range[0] < self.hip_range[1]:
            raise ValueError(f"{self.name}: hip_range must be non-empty, got {self.hip_range}")
        if not 0 < self.knee_range[0] < self.knee_range[1]:
            raise ValueError(f"{self.name}: knee_range must be positive and non-empty, got {self.knee_range}")
        if self.wheel_radius <= 0:
            raise ValueError(f"{self.name}: wheel_radius must be positive, got {self.wheel_radius}")
        if self.outward not in (1.0, -1.0):
            raise ValueError(f"{self.name}: outward must be +1 or -1, got {self.outward}")


def _default_legs(knee_stroke: float = 0.5) -> Tuple[LegGeometry, ...]:
    outer = (math.radians(-20.0), math.radians(25.0))
    middle = (math.radians(-5.0), math.radians(45.0))
    knee = (0.12, 0.12 + knee_stroke)
    return (
        LegGeometry("LF", (0.30, 0.27, 0.0), outer, knee, 1.0),
        LegGeometry("MF", (0.15, 0.0, 0.0), middle, knee, 1.0),
        LegGeometry("RF", (0.30, -0.27, 0.0), outer, knee, 1.0),
        LegGeometry("LR", (-0.30, 0.27, 0.0), outer, knee, -1.0),
        LegGeometry("MR", (-0.15, 0.0, 0.0), middle, knee, -1.0),
        LegGeometry("RR", (-0.30, -0.27, 0.0), outer, knee, -1.0),
    )


@dataclass(frozen=True)
class RobotGeometry:
    """Body box, legs and nominal body-center height above the support plane."""
    body_half_extents: Tuple[float, float, float] = (0.4, 0.2, 0.1)
    legs: Tuple[LegGeometry, ...] = field(default_factory=_default_legs)
    body_height: float = 0.25

    def __post_init__(self):
        if len(self.legs) != len(LEGS) or tuple(leg.name for leg in self.legs) != LEGS:
            raise ValueError(f"legs must be given in the order {LEGS}")
        if min(self.body_half_extents) <= 0:
            raise ValueError(f"body_half_extents must be positive, got {self.body_half_extents}")

    def leg(self, leg) -> LegGeometry:
        return self.legs[leg_index(leg)]


def default_geometry() -> RobotGeometry:
    return RobotGeometry()


@dataclass(frozen=True)
class InputLimits:
    """Box bounds on the 17 inputs, given per block."""
    origin_acc: float = 3.0
    yaw_acc: float = 3.0
    body_acc: float = 8.0
    ee_acc: float = 20.0

    def __post_init__(self):
        for name in ("origin_acc", "yaw_acc", "body_acc", "ee_acc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"'{name}' must be positive, got {getattr(self, name)}")

    def upper(self) -> np.ndarray:
        bound = np.full(NU, self.ee_acc)
        bound[U_ACC] = self.origin_acc
        bound[U_YAW_ACC] = self.yaw_acc
        bound[U_BODY] = self.body_acc
        return bound

    def lower(self) -> np.ndarray:
        return -self.upper()

    def clip(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.lower(), self.upper())


class JointState(NamedTuple):
    knee: float
    hip: float
    feasible: bool = True


class OriginPose(NamedTuple):
    position: np.ndarray
    yaw: float


class RobotState:
    r"""Named view over the 36-vector state.

    Layout: origin `p (3), yaw, forward speed, yaw rate`; body `x, z, pitch`
    and their rates; then `x, z, xdot, zdot` for each of the six end-effectors
    in the order of `LEGS`. Everything past the origin block is relative to
    the ground-moving origin, in its yaw-aligned frame.

    Example:
        >>> state = RobotState.standing(default_geometry())
        >>> x = state.vector
        >>> state.ee_position("MF")
        array([0.15, 0.08])
    """

    def __init__(self, vector=None):
        self.vector = np.zeros(NX) if vector is None else check_finite("state", vector).reshape(NX).copy()

    def __array__(self, dtype=None, copy=None):
        return self.vector if dtype is None else self.vector.astype(dtype)

    @classmethod
    def standing(cls, geometry: RobotGeometry, position=(0.0, 0.0, 0.0), yaw: float = 0.0, speed: float = 0.0) -> "RobotState":
        state = cls()
        x = state.vector
        x[POSITION] = position
        x[YAW] = yaw
        x[SPEED] = speed
        x[BODY_Z] = geometry.body_height
        for i, leg in enumerate(geometry.legs):
            ix, iz, _, _ = ee_state_index(i)
            x[ix] = leg.hip_anchor[0]
            x[iz] = leg.wheel_radius
        return state

    @property
    def position(self) -> np.ndarray:
        return self.vector[POSITION]

    @property
    def yaw(self) -> float:
        return float(self.vector[YAW])

    @property
    def speed(self) -> float:
        return float(self.vector[SPEED])

    @property
    def yaw_rate(self) -> float:
        return float(self.vector[YAW_RATE])

    @property
    def body(self) -> np.ndarray:
        return self.vector[BODY_Q]

    @property
    def body_rate(self) -> np.ndarray:
        return self.vector[BODY_QD]

    def ee_position(self, leg) -> np.ndarray:
        ix, iz, _, _ = ee_state_index(leg_index(leg))
        return self.vector[[ix, iz]]

    def ee_rate(self, leg) -> np.ndarray:
        _, _, ixd, izd = ee_state_index(leg_index(leg))
        return self.vector[[ixd, izd]]


def _as_vector(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(NX)


def drift(x) -> np.ndarray:
    r"""Input-free part `f(x)` of the kinematic model.

    The origin follows unicycle kinematics; every local coordinate is a double
    integrator whose acceleration is an input.
    """
    x = _as_vector(x)
    f = np.zeros(NX)
    yaw, speed = x[YAW], x[SPEED]
    f[0] = speed * math.cos(yaw)
    f[1] = speed * math.sin(yaw)
    f[YAW] = x[YAW_RATE]
    f[BODY_Q] = x[BODY_QD]
    for i in range(len(LEGS)):
        ix, iz, ixd, izd = ee_state_index(i)
        f[ix] = x[ixd]
        f[iz] = x[izd]
    return f


def drift_jacobian(x) -> np.ndarray:
    x = _as_vector(x)
    jac = np.zeros((NX, NX))
    yaw, speed = x[YAW], x[SPEED]
    jac[0, YAW] = -speed * math.sin(yaw)
    jac[1, YAW] = speed * math.cos(yaw)
    jac[0, SPEED] = math.cos(yaw)
    jac[1, SPEED] = math.sin(yaw)
    jac[YAW, YAW_RATE] = 1.0
    for row, col in zip(range(6, 9), range(9, 12)):
        jac[row, col] = 1.0
    for i in range(len(LEGS)):
        ix, iz, ixd, izd = ee_state_index(i)
        jac[ix, ixd] = 1.0
        jac[iz, izd] = 1.0
    return jac


def _build_input_matrix() -> np.ndarray:
    g = np.zeros((NX, NU))
    g[SPEED, U_ACC] = 1.0
    g[YAW_RATE, U_YAW_ACC] = 1.0
    for k in range(3):
        g[9 + k, 2 + k] = 1.0
    for i in range(len(LEGS)):
        _, _, ixd, izd = ee_state_index(i)
        ux, uz = ee_input_index(i)
        g[ixd, ux] = 1.0
        g[izd, uz] = 1.0
    g.flags.writeable = False
    return g


_INPUT_MATRIX = _build_input_matrix()


def input_matrix(x=None) -> np.ndarray:
    """Constant `g` of the control-affine model; `x` is accepted for symmetry with `drift`."""
    return _INPUT_MATRIX


def integrate(x, u, dt: float) -> np.ndarray:
    r"""One explicit fourth-order Runge-Kutta step of `xdot = f(x) + g u` with
    `u` held constant over the step.

    Raises:
        ValueError: if `dt` is outside `(0, 0.01]`.
        RuntimeError: if the step produces a non-finite state.
    """
    if not (0.0 < dt <= MAX_DT):
        raise ValueError(f"'dt' must lie in (0, {MAX_DT}], got {dt}")
    x = _as_vector(x)
    gu = _INPUT_MATRIX @ np.asarray(u, dtype=float).reshape(NU)
    k1 = drift(x) + gu
    k2 = drift(x + 0.5 * dt * k1) + gu
    k3 = drift(x + 0.5 * dt * k2) + gu
    k4 = drift(x + dt * k3) + gu
    result = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(result)):
        raise RuntimeError("integration produced a non-finite state")
    return result


def leg_ik(offset, leg: Optional[LegGeometry] = None) -> JointState:
    r"""Knee length and hip angle for a toe offset in the leg frame.

    The leg frame's first axis points straight down from the hip and its
    second axis points away from the body center, so `knee = |offset|` and
    `hip = atan2(offset[1], offset[0])`. The feasibility flag checks `leg`'s
    ranges when a leg is given.
    """
    offset = check_finite("offset", offset).ravel()
    px, py = float(offset[0]), float(offset[1])
    knee = math.hypot(px, py)
    if knee == 0.0:
        raise ValueError("toe offset at the hip: hip angle is undefined")
    hip = math.atan2(py, px)
    feasible = True
    if leg is not None:
        feasible = (leg.knee_range[0] <= knee <= leg.knee_range[1]) and (leg.hip_range[0] <= hip <= leg.hip_range[1])
    return JointState(knee, hip, feasible)


def leg_fk(joints: JointState) -> np.ndarray:
    return np.array([joints.knee * math.cos(joints.hip), joints.knee * math.sin(joints.hip)])


def leg_frame_offset(x, leg, geometry: RobotGeometry) -> np.ndarray:
    """Toe offset from the hip anchor in the leg frame (down, outward)."""
    x = _as_vector(x)
    i = leg_index(leg)
    spec = geometry.legs[i]
    ix, iz, _, _ = ee_state_index(i)
    wx, wz = x[ix] - x[BODY_X], x[iz] - x[BODY_Z]
    c, s = math.cos(x[BODY_PITCH]), math.sin(x[BODY_PITCH])
    # body-frame toe position minus the anchor
    bx = c * wx - s * wz - spec.hip_anchor[0]
    bz = s * wx + c * wz - spec.hip_anchor[2]
    return np.array([-bz, spec.outward * bx])


def world_foot_position(x, leg, geometry: RobotGeometry) -> np.ndarray:
    """World toe (wheel center) position: origin plus the yaw-rotated local
    offset, whose lateral coordinate is the leg's hip-anchor offset."""
    x = _as_vector(x)
    i = leg_index(leg)
    ix, iz, _, _ = ee_state_index(i)
    local = np.array([x[ix], geometry.legs[i].hip_anchor[1], x[iz]])
    return x[POSITION] + rot_z(x[YAW]) @ local


def world_body_pose(x) -> Tuple[np.ndarray, np.ndarray]:
    x = _as_vector(x)
    yaw_rot = rot_z(x[YAW])
    center = x[POSITION] + yaw_rot @ np.array([x[BODY_X], 0.0, x[BODY_Z]])
    return center, yaw_rot @ rot_y(x[BODY_PITCH])


def body_cuboid(x, geometry: RobotGeometry) -> Cuboid:
    center, rotation = world_body_pose(x)
    return Cuboid(center, rotation, np.asarray(geometry.body_half_extents, dtype=float))


def origin_exchange(x, new_origin: OriginPose) -> np.ndarray:
    r"""Re-express the state relative to a new ground-moving origin.

    The local frame carries no lateral coordinates, so the new origin must lie
    on the current heading line and keep the current yaw. World positions are
    then preserved exactly. World velocities are preserved exactly when the
    yaw rate is zero, which is how the gait schedules the switch.

    An exchange that also turns the origin, or moves it sideways (for example
    onto a drive wheel off the heading line while the robot drives), has no
    representation in this state and raises instead of moving the feet.

    Raises:
        ValueError: if the new origin is off the heading line or changes yaw.
    """
    x = _as_vector(x).copy()
    position = check_finite("new_origin.position", new_origin.position).reshape(3)
    new_yaw = float(new_origin.yaw)
    yaw = x[YAW]
    if abs(math.remainder(new_yaw - yaw, 2.0 * math.pi)) > 1e-12:
        raise ValueError(f"origin exchange cannot change yaw ({yaw} -> {new_yaw})")
    heading = np.array([math.cos(yaw), math.sin(yaw)])
    shift = position - x[POSITION]
    lateral = -heading[1] * shift[0] + heading[0] * shift[1]
    if abs(lateral) > _LATERAL_TOL:
        raise ValueError(f"new origin is {lateral:.3e} m off the heading line")
    forward = heading @ shift[:2]
    if abs(x[YAW_RATE] * forward) > _LATERAL_TOL:
        logger.debug("origin exchange at yaw rate %.3e drops lateral velocity %.3e", x[YAW_RATE], x[YAW_RATE] * forward)

    x[POSITION] = x[POSITION] + forward * np.array([heading[0], heading[1], 0.0]) + np.array([0.0, 0.0, shift[2]])
    x[BODY_X] -= forward
    x[BODY_Z] -= shift[2]
    for i in range(len(LEGS)):
        ix, iz, _, _ = ee_state_index(i)
        x[ix] -= forward
        x[iz] -= shift[2]
    return x
