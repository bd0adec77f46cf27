#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple
import logging
import math
import numpy as np

from .. import model
from ..geometry import Cuboid
from ..utils import rot_z
from .commands import VelocityCommand, unicycle_rollout
from .gait import GaitParams
from .region import ConvexRegion, Plane, safe_convex_region

logger = logging.getLogger(__name__)


@dataclass
class LegStep:
    """Planned motion of one leg over a half-cycle.

    `start` and `target` are world toe (wheel center) positions. A step
    with `swing=False` keeps rolling contact on its current plane.
    """
    leg: int
    start: np.ndarray
    target: np.ndarray
    plane_id: str
    start_height: float
    target_height: float
    region: ConvexRegion
    swing: bool = True
    retargeted: bool = False


@dataclass
class FootstepPlan:
    t_start: float
    duration: float
    steps: Dict[int, LegStep] = field(default_factory=dict)

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    def tau(self, t: float) -> float:
        return min(max((t - self.t_start) / self.duration, 0.0), 1.0)

    def swinging(self) -> Tuple[int, ...]:
        return tuple(leg for leg, step in self.steps.items() if step.swing)


def anchor_ground_point(x, leg: int, geometry: model.RobotGeometry) -> np.ndarray:
    """World xy below `leg`'s hip anchor for the current body position."""
    x = np.asarray(x, dtype=float)
    local = np.array([x[model.BODY_X] + geometry.legs[leg].hip_anchor[0], geometry.legs[leg].hip_anchor[1]])
    return x[:2] + rot_z(x[model.YAW])[:2, :2] @ local


def nominal_footsteps(
        cmd: VelocityCommand,
        x,
        legs: Iterable[int],
        geometry: model.RobotGeometry,
        horizon: float,
    ) -> Dict[int, np.ndarray]:
    r"""2D landing targets: each leg's hip-anchor ground point after driving
    `cmd` for `horizon` seconds along the unicycle arc.

    Example:
        >>> geometry = model.default_geometry()
        >>> x = model.RobotState.standing(geometry).vector
        >>> nominal_footsteps(VelocityCommand(0.2, 0.0), x, [1], geometry, 1.0)[1]
        array([0.35, 0.  ])
    """
    x = np.asarray(x, dtype=float)
    end, yaw = unicycle_rollout(x[:2], x[model.YAW], cmd, horizon)
    rotation = rot_z(yaw)[:2, :2]
    targets = {}
    for leg in legs:
        anchor = geometry.legs[leg].hip_anchor
        targets[leg] = end + rotation @ np.array([x[model.BODY_X] + anchor[0], anchor[1]])
    return targets


def nearest_plane(xy, planes: Sequence[Plane], reference_height: Optional[float] = None,
                  max_step_height: float = math.inf, capture_distance: float = math.inf) -> Optional[Plane]:
    r"""Plane closest to `xy` horizontally, among planes within
    `max_step_height` of `reference_height`.

    Ties (e.g. `xy` on a shared edge) go to the plane nearest in height to
    `reference_height`, then to the higher one.
    """
    best, best_key = None, None
    for plane in planes:
        if reference_height is not None and abs(plane.height - reference_height) > max_step_height + 1e-12:
            continue
        distance = plane.distance(xy)
        if distance > capture_distance:
            continue
        dz = 0.0 if reference_height is None else abs(plane.height - reference_height)
        key = (round(distance, 9), dz, -plane.height)
        if best_key is None or key < best_key:
            best, best_key = plane, key
    return best


def plane_under(xy, planes: Sequence[Plane], tol: float = 1e-9) -> Optional[Plane]:
    """Highest plane whose polygon covers `xy`."""
    covering = [plane for plane in planes if plane.contains(xy, tol)]
    return max(covering, key=lambda plane: plane.height) if covering else None


def adjust_to_planes(
        targets: Mapping[int, np.ndarray],
        x,
        current_planes: Mapping[int, Plane],
        planes: Sequence[Plane],
        obstacles: Sequence[Cuboid],
        geometry: model.RobotGeometry,
        params: GaitParams,
        t_start: float = 0.0,
    ) -> FootstepPlan:
    r"""Lift each 2D target onto the nearest reachable plane and decide
    whether the leg has to swing.

    A leg whose target lands on its current plane keeps rolling. Targets cut
    away by an obstacle are projected back into the safe region with a
    wheel-radius inset. Legs with no plane within the capture distance hold
    their current foothold.
    """
    x = np.asarray(x, dtype=float)
    plan = FootstepPlan(t_start, params.half_cycle)
    for leg, target in targets.items():
        current = current_planes[leg]
        start = model.world_foot_position(x, leg, geometry)
        radius = geometry.legs[leg].wheel_radius
        plane = nearest_plane(target, planes, current.height, params.max_step_height, params.capture_distance)
        hold = plane is None
        if hold:
            logger.warning("no plane within %.2f m of the %s target %s; leg holds", params.capture_distance, model.LEGS[leg], np.round(target, 3))
            plane, target = current, start[:2]
        swing = (plane.id != current.id or params.step_on_flat) and not hold
        region, feasible = safe_convex_region(plane, obstacles, target if swing else start[:2], params.region_inset)
        retargeted = False
        if swing and not feasible:
            target = region.project(target, radius)
            retargeted = True
            logger.info("re-targeted %s footstep to %s on plane %s", model.LEGS[leg], np.round(target, 3), plane.id)
        if not swing:
            target = start[:2]
        point = np.array([target[0], target[1], plane.height + radius])
        plan.steps[leg] = LegStep(leg, start, point, plane.id, current.height, plane.height, region, swing, retargeted)
    return plan


def smoothstep(s: float) -> Tuple[float, float, float]:
    """Cubic `3s^2 - 2s^3` with its first and second derivatives, clamped to [0, 1]."""
    if s <= 0.0:
        return 0.0, 0.0, 0.0
    if s >= 1.0:
        return 1.0, 0.0, 0.0
    return 3 * s * s - 2 * s ** 3, 6 * s - 6 * s * s, 6 - 12 * s


def swing_profile(step: LegStep, tau: float, duration: float, params: GaitParams) -> np.ndarray:
    r"""World toe reference of a swinging leg at half-cycle fraction `tau`.

    Returns a 3x3 array: rows are position, velocity and acceleration of
    `(x, y, z)`. The horizontal motion is one cubic between `forward_start`
    and `forward_end`; the vertical motion rises to the apex by `lift_end`,
    holds, and lowers from `lower_start`.
    """
    out = np.zeros((3, 3))
    width = params.forward_end - params.forward_start
    s, ds, dds = smoothstep((tau - params.forward_start) / width)
    delta = step.target - step.start
    out[0, :2] = step.start[:2] + s * delta[:2]
    out[1, :2] = ds / (width * duration) * delta[:2]
    out[2, :2] = dds / (width * duration) ** 2 * delta[:2]

    radius = step.start[2] - step.start_height
    z0, z1 = step.start[2], step.target[2]
    apex = max(step.start_height, step.target_height) + radius + params.swing_height
    if tau < params.lift_end:
        span = params.lift_end
        s, ds, dds = smoothstep(tau / span)
        lo, hi = z0, apex
    elif tau < params.lower_start:
        span, s, ds, dds, lo, hi = 1.0, 1.0, 0.0, 0.0, z0, apex
    else:
        span = 1.0 - params.lower_start
        s, ds, dds = smoothstep((tau - params.lower_start) / span)
        lo, hi = apex, z1
    out[0, 2] = lo + s * (hi - lo)
    out[1, 2] = ds / (span * duration) * (hi - lo)
    out[2, 2] = dds / (span * duration) ** 2 * (hi - lo)
    return out
