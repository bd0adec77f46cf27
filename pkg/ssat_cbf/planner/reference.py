#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple
import logging
import math
import numpy as np

from .. import model
from ..geometry import Cuboid
from ..utils import rot_z
from ..safety import FilterContext
from .commands import CommandScript
from .footsteps import FootstepPlan, adjust_to_planes, nearest_plane, nominal_footsteps, plane_under, swing_profile
from .gait import GaitParams, gait_schedule, support_switches
from .region import ConvexRegion, Plane, safe_convex_region
from .yaw import YawSpline, yaw_trajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrackingGains:
    speed: float = 2.0
    yaw_p: float = 16.0
    yaw_d: float = 8.0
    body_p: float = 25.0
    body_d: float = 10.0
    swing_p: float = 100.0
    swing_d: float = 20.0
    stance_p: float = 100.0
    stance_d: float = 20.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value >= 0:
                raise ValueError(f"tracking gain '{name}' must be non-negative, got {value}")


class Landing(NamedTuple):
    t: float
    leg: int
    point: np.ndarray
    target: np.ndarray
    plane_id: str
    region: ConvexRegion


def _world_to_local(profile: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Local `(x, z)` position, rate and feedforward acceleration of a world toe profile."""
    yaw, speed, yaw_rate = x[model.YAW], x[model.SPEED], x[model.YAW_RATE]
    heading = np.array([math.cos(yaw), math.sin(yaw)])
    lateral = np.array([-heading[1], heading[0]])
    rel = profile[0, :2] - x[:2]
    out = np.zeros((3, 2))
    out[0] = heading @ rel, profile[0, 2] - x[2]
    out[1] = heading @ profile[1, :2] - speed + yaw_rate * (lateral @ rel), profile[1, 2]
    out[2] = heading @ profile[2, :2], profile[2, 2]
    return out


def body_height_reference(x, heights: Sequence[float], geometry: model.RobotGeometry, params: GaitParams) -> float:
    """Origin-relative body height above the highest foothold plane."""
    top = max(heights)
    raise_by = params.body_raise if max(heights) - min(heights) > 1e-6 else 0.0
    return top + geometry.body_height + raise_by - float(np.asarray(x)[2])


def reference_input(
        t: float,
        x,
        plan: FootstepPlan,
        yaw: YawSpline,
        script: CommandScript,
        current_planes: Mapping[int, Plane],
        geometry: model.RobotGeometry,
        params: GaitParams,
        gains: TrackingGains = TrackingGains(),
        limits: model.InputLimits = model.InputLimits(),
    ) -> np.ndarray:
    r"""Nominal input `u_ref` from proportional-derivative tracking.

    The origin tracks the commanded speed and the yaw spline (with its
    acceleration as feedforward). The body tracks the mean foot offset from
    the hip anchors, a height above the highest foothold and zero pitch.
    Swinging feet track `swing_profile` with feedforward; stance feet roll
    (zero local rate) at their plane height. The result is clipped to
    `limits`.
    """
    x = np.asarray(x, dtype=float)
    u = np.zeros(model.NU)
    cmd = script.at(t)
    u[model.U_ACC] = gains.speed * (cmd.v - x[model.SPEED])
    yaw_error = math.remainder(yaw(t) - x[model.YAW], 2.0 * math.pi)
    u[model.U_YAW_ACC] = (
        yaw.acceleration(t)
        + gains.yaw_d * (yaw.rate(t) - x[model.YAW_RATE])
        + gains.yaw_p * yaw_error
    )

    swinging = plan.swinging() if plan is not None else ()
    tau = plan.tau(t) if plan is not None else 1.0
    heights = [current_planes[i].height for i in range(len(model.LEGS)) if i not in swinging]
    heights += [plan.steps[i].target_height for i in swinging]
    offsets = [x[model.ee_state_index(i)[0]] - leg.hip_anchor[0] for i, leg in enumerate(geometry.legs)]
    body_ref = np.array([np.mean(offsets), body_height_reference(x, heights, geometry, params), 0.0])
    u[model.U_BODY] = gains.body_p * (body_ref - x[model.BODY_Q]) - gains.body_d * x[model.BODY_QD]

    for i, leg in enumerate(geometry.legs):
        ix, iz, ixd, izd = model.ee_state_index(i)
        ux, uz = model.ee_input_index(i)
        if i in swinging and tau < 1.0:
            local = _world_to_local(swing_profile(plan.steps[i], tau, plan.duration, params), x)
            position = np.array([x[ix], x[iz]])
            rate = np.array([x[ixd], x[izd]])
            u[[ux, uz]] = local[2] + gains.swing_d * (local[1] - rate) + gains.swing_p * (local[0] - position)
        else:
            height = plan.steps[i].target_height if i in swinging else current_planes[i].height
            floor = height + leg.wheel_radius - x[2]
            u[ux] = -gains.stance_d * x[ixd]
            u[uz] = gains.stance_p * (floor - x[iz]) - gains.stance_d * x[izd]
    return limits.clip(u)


class Planner:
    r"""Per-episode reference generator.

    Owns the gait clock, the current footstep plan, the yaw spline and the
    scene snapshot. The control loop calls `switch_due`/`on_support_switch`
    once per tick before `reference` and `context`.

    Example:
        >>> geometry = model.default_geometry()
        >>> floor = Plane("floor", [[-5, -5], [5, -5], [5, 5], [-5, 5]], 0.0)
        >>> planner = Planner(geometry, GaitParams(), CommandScript.constant(), [floor], [], 4.0)
        >>> x = model.RobotState.standing(geometry).vector
        >>> planner.reset(x)
        >>> planner.switch_due(0.0)
        True
    """

    def __init__(
            self,
            geometry: model.RobotGeometry,
            params: GaitParams,
            script: CommandScript,
            planes: Sequence[Plane],
            obstacles: Sequence[Cuboid],
            duration: float,
            gains: Optional[TrackingGains] = None,
            limits: Optional[model.InputLimits] = None,
            yaw0: float = 0.0,
        ):
        self.geometry = geometry
        self.params = params
        self.script = script
        self.gains = gains or TrackingGains()
        self.limits = limits or model.InputLimits()
        self.update_scene(planes, obstacles)
        knots = support_switches(0.0, duration + params.cycle_time, params)
        self.yaw = yaw_trajectory(script, knots, yaw0)
        self.plan: Optional[FootstepPlan] = None
        self.current_planes: Dict[int, Plane] = {}
        self.stance_regions: Dict[int, ConvexRegion] = {}
        self.half_cycle = -1

    def update_scene(self, planes: Sequence[Plane], obstacles: Sequence[Cuboid]):
        if not planes:
            raise ValueError("planner needs at least one plane")
        self.planes = tuple(planes)
        self.obstacles = tuple(obstacles)

    def reset(self, x):
        self.plan = None
        self.half_cycle = -1
        self.stance_regions = {}
        self.current_planes = {}
        for i in range(len(model.LEGS)):
            toe = model.world_foot_position(x, i, self.geometry)
            plane = plane_under(toe[:2], self.planes) or nearest_plane(toe[:2], self.planes)
            self.current_planes[i] = plane

    def phase(self, t: float):
        return gait_schedule(t, self.params)

    def switch_due(self, t: float) -> bool:
        return self.phase(t).half_cycle != self.half_cycle

    def on_support_switch(self, t: float, x) -> Tuple[model.OriginPose, List[Landing]]:
        r"""Close the finished half-cycle and plan the next one.

        Returns the new ground-moving origin (midpoint of the stance drive
        wheels, on the current heading line) and the landings of the legs that
        just finished swinging.
        """
        x = np.asarray(x, dtype=float)
        if not self.current_planes:
            self.reset(x)
        landings = []
        if self.plan is not None:
            by_id = {plane.id: plane for plane in self.planes}
            for leg, step in self.plan.steps.items():
                if not step.swing:
                    continue
                self.current_planes[leg] = by_id.get(step.plane_id, self.current_planes[leg])
                point = model.world_foot_position(x, leg, self.geometry)
                landings.append(Landing(t, leg, point, step.target, step.plane_id, step.region))

        phase = self.phase(t)
        self.half_cycle = phase.half_cycle
        targets = nominal_footsteps(self.script.at(t), x, phase.swing_legs, self.geometry, self.params.lead * self.params.cycle_time)
        swing_planes = {leg: self.current_planes[leg] for leg in phase.swing_legs}
        self.plan = adjust_to_planes(targets, x, swing_planes, self.planes, self.obstacles, self.geometry, self.params, t)

        self.stance_regions = {}
        for leg in range(len(model.LEGS)):
            step = self.plan.steps.get(leg)
            if step is not None and step.swing:
                continue
            toe = model.world_foot_position(x, leg, self.geometry)
            region, feasible = safe_convex_region(self.current_planes[leg], self.obstacles, toe, self.params.region_inset)
            if feasible:
                self.stance_regions[leg] = region
            else:
                logger.warning("%s stance toe %s lies outside its safe region", model.LEGS[leg], np.round(toe[:2], 3))

        logger.info("support switch at t=%.3f: tripod %s swings %s", t, phase.swing_tripod,
                    [model.LEGS[leg] for leg in self.plan.swinging()])
        return self.origin_pose(x, phase.drive_wheels), landings

    def origin_pose(self, x, drive_wheels: Sequence[int]) -> model.OriginPose:
        x = np.asarray(x, dtype=float)
        ix = [model.ee_state_index(i)[0] for i in drive_wheels]
        iz = [model.ee_state_index(i)[1] for i in drive_wheels]
        lateral = float(np.mean([self.geometry.legs[i].hip_anchor[1] for i in drive_wheels]))
        radius = float(np.mean([self.geometry.legs[i].wheel_radius for i in drive_wheels]))
        local = np.array([np.mean(x[ix]), lateral, np.mean(x[iz]) - radius])
        position = x[:3] + rot_z(x[model.YAW]) @ local
        return model.OriginPose(position, float(x[model.YAW]))

    def reference(self, t: float, x) -> np.ndarray:
        return reference_input(t, x, self.plan, self.yaw, self.script, self.current_planes,
                               self.geometry, self.params, self.gains, self.limits)

    def context(self, t: float, x) -> FilterContext:
        """Swing legs, foothold regions and floor heights the safety filter needs at `t`."""
        x = np.asarray(x, dtype=float)
        swinging = self.plan.swinging() if self.plan is not None else ()
        tau = self.plan.tau(t) if self.plan is not None else 1.0
        lowering = self.phase(t).tau >= self.params.lower_start
        regions = dict(self.stance_regions)
        floors = {}
        for leg in swinging:
            step = self.plan.steps[leg]
            if lowering or tau >= 1.0:
                regions[leg] = step.region
            toe = model.world_foot_position(x, leg, self.geometry)
            plane = plane_under(toe[:2], self.planes)
            height = plane.height if plane is not None else min(step.start_height, step.target_height)
            floors[leg] = height + self.geometry.legs[leg].wheel_radius - x[2]
        return FilterContext(tuple(swinging), regions, floors)
