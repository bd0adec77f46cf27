#!/usr/bin/env python3

from .commands import CommandScript, VelocityCommand, unicycle_rollout
from .gait import GaitParams, GaitPhase, LegPhase, TRIPOD_A, TRIPOD_B, gait_schedule, support_switches
from .region import ConvexRegion, Plane, polygon_halfspaces, safe_convex_region
from .footsteps import FootstepPlan, LegStep, adjust_to_planes, nearest_plane, nominal_footsteps, plane_under, swing_profile
from .yaw import YawSpline, yaw_trajectory
from .reference import Landing, Planner, TrackingGains, reference_input

__all__ = [
    "CommandScript",
    "VelocityCommand",
    "unicycle_rollout",
    "GaitParams",
    "GaitPhase",
    "LegPhase",
    "TRIPOD_A",
    "TRIPOD_B",
    "gait_schedule",
    "support_switches",
    "ConvexRegion",
    "Plane",
    "polygon_halfspaces",
    "safe_convex_region",
    "FootstepPlan",
    "LegStep",
    "adjust_to_planes",
    "nearest_plane",
    "nominal_footsteps",
    "plane_under",
    "swing_profile",
    "YawSpline",
    "yaw_trajectory",
    "Landing",
    "Planner",
    "TrackingGains",
    "reference_input",
]
