#!/usr/bin/env python3

from .smoothmath import SmoothAbs, SmoothingParams, SmoothMax, smooth_abs, smooth_max
from .geometry import Cuboid, sat_margin, ssat_margin, ssat_value
from .model import RobotGeometry, RobotState, default_geometry
from .safety import FilterConfig, SafetyFilter
from .planner import CommandScript, Planner
from .simharness import EpisodeConfig, Scene, load_scene, run_episode, verify_safety

__all__ = [
    "SmoothAbs",
    "SmoothMax",
    "SmoothingParams",
    "smooth_abs",
    "smooth_max",
    "Cuboid",
    "sat_margin",
    "ssat_margin",
    "ssat_value",
    "RobotGeometry",
    "RobotState",
    "default_geometry",
    "FilterConfig",
    "SafetyFilter",
    "CommandScript",
    "Planner",
    "EpisodeConfig",
    "Scene",
    "load_scene",
    "run_episode",
    "verify_safety",
]
