#!/usr/bin/env python3

from .scene import EDGE_DEPTH, Scene, SceneError, StairsSpec, load_scene
from .config import EpisodeConfig
from .episode import EpisodeLog, initial_state, run_episode, synthetic_load
from .verify import SafetyReport, Violation, verify_safety

__all__ = [
    "EDGE_DEPTH",
    "Scene",
    "SceneError",
    "StairsSpec",
    "load_scene",
    "EpisodeConfig",
    "EpisodeLog",
    "initial_state",
    "run_episode",
    "synthetic_load",
    "SafetyReport",
    "Violation",
    "verify_safety",
]
