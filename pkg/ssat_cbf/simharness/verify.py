#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

"""Offline safety check of an episode log with exact, non-smooth geometry."""

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional
import math
import numpy as np
import pandas as pd

from .. import model
from ..geometry import sat_margin
from .episode import KINDS, EpisodeLog
from .scene import Scene

MARGIN_TOL = 1e-6
JOINT_TOL = 1e-6
LANDING_TOL = 1e-3


class Violation(NamedTuple):
    t: float
    kind: str
    detail: str
    value: float


@dataclass
class SafetyReport:
    r"""Result of `verify_safety`.

    Attributes:
        min_body_margin: Smallest exact SAT margin between the body and any
            obstacle over the episode (inf without obstacles).
        min_margin_per_obstacle: The same, per obstacle.
        max_joint_excursion: Largest distance of a knee or hip value outside
            its range (0 when all joints stayed inside).
        foothold_violations: Landings outside their foothold region.
        max_tick_us: Largest assembly + solve time of a tick.
        max_smooth_exact_gap: Largest `|exact - smooth|` body margin
            difference over ticks where both exist.
    """
    min_body_margin: float
    min_margin_per_obstacle: np.ndarray
    max_joint_excursion: float
    foothold_violations: int
    max_tick_us: float
    max_smooth_exact_gap: float
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.violations, columns=Violation._fields)

    def summary(self) -> dict:
        return {
            "min body margin": self.min_body_margin,
            "max joint excursion": self.max_joint_excursion,
            "foothold violations": self.foothold_violations,
            "max tick us": self.max_tick_us,
            "max smooth exact gap": self.max_smooth_exact_gap,
            "violations": len(self.violations),
        }


def verify_safety(
        log: EpisodeLog,
        scene: Scene,
        geometry: Optional[model.RobotGeometry] = None,
        margin_tol: float = MARGIN_TOL,
        joint_tol: float = JOINT_TOL,
        landing_tol: float = LANDING_TOL,
    ) -> SafetyReport:
    r"""Recompute safety from the logged states and the scene alone.

    Every tick is checked for body/obstacle separation with the exact SAT
    margin against the original (uninflated) obstacles, and every leg for
    knee and hip ranges through `leg_ik`. Every landing is checked against
    its foothold region. Only the first violation of each kind and
    obstacle or leg is listed.
    """
    geometry = geometry or model.default_geometry()
    violations: List[Violation] = []
    n_obstacles = len(scene.obstacles)
    per_obstacle = np.full(n_obstacles, math.inf)
    exact_min = np.full(len(log), math.inf)
    flagged = set()
    worst_joint = 0.0

    for k in range(len(log)):
        x = log.states[k]
        t = float(log.t[k])
        if n_obstacles:
            body = model.body_cuboid(x, geometry)
            margins = np.array([sat_margin(body, obstacle) for obstacle in scene.obstacles])
            per_obstacle = np.minimum(per_obstacle, margins)
            exact_min[k] = margins.min()
            for j in np.flatnonzero(margins < -margin_tol):
                if ("body", j) not in flagged:
                    flagged.add(("body", j))
                    violations.append(Violation(t, "body_collision", f"obstacle {j}", float(margins[j])))
        for i, leg in enumerate(geometry.legs):
            joints = model.leg_ik(model.leg_frame_offset(x, i, geometry))
            excursions = {
                "knee": max(leg.knee_range[0] - joints.knee, joints.knee - leg.knee_range[1], 0.0),
                "hip": max(leg.hip_range[0] - joints.hip, joints.hip - leg.hip_range[1], 0.0),
            }
            for joint, excursion in excursions.items():
                worst_joint = max(worst_joint, excursion)
                if excursion > joint_tol and (joint, i) not in flagged:
                    flagged.add((joint, i))
                    violations.append(Violation(t, "joint_limit", f"{joint}[{leg.name}]", excursion))

    foothold_violations = 0
    for landing in log.landings:
        margin = float(np.min(landing.region.margins(landing.point)))
        if margin < -landing_tol:
            foothold_violations += 1
            violations.append(Violation(landing.t, "foothold", f"landing[{model.LEGS[landing.leg]}]", margin))

    smooth = log.min_h[:, KINDS.index("body_collision")]
    both = np.isfinite(smooth) & np.isfinite(exact_min)
    gap = float(np.max(np.abs(exact_min[both] - smooth[both]), initial=0.0))
    return SafetyReport(
        min_body_margin=float(per_obstacle.min(initial=math.inf)),
        min_margin_per_obstacle=per_obstacle,
        max_joint_excursion=worst_joint,
        foothold_violations=foothold_violations,
        max_tick_us=float(np.max(log.tick_us, initial=0.0)),
        max_smooth_exact_gap=gap,
        violations=sorted(violations, key=lambda v: v.t),
    )
