#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union
import logging
import math
import os
import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation
from tqdm import tqdm

from .. import model
from ..geometry import Cuboid
from ..planner import CommandScript, Landing, Planner
from ..safety import ConstraintKind, FilterContext, SafetyFilter
from .config import EpisodeConfig
from .scene import Scene

logger = logging.getLogger(__name__)

STATE_COLUMNS = (
    ["px", "py", "pz", "yaw", "speed", "yaw_rate", "body_x", "body_z", "body_pitch", "body_xd", "body_zd", "body_pitchd"]
    + [f"{leg}_{c}" for leg in model.LEGS for c in ("x", "z", "xd", "zd")]
)
INPUT_COLUMNS = ["acc", "yaw_acc", "body_x_acc", "body_z_acc", "body_pitch_acc"] + [
    f"{leg}_{c}_acc" for leg in model.LEGS for c in ("x", "z")
]
KINDS = [kind.value for kind in ConstraintKind]


@dataclass
class EpisodeLog:
    r"""Per-tick record of a closed-loop episode.

    Arrays have one row per tick: `states` (n x 36) holds the state at the
    start of the tick, `u_ref`/`u` (n x 17) the nominal and filtered inputs,
    `min_h` (n x 6) the smallest barrier value per constraint kind (NaN when a
    kind had no rows), `row_counts` (n x 6) the rows per kind, and the
    timings are in microseconds.
    """
    dt: float
    t: np.ndarray
    states: np.ndarray
    u_ref: np.ndarray
    u: np.ndarray
    min_h: np.ndarray
    row_counts: np.ndarray
    max_slack: np.ndarray
    assembly_us: np.ndarray
    solve_us: np.ndarray
    status: List[str]
    fallback: np.ndarray
    landings: List[Landing] = field(default_factory=list)
    margin: float = 0.0

    def __len__(self) -> int:
        return self.t.size

    @classmethod
    def empty(cls, n: int, dt: float, margin: float = 0.0) -> "EpisodeLog":
        kinds = len(KINDS)
        return cls(
            dt=dt,
            t=np.zeros(n),
            states=np.zeros((n, model.NX)),
            u_ref=np.zeros((n, model.NU)),
            u=np.zeros((n, model.NU)),
            min_h=np.full((n, kinds), np.nan),
            row_counts=np.zeros((n, kinds), dtype=int),
            max_slack=np.zeros(n),
            assembly_us=np.zeros(n),
            solve_us=np.zeros(n),
            status=[""] * n,
            fallback=np.zeros(n, dtype=bool),
            margin=margin,
        )

    @property
    def tick_us(self) -> np.ndarray:
        return self.assembly_us + self.solve_us

    def status_counts(self) -> Dict[str, int]:
        return pd.Series(self.status).value_counts().to_dict()

    def to_frame(self) -> pd.DataFrame:
        """One row per tick: t, 36 states, 17 inputs, per-kind min h, timings in microseconds."""
        frame = pd.DataFrame(self.states, columns=STATE_COLUMNS)
        frame.insert(0, "t", self.t)
        frame = frame.join(pd.DataFrame(self.u, columns=[f"u_{c}" for c in INPUT_COLUMNS]))
        frame = frame.join(pd.DataFrame(self.u_ref, columns=[f"uref_{c}" for c in INPUT_COLUMNS]))
        frame = frame.join(pd.DataFrame(self.min_h, columns=[f"min_h_{k}" for k in KINDS]))
        frame = frame.join(pd.DataFrame(self.row_counts, columns=[f"rows_{k}" for k in KINDS]))
        frame["max_slack"] = self.max_slack
        frame["assembly_us"] = self.assembly_us
        frame["solve_us"] = self.solve_us
        frame["tick_us"] = self.tick_us
        frame["status"] = self.status
        frame["fallback"] = self.fallback
        return frame

    def to_csv(self, path: Union[str, os.PathLike]):
        self.to_frame().to_csv(path, index=False)

    def landings_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"t": l.t, "leg": model.LEGS[l.leg], "x": l.point[0], "y": l.point[1], "z": l.point[2],
                 "target_x": l.target[0], "target_y": l.target[1], "plane": l.plane_id,
                 "region_margin": float(np.min(l.region.margins(l.point)))}
                for l in self.landings
            ],
            columns=["t", "leg", "x", "y", "z", "target_x", "target_y", "plane", "region_margin"],
        )


def initial_state(scene: Scene, config: EpisodeConfig, geometry: model.RobotGeometry) -> np.ndarray:
    x0, y0, yaw = config.start
    height = scene.ground_height([x0, y0])
    return model.RobotState.standing(geometry, (x0, y0, height), yaw).vector


def run_episode(
        scene: Scene,
        script: CommandScript,
        config: Optional[EpisodeConfig] = None,
        geometry: Optional[model.RobotGeometry] = None,
        progress: bool = False,
    ) -> EpisodeLog:
    r"""Closed-loop run: planner reference, safety filter, then one RK4 step per tick.

    The origin is exchanged at every support switch before the tick's input
    is computed. A tick whose filtered input makes the integrator fail is
    retried with zero input and flagged as a fallback.

    Example:
        >>> from ssat_cbf.planner import Plane
        >>> scene = Scene((Plane("floor", [[-5, -5], [5, -5], [5, 5], [-5, 5]], 0.0),))
        >>> config = EpisodeConfig(dt=0.01, duration=0.1)
        >>> len(run_episode(scene, CommandScript.constant(), config))
        10
    """
    config = config or EpisodeConfig()
    geometry = geometry or model.default_geometry()
    x = initial_state(scene, config, geometry)
    planner = Planner(geometry, config.gait, script, scene.planes, scene.obstacles, config.duration,
                      config.tracking, config.filter.limits, yaw0=config.start[2])
    planner.reset(x)
    safety = SafetyFilter(geometry, config.filter, scene.obstacles)
    log = EpisodeLog.empty(config.n_ticks, config.dt, safety.config.margin)
    zero = np.zeros(model.NU)

    ticks = range(config.n_ticks)
    for k in tqdm(ticks, desc=scene.name, disable=not progress):
        t = k * config.dt
        if planner.switch_due(t):
            pose, landings = planner.on_support_switch(t, x)
            x = model.origin_exchange(x, pose)
            log.landings += landings
        u_ref = planner.reference(t, x)
        result = safety.filter(x, u_ref, planner.context(t, x))

        log.t[k] = t
        log.states[k] = x
        log.u_ref[k] = u_ref
        log.u[k] = result.u
        log.min_h[k] = [result.min_h()[kind] for kind in KINDS]
        log.row_counts[k] = [result.row_counts()[kind] for kind in KINDS]
        log.max_slack[k] = result.max_slack
        log.assembly_us[k] = 1e6 * result.assembly_time
        log.solve_us[k] = 1e6 * result.solve_time
        log.status[k] = result.status
        log.fallback[k] = result.fallback

        try:
            x = model.integrate(x, result.u, config.dt)
        except RuntimeError as e:
            logger.error("integration failed at t=%.3f (%s); applying zero input", t, e)
            x = model.integrate(x, zero, config.dt)
            log.u[k] = zero
            log.fallback[k] = True
            safety.reset()
    return log


def synthetic_load(n_rows: int = 269, seed: int = 0, geometry: Optional[model.RobotGeometry] = None):
    r"""State, obstacles and context for which `SafetyFilter` assembles exactly
    `n_rows` rows with default settings.

    Joint-limit and stability rows are always present (36); two swinging
    toes contribute a foot-height row each, and the remainder are body rows
    against randomly oriented boxes scattered 1.5 to 3 m from the robot,
    beyond the toe prefilter.

    Returns:
        `(x, obstacles, context)`.
    """
    geometry = geometry or model.default_geometry()
    base = 4 * len(model.LEGS) + 2 * len(model.LEGS) + 2
    if n_rows < base:
        raise ValueError(f"'n_rows' must be at least {base}, got {n_rows}")
    rng = np.random.default_rng(seed)
    x = model.RobotState.standing(geometry).vector
    n_obstacles = n_rows - base
    radius = rng.uniform(1.5, 3.0, n_obstacles)
    angle = rng.uniform(0.0, 2.0 * math.pi, n_obstacles)
    centers = np.stack([radius * np.cos(angle), radius * np.sin(angle), rng.uniform(0.0, 0.5, n_obstacles)], axis=1)
    extents = rng.uniform(0.02, 0.1, (n_obstacles, 3))
    rotations = Rotation.random(n_obstacles, random_state=rng).as_matrix() if n_obstacles else []
    obstacles = [Cuboid(c, r, e) for c, r, e in zip(centers, rotations, extents)]
    swing = (model.LEGS.index("MF"), model.LEGS.index("LR"))
    floors = {leg: 0.0 for leg in swing}
    return x, obstacles, FilterContext(swing, {}, floors)
