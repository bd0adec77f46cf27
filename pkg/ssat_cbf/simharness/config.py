#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Mapping, Optional, Tuple, Union
import math
import os

from ..model import MAX_DT
from ..planner import GaitParams, TrackingGains
from ..safety import ConstraintKind, FilterConfig, default_constraint_specs
from ..smoothmath import SmoothingParams
from ..utils import load_config

# flat keys accepted by `EpisodeConfig.from_dict`, by section
_SMOOTHING_KEYS = {f.name for f in fields(SmoothingParams)}
_GAIT_KEYS = {f.name for f in fields(GaitParams)}
_TRACKING_KEYS = {f"tracking_{f.name}" for f in fields(TrackingGains)}
_GAIN_KEYS = {"lambda_collision", "lambda_joint", "slack_weight"}
_FILTER_KEYS = {"input_weight", "origin_weight", "obstacle_margin", "superellipsoid_N", "toe_prefilter",
                "stability_shrink", "stability_reach", "max_iterations"}
_TOGGLE_KEYS = {kind.value for kind in ConstraintKind} | {"cbf"}
_TOP_KEYS = {"dt", "duration", "seed", "start"}


@dataclass(frozen=True)
class EpisodeConfig:
    r"""Everything that determines one closed-loop episode.

    Args:
        dt: Control period (and integration step) in seconds.
        duration: Simulated time; must be a whole number of ticks.
        seed: Seed for anything random (synthetic loads, sweeps).
        filter: Safety-filter settings including smoothing, gains, weights
            and per-family toggles.
        gait: Gait and footstep settings.
        tracking: Gains of the nominal tracking law.
        start: Initial origin `(x, y, yaw)`; the height is taken from the
            plane underneath.
    """
    dt: float = 1e-3
    duration: float = 30.0
    seed: int = 0
    filter: FilterConfig = field(default_factory=FilterConfig)
    gait: GaitParams = field(default_factory=GaitParams)
    tracking: TrackingGains = field(default_factory=TrackingGains)
    start: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (0.0 < self.dt <= MAX_DT):
            raise ValueError(f"'dt' must lie in (0, {MAX_DT}], got {self.dt}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"'duration' must be positive, got {self.duration}")
        ticks = self.duration / self.dt
        if abs(ticks - round(ticks)) > 1e-6 * max(ticks, 1.0):
            raise ValueError(f"'duration' {self.duration} is not a whole number of ticks of {self.dt}")
        start = tuple(float(v) for v in self.start)
        if len(start) != 3 or not all(math.isfinite(v) for v in start):
            raise ValueError(f"'start' must be three finite numbers, got {self.start}")
        object.__setattr__(self, "start", start)

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.dt))

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]] = None) -> "EpisodeConfig":
        r"""Build a config from nested sections (`smoothing`, `filter`, `gains`,
        `constraints`, `gait`, `tracking`) or the same keys given flat.

        Constraint toggles are booleans keyed by constraint kind; `cbf: false`
        switches every family off.

        Example:
            >>> config = EpisodeConfig.from_dict({"dt": 0.002, "duration": 1.0, "body_collision": False})
            >>> config.n_ticks, config.filter.spec("body_collision").active
            (500, False)
        """
        flat: Dict[str, Any] = {}
        for key, value in (data or {}).items():
            if key in ("smoothing", "filter", "gains", "constraints", "gait") and isinstance(value, Mapping):
                flat.update(value)
            elif key == "tracking" and isinstance(value, Mapping):
                flat.update({f"tracking_{k}": v for k, v in value.items()})
            else:
                flat[key] = value
        known = _SMOOTHING_KEYS | _GAIT_KEYS | _TRACKING_KEYS | _GAIN_KEYS | _FILTER_KEYS | _TOGGLE_KEYS | _TOP_KEYS
        unknown = set(flat) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")

        smoothing = SmoothingParams(**{k: v for k, v in flat.items() if k in _SMOOTHING_KEYS})
        specs = default_constraint_specs(
            float(flat.get("lambda_collision", 4.0)),
            float(flat.get("lambda_joint", 8.0)),
            float(flat.get("slack_weight", 1e6)),
        )
        filter_config = FilterConfig(smoothing=smoothing, constraints=specs,
                                     **{k: v for k, v in flat.items() if k in _FILTER_KEYS})
        if "cbf" in flat and not flat["cbf"]:
            filter_config = filter_config.all_disabled()
        toggles = {k: bool(v) for k, v in flat.items() if k in _TOGGLE_KEYS - {"cbf"}}
        if toggles:
            filter_config = filter_config.with_kinds(**toggles)

        gait = GaitParams(**{k: v for k, v in flat.items() if k in _GAIT_KEYS})
        tracking = TrackingGains(**{k[len("tracking_"):]: v for k, v in flat.items() if k in _TRACKING_KEYS})
        top = {k: flat[k] for k in _TOP_KEYS if k in flat}
        if "start" in top:
            top["start"] = tuple(top["start"])
        return cls(filter=filter_config, gait=gait, tracking=tracking, **top)

    @classmethod
    def from_yaml(cls, path: Optional[Union[str, os.PathLike]]) -> "EpisodeConfig":
        return cls.from_dict(load_config(path))

    def with_cbf(self, enabled: bool) -> "EpisodeConfig":
        """Copy with the body-collision rows switched on or off (the ablation toggle)."""
        return replace(self, filter=self.filter.with_kinds(body_collision=enabled))
