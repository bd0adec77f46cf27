#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

"""Declarative JSON scenes: planes, cuboid obstacles and stairs generators.

Lengths are in meters and angles in radians. A scene file looks like::

    {
      "name": "stairs",
      "planes": [{"id": "floor", "vertices": [[-3, -1], [1, -1], [1, 1], [-3, 1]], "height": 0.0}],
      "obstacles": [{"center": [2, 0, 0.1], "half_extents": [0.1, 0.5, 0.1], "yaw": 0.0}],
      "stairs": [{"rise": 0.165, "run": 0.35, "count": 5, "start": 1.0}]
    }
"""

from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Tuple, Union
import json
import math
import os
import numpy as np

from ..geometry import Cuboid
from ..planner import Plane, plane_under

EDGE_DEPTH = 0.05


class SceneError(ValueError):
    """Invalid scene description; `path` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class StairsSpec:
    r"""Straight flight of `count` steps climbing along +x.

    The flight starts at `start` (x of the first riser), is `width` wide and
    centered on `y`. The approach plane spans `approach` meters before the
    first riser and the top step is extended by `landing` meters.
    """
    rise: float = 0.165
    run: float = 0.35
    count: int = 5
    start: float = 1.0
    width: float = 1.2
    y: float = 0.0
    approach: float = 3.0
    landing: float = 1.5
    base_height: float = 0.0

    def __post_init__(self):
        if not (self.rise > 0 and self.run > EDGE_DEPTH and self.count >= 1 and self.width > 0):
            raise ValueError("stairs need rise > 0, run > edge depth, count >= 1 and width > 0")
        if not (self.approach > 0 and self.landing >= 0):
            raise ValueError("stairs need approach > 0 and landing >= 0")

    def expand(self, prefix: str = "stairs") -> Tuple[List[Plane], List[Cuboid]]:
        """`count + 1` planes and one edge cuboid per riser, on the upper side of the edge."""
        y0, y1 = self.y - 0.5 * self.width, self.y + 0.5 * self.width

        def rect(x0, x1):
            return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]

        planes = [Plane(f"{prefix}.ground", rect(self.start - self.approach, self.start), self.base_height)]
        obstacles = []
        for k in range(1, self.count + 1):
            x0 = self.start + (k - 1) * self.run
            x1 = x0 + self.run + (self.landing if k == self.count else 0.0)
            height = self.base_height + k * self.rise
            planes.append(Plane(f"{prefix}.step{k}", rect(x0, x1), height))
            center = [x0 + 0.5 * EDGE_DEPTH, self.y, height - 0.5 * self.rise]
            obstacles.append(Cuboid.from_pose(center, [0.5 * EDGE_DEPTH, 0.5 * self.width, 0.5 * self.rise]))
        return planes, obstacles


@dataclass(frozen=True)
class Scene:
    planes: Tuple[Plane, ...]
    obstacles: Tuple[Cuboid, ...] = ()
    name: str = "scene"
    stairs: Tuple[StairsSpec, ...] = field(default_factory=tuple)

    def plane(self, plane_id: str) -> Plane:
        for plane in self.planes:
            if plane.id == plane_id:
                return plane
        raise KeyError(plane_id)

    def plane_at(self, xy) -> Optional[Plane]:
        return plane_under(xy, self.planes)

    def ground_height(self, xy) -> float:
        plane = self.plane_at(xy)
        if plane is None:
            raise ValueError(f"no plane under {np.round(np.asarray(xy, dtype=float)[:2], 3).tolist()}")
        return plane.height

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], name: Optional[str] = None) -> "Scene":
        if not isinstance(data, Mapping):
            raise SceneError("<root>", "scene must be a JSON object")
        unknown = set(data) - {"name", "planes", "obstacles", "stairs"}
        if unknown:
            raise SceneError("<root>", f"unknown keys {sorted(unknown)}")
        planes: List[Plane] = []
        obstacles: List[Cuboid] = []
        for i, entry in enumerate(_list(data, "planes")):
            planes.append(_plane(entry, f"planes[{i}]", i))
        for i, entry in enumerate(_list(data, "obstacles")):
            obstacles.append(_obstacle(entry, f"obstacles[{i}]"))
        stairs = []
        for i, entry in enumerate(_list(data, "stairs")):
            path = f"stairs[{i}]"
            if not isinstance(entry, Mapping):
                raise SceneError(path, "must be an object")
            try:
                spec = StairsSpec(**entry)
            except TypeError as e:
                raise SceneError(path, str(e)) from None
            except ValueError as e:
                raise SceneError(path, str(e)) from None
            stair_planes, stair_edges = spec.expand(f"stairs{i}")
            planes += stair_planes
            obstacles += stair_edges
            stairs.append(spec)
        if not planes:
            raise SceneError("planes", "scene needs at least one plane")
        ids = [plane.id for plane in planes]
        if len(set(ids)) != len(ids):
            raise SceneError("planes", f"duplicate plane ids {sorted({i for i in ids if ids.count(i) > 1})}")
        return cls(tuple(planes), tuple(obstacles), name or str(data.get("name", "scene")), tuple(stairs))


def _list(data: Mapping[str, Any], key: str) -> list:
    value = data.get(key, [])
    if not isinstance(value, list):
        raise SceneError(key, "must be a list")
    return value


def _number(entry: Mapping[str, Any], key: str, path: str, default=None) -> float:
    if key not in entry:
        if default is None:
            raise SceneError(f"{path}.{key}", "is required")
        return default
    value = entry[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SceneError(f"{path}.{key}", f"must be a finite number, got {value!r}")
    return float(value)


def _vector(entry: Mapping[str, Any], key: str, path: str, size: Optional[int] = None) -> np.ndarray:
    if key not in entry:
        raise SceneError(f"{path}.{key}", "is required")
    try:
        value = np.asarray(entry[key], dtype=float)
    except (TypeError, ValueError):
        raise SceneError(f"{path}.{key}", "must be numeric") from None
    if size is not None and value.shape != (size,):
        raise SceneError(f"{path}.{key}", f"must have {size} entries")
    if not np.all(np.isfinite(value)):
        raise SceneError(f"{path}.{key}", "must be finite")
    return value


def _plane(entry, path: str, index: int) -> Plane:
    if not isinstance(entry, Mapping):
        raise SceneError(path, "must be an object")
    vertices = _vector(entry, "vertices", path)
    if vertices.ndim != 2 or vertices.shape[1] != 2 or vertices.shape[0] < 3:
        raise SceneError(f"{path}.vertices", "must be a list of at least 3 [x, y] points")
    height = _number(entry, "height", path)
    try:
        return Plane(str(entry.get("id", f"plane{index}")), vertices, height)
    except ValueError as e:
        raise SceneError(f"{path}.vertices", str(e)) from None


def _obstacle(entry, path: str) -> Cuboid:
    if not isinstance(entry, Mapping):
        raise SceneError(path, "must be an object")
    center = _vector(entry, "center", path, 3)
    half_extents = _vector(entry, "half_extents", path, 3)
    if np.any(half_extents <= 0):
        raise SceneError(f"{path}.half_extents", "must be positive")
    angles = [_number(entry, key, path, 0.0) for key in ("yaw", "pitch", "roll")]
    return Cuboid.from_pose(center, half_extents, *angles)


def load_scene(path: Union[str, os.PathLike]) -> Scene:
    r"""Read and validate a JSON scene file, expanding stairs generators.

    Raises:
        SceneError: naming the offending field for any schema violation,
            including non-convex planes.
    """
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise SceneError("<root>", f"invalid JSON: {e}") from None
    return Scene.from_dict(data, name=data.get("name") if isinstance(data, dict) else None)
