#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

"""Planar footholds and convex safe regions on them."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple
import logging
import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection
from shapely.geometry import Point, Polygon
from shapely.geometry.polygon import orient

from ..geometry import Cuboid, footprint
from ..safety.qp import QpProblem, solve_qp

logger = logging.getLogger(__name__)

EMPTY_TOL = 1e-9


@dataclass(frozen=True)
class Plane:
    """Horizontal convex polygon (world xy, counter-clockwise) at `height`."""
    id: str
    vertices: np.ndarray
    height: float

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if vertices.shape[0] < 3 or not np.all(np.isfinite(vertices)):
            raise ValueError(f"plane {self.id!r} needs at least 3 finite vertices")
        polygon = Polygon(vertices)
        if not polygon.is_valid or polygon.area <= 0:
            raise ValueError(f"plane {self.id!r} is not a valid polygon")
        if polygon.convex_hull.area - polygon.area > 1e-9 * max(polygon.area, 1.0):
            raise ValueError(f"plane {self.id!r} is not convex")
        vertices = np.asarray(orient(polygon, sign=1.0).exterior.coords)[:-1]
        vertices.flags.writeable = False
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "height", float(self.height))

    @cached_property
    def polygon(self) -> Polygon:
        return Polygon(self.vertices)

    def contains(self, xy, tol: float = 0.0) -> bool:
        return bool(self.polygon.buffer(tol).covers(Point(np.asarray(xy, dtype=float)[:2])))

    def distance(self, xy) -> float:
        return float(self.polygon.distance(Point(np.asarray(xy, dtype=float)[:2])))


def polygon_halfspaces(vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit inward normals `a` and offsets `b` of a CCW polygon, `a.p + b >= 0` inside."""
    vertices = np.asarray(vertices, dtype=float)
    edges = np.roll(vertices, -1, axis=0) - vertices
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return normals, -np.einsum("ij,ij->i", normals, vertices)


@dataclass
class ConvexRegion:
    r"""Intersection of half-planes `normals[j] . p + offsets[j] >= 0` in world xy.

    Normals are unit length, so `margins(p)` are signed distances to the
    edge lines.
    """
    normals: np.ndarray
    offsets: np.ndarray
    plane_id: Optional[str] = None
    height: float = 0.0
    cut_obstacles: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 2)
        self.offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if self.normals.shape[0] != self.offsets.size:
            raise ValueError("'normals' and 'offsets' have different lengths")

    def margins(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points[..., :2] @ self.normals.T + self.offsets

    def contains(self, points, tol: float = 0.0):
        inside = np.all(self.margins(points) >= -tol, axis=-1)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def inset(self, distance: float) -> "ConvexRegion":
        return ConvexRegion(self.normals, self.offsets - distance, self.plane_id, self.height, self.cut_obstacles)

    def chebyshev(self) -> Tuple[np.ndarray, float]:
        """Center and radius of the largest inscribed disc; radius <= 0 means no interior."""
        m = self.offsets.size
        A_ub = np.hstack([-self.normals, np.ones((m, 1))])
        result = linprog(
            c=np.array([0.0, 0.0, -1.0]),
            A_ub=A_ub,
            b_ub=self.offsets,
            bounds=[(None, None), (None, None), (None, None)],
            method="highs",
        )
        if result.status == 3:
            raise ValueError("convex region is unbounded")
        if result.status != 0:
            return np.full(2, np.nan), -np.inf
        return result.x[:2], float(result.x[2])

    def vertices(self) -> np.ndarray:
        """Counter-clockwise corner points (empty when the region has no interior)."""
        center, radius = self.chebyshev()
        if not radius > EMPTY_TOL:
            return np.zeros((0, 2))
        halfspaces = np.hstack([-self.normals, -self.offsets[:, None]])
        points = HalfspaceIntersection(halfspaces, center).intersections
        angles = np.arctan2(points[:, 1] - center[1], points[:, 0] - center[0])
        points = points[np.argsort(angles)]
        keep = np.ones(len(points), dtype=bool)
        keep[1:] = np.linalg.norm(np.diff(points, axis=0), axis=1) > 1e-9
        return points[keep]

    def project(self, point, inset: float = 0.0) -> np.ndarray:
        r"""Closest point to `point` that lies at least `inset` inside every edge.

        Solved as a small QP; falls back to the Chebyshev center when the
        inset region is empty.
        """
        target = np.asarray(point, dtype=float)[:2]
        region = self.inset(inset)
        _, radius = region.chebyshev()
        if not radius >= 0:
            center, _ = self.chebyshev()
            logger.warning("inset %.3f empties region on plane %s; using its center", inset, self.plane_id)
            return center
        problem = QpProblem(target, np.ones(2), region.normals, -region.offsets,
                            np.full(region.offsets.size, np.inf), np.full(2, -np.inf), np.full(2, np.inf))
        return solve_qp(problem).u


def _nearest_face_cut(box_footprint: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, float, bool]:
    """Half-plane through the footprint edge whose outside the target is furthest in."""
    normals, offsets = polygon_halfspaces(box_footprint)
    # inward normals; the outside of edge j is -normals[j]
    outside = -(normals @ target + offsets)
    j = int(np.argmax(outside))
    return -normals[j], -offsets[j], bool(outside[j] > 0)


def safe_convex_region(plane: Plane, obstacles: Sequence[Cuboid], target, inset: float = 0.0):
    r"""Convex foothold region on `plane` that avoids every obstacle footprint
    overlapping it.

    Starts from the plane's own half-planes and, for each obstacle whose xy
    footprint intersects the plane with positive area, adds the half-plane
    through the footprint edge facing `target`. Only obstacles reaching above
    the plane are considered.

    Returns:
        `(region, feasible)`; `feasible` is False when the target was cut
        away or the region has no interior, in which case the caller should
        re-target.

    Example:
        >>> plane = Plane("floor", [[0, 0], [2, 0], [2, 2], [0, 2]], 0.0)
        >>> region, ok = safe_convex_region(plane, [], [1.0, 1.0])
        >>> ok, len(region.offsets)
        (True, 4)
    """
    target = np.asarray(target, dtype=float)[:2]
    normals, offsets = polygon_halfspaces(plane.vertices)
    normals, offsets = list(normals), list(offsets)
    cut = []
    feasible = True
    for k, box in enumerate(obstacles):
        top = box.center[2] + np.abs(box.rotation[2]) @ box.half_extents
        if top <= plane.height:
            continue
        box_footprint = footprint(box)
        overlap = plane.polygon.intersection(Polygon(box_footprint))
        if overlap.area <= EMPTY_TOL:
            continue
        normal, offset, outside = _nearest_face_cut(box_footprint, target)
        normals.append(normal)
        offsets.append(offset)
        cut.append(k)
        feasible &= outside
    region = ConvexRegion(np.array(normals), np.array(offsets), plane.id, plane.height, tuple(cut))
    if inset:
        region = region.inset(inset)
    _, radius = region.chebyshev()
    if not radius > EMPTY_TOL:
        feasible = False
    elif not region.contains(target):
        feasible = False
    return region, feasible
