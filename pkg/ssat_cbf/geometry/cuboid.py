#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass
from typing import NamedTuple
import itertools
import numpy as np
from scipy.spatial import ConvexHull

from ..utils import check_finite, rot_x, rot_y, rot_z

# cross products shorter than this come from (nearly) parallel edges
DEGENERATE_TOL = 1e-8
ORTHONORMAL_TOL = 1e-9

_CORNER_SIGNS = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))


@dataclass(frozen=True, eq=False)
class Cuboid:
    r"""Oriented box given by its center, rotation (columns are the box axes in
    world frame) and positive half-extents, all in metres.

    Example:
        >>> box = Cuboid.from_pose([0.0, 0.0, 0.5], [0.4, 0.2, 0.1], yaw=0.3)
        >>> inside = box.contains([[0.0, 0.0, 0.5], [1.0, 0.0, 0.5]])
    """
    center: np.ndarray
    rotation: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        center = check_finite("center", self.center).reshape(3).copy()
        rotation = check_finite("rotation", self.rotation).reshape(3, 3).copy()
        half_extents = check_finite("half_extents", self.half_extents).reshape(3).copy()
        if np.any(half_extents <= 0):
            raise ValueError(f"'half_extents' must be positive, got {half_extents}")
        if np.max(np.abs(rotation.T @ rotation - np.eye(3))) > ORTHONORMAL_TOL:
            raise ValueError("'rotation' must be orthonormal")
        if np.linalg.det(rotation) < 0:
            raise ValueError("'rotation' must have determinant +1")
        for arr in (center, rotation, half_extents):
            arr.flags.writeable = False
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "half_extents", half_extents)

    @classmethod
    def from_pose(cls, center, half_extents, yaw: float = 0.0, pitch: float = 0.0, roll: float = 0.0) -> "Cuboid":
        return cls(np.asarray(center, dtype=float), rot_z(yaw) @ rot_y(pitch) @ rot_x(roll), np.asarray(half_extents, dtype=float))

    @property
    def extent_vectors(self) -> np.ndarray:
        """Columns `r_k = half_extent_k * rotation[:, k]`."""
        return self.rotation * self.half_extents

    def vertices(self) -> np.ndarray:
        return self.center + (_CORNER_SIGNS * self.half_extents) @ self.rotation.T

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        local = (np.atleast_2d(np.asarray(points, dtype=float)) - self.center) @ self.rotation
        inside = np.all(np.abs(local) <= self.half_extents + tol, axis=1)
        return inside if np.ndim(points) > 1 else inside[0]

    def inflated(self, margin: float) -> "Cuboid":
        return Cuboid(self.center, self.rotation, self.half_extents + margin)

    def transformed(self, rotation: np.ndarray, translation) -> "Cuboid":
        rotation = np.asarray(rotation, dtype=float)
        return Cuboid(rotation @ self.center + np.asarray(translation, dtype=float), rotation @ self.rotation, self.half_extents)

    def __repr__(self) -> str:
        return f"Cuboid(center={self.center.tolist()}, half_extents={self.half_extents.tolist()})"


class SeparatingAxes(NamedTuple):
    axes: np.ndarray
    degenerate: np.ndarray


def candidate_axes(A: Cuboid, B: Cuboid) -> SeparatingAxes:
    r"""The 15 SAT candidate axes of two cuboids as unit rows.

    Order: the three face normals of `A`, the three of `B`, then
    `a_i x b_j` for `i` over `A` and `j` over `B`. Parallel edge pairs give a
    vanishing cross product; those rows are replaced by `a_i` and flagged.
    """
    a = A.rotation.T
    b = B.rotation.T
    cross = np.cross(a[:, None, :], b[None, :, :]).reshape(9, 3)
    norms = np.linalg.norm(cross, axis=1)
    degenerate = norms < DEGENERATE_TOL
    safe_norms = np.where(degenerate, 1.0, norms)
    cross_axes = np.where(degenerate[:, None], np.repeat(a, 3, axis=0), cross / safe_norms[:, None])
    axes = np.vstack([a, b, cross_axes])
    flags = np.concatenate([np.zeros(6, dtype=bool), degenerate])
    return SeparatingAxes(axes, flags)


def axis_margins(A: Cuboid, B: Cuboid, axes: np.ndarray) -> np.ndarray:
    offset = B.center - A.center
    return (
        np.abs(axes @ offset)
        - np.abs(axes @ A.extent_vectors).sum(axis=1)
        - np.abs(axes @ B.extent_vectors).sum(axis=1)
    )


def sat_margin(A: Cuboid, B: Cuboid) -> float:
    r"""Exact separating-axis margin of two cuboids.

    Positive iff the boxes are disjoint; for disjoint boxes it is the widest
    gap found along the 15 candidate axes.

    Example:
        >>> A = Cuboid.from_pose([0, 0, 0], [0.5, 0.5, 0.5])
        >>> B = Cuboid.from_pose([3, 0, 0], [0.5, 0.5, 0.5])
        >>> sat_margin(A, B)
        2.0
    """
    axes, _ = candidate_axes(A, B)
    return float(axis_margins(A, B, axes).max())


def footprint(box: Cuboid) -> np.ndarray:
    """Counter-clockwise xy polygon of the box's vertical projection."""
    xy = box.vertices()[:, :2]
    hull = ConvexHull(xy)
    return xy[hull.vertices]
