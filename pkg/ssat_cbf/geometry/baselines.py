#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

"""Non-differentiable collision baselines used by the benchmark table."""

from typing import List
import numpy as np
from scipy.optimize import linprog

from .cuboid import Cuboid, sat_margin

GJK_MAX_ITERATIONS = 64
_TINY = 1e-20


def box_support(box: Cuboid, direction: np.ndarray) -> np.ndarray:
    """Vertex of `box` furthest along `direction`."""
    local = box.rotation.T @ direction
    return box.center + box.rotation @ np.where(local >= 0.0, box.half_extents, -box.half_extents)


def _support(A: Cuboid, B: Cuboid, direction: np.ndarray) -> np.ndarray:
    # support of the Minkowski difference A - B
    return box_support(A, direction) - box_support(B, -direction)


def triple_product(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.cross(np.cross(a, b), c)


def _line(simplex: List[np.ndarray]):
    a, b = simplex
    ab, ao = b - a, -a
    if ab @ ao > 0:
        return [a, b], triple_product(ab, ao, ab)
    return [a], ao


def _triangle(simplex: List[np.ndarray]):
    a, b, c = simplex
    ab, ac, ao = b - a, c - a, -a
    abc = np.cross(ab, ac)
    if np.cross(abc, ac) @ ao > 0:
        if ac @ ao > 0:
            return [a, c], triple_product(ac, ao, ac)
        return _line([a, b])
    if np.cross(ab, abc) @ ao > 0:
        return _line([a, b])
    if abc @ ao > 0:
        return [a, b, c], abc
    return [a, c, b], -abc


def _tetrahedron(simplex: List[np.ndarray]):
    a, b, c, d = simplex
    ab, ac, ad, ao = b - a, c - a, d - a, -a
    if np.cross(ab, ac) @ ao > 0:
        return _triangle([a, b, c])
    if np.cross(ac, ad) @ ao > 0:
        return _triangle([a, c, d])
    if np.cross(ad, ab) @ ao > 0:
        return _triangle([a, d, b])
    return None, None


_NEXT_SIMPLEX = {2: _line, 3: _triangle, 4: _tetrahedron}


def gjk_intersect(A: Cuboid, B: Cuboid, max_iterations: int = GJK_MAX_ITERATIONS) -> bool:
    r"""Boolean GJK test on the Minkowski difference of two boxes.

    The simplex keeps the newest support point first. A search direction that
    collapses to zero means the origin lies on the simplex (contact). If the
    iteration cap is hit, the sign of `sat_margin` decides.

    Example:
        >>> A = Cuboid.from_pose([0, 0, 0], [0.5, 0.5, 0.5])
        >>> gjk_intersect(A, Cuboid.from_pose([3, 0, 0], [0.5, 0.5, 0.5]))
        False
    """
    direction = A.center - B.center
    if direction @ direction < _TINY:
        direction = np.array([1.0, 0.0, 0.0])
    point = _support(A, B, direction)
    simplex = [point]
    direction = -point
    for _ in range(max_iterations):
        if direction @ direction < _TINY:
            return True
        point = _support(A, B, direction)
        if point @ direction < 0:
            return False
        simplex, direction = _NEXT_SIMPLEX[len(simplex) + 1]([point] + simplex)
        if simplex is None:
            return True
    return sat_margin(A, B) <= 0.0


def lp_min_scaling(A: Cuboid, B: Cuboid) -> float:
    r"""Smallest uniform scaling `s` of both boxes about their centers at which
    they share a point. `s <= 1` iff the boxes intersect.

    Variables are the common point `p` and `s`; each box contributes six
    half-space rows `+-axis_k.(p - center) <= s * half_extent_k`.
    """
    rows, rhs = [], []
    for box in (A, B):
        for k in range(3):
            axis = box.rotation[:, k]
            offset = axis @ box.center
            rows.append(np.append(axis, -box.half_extents[k]))
            rhs.append(offset)
            rows.append(np.append(-axis, -box.half_extents[k]))
            rhs.append(-offset)
    result = linprog(
        c=np.array([0.0, 0.0, 0.0, 1.0]),
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=[(None, None)] * 3 + [(0.0, None)],
        method="highs",
    )
    if result.status != 0:
        raise RuntimeError(f"minimum-scaling LP failed: {result.message}")
    return float(result.x[3])
