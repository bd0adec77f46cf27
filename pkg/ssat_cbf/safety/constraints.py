#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

"""Barrier functions of the six constraint families and their QP rows.

Every family first produces `BarrierTerm`s (value plus derivatives over the
few state entries it depends on) and then linearizes them with `ecbf_row`.
"""

from typing import Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple
import math
import numpy as np

from .. import model
from ..geometry import Cuboid, PoseParameterization, ssat_margin, superellipsoid_margin
from ..smoothmath import SmoothingParams
from ..utils import chain_rule
from .ecbf import ConstraintKind, DriftTerms, EcbfRow, ecbf_row

_BODY_INDEX = np.array([0, 1, 2, model.YAW, model.BODY_X, model.BODY_Z, model.BODY_PITCH])
_BODY_POSE = PoseParameterization("A", ("x", "y", "z", "yaw", "pitch"))


class BarrierTerm(NamedTuple):
    label: str
    h: float
    index: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


def _rows(terms: Iterable[BarrierTerm], x, K, kind: ConstraintKind, drift_terms: Optional[DriftTerms]) -> List[EcbfRow]:
    drift_terms = drift_terms or DriftTerms.at(x)
    rows = []
    for term in terms:
        row = ecbf_row(term.h, term.grad, term.hess, x, K, term.index, drift_terms, kind, term.label)
        if row is not None:
            rows.append(row)
    return rows


# joint limits

def leg_joint_derivatives(x, leg: int, geometry: model.RobotGeometry):
    r"""Knee length and hip angle of `leg` with derivatives over
    `(body x, body z, pitch, toe x, toe z)`.

    Returns `(index, (knee, grad, hess), (hip, grad, hess))`.
    """
    x = np.asarray(x, dtype=float)
    spec = geometry.legs[leg]
    ix, iz, _, _ = model.ee_state_index(leg)
    index = np.array([model.BODY_X, model.BODY_Z, model.BODY_PITCH, ix, iz])
    theta = x[model.BODY_PITCH]
    c, s = math.cos(theta), math.sin(theta)
    wx, wz = x[ix] - x[model.BODY_X], x[iz] - x[model.BODY_Z]
    mx, mz = c * wx - s * wz, s * wx + c * wz

    # dw/dv for v = (body x, body z, pitch, toe x, toe z)
    jw = np.array([[-1.0, 0.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 0.0, 1.0]])
    dm_dw = np.array([[c, -s], [s, c]])
    dm_dtheta = np.array([-mz, mx])
    jm = dm_dw @ jw
    jm[:, 2] += dm_dtheta
    # mixed pitch/w second derivatives, then pitch/pitch
    d2m_dtheta_dw = np.array([[-s, -c], [c, -s]])
    cross = d2m_dtheta_dw @ jw
    hm = np.zeros((2, 5, 5))
    hm[:, 2, :] += cross
    hm[:, :, 2] += cross
    hm[:, 2, 2] += np.array([-mx, -mz])

    sign = spec.outward
    p = np.array([-(mz - spec.hip_anchor[2]), sign * (mx - spec.hip_anchor[0])])
    jp = np.vstack([-jm[1], sign * jm[0]])
    hp = np.stack([-hm[1], sign * hm[0]])

    knee = math.hypot(p[0], p[1])
    k2 = knee * knee
    knee_grad = p / knee
    knee_hess = (np.eye(2) - np.outer(p, p) / k2) / knee
    hip = math.atan2(p[1], p[0])
    hip_grad = np.array([-p[1], p[0]]) / k2
    hip_hess = np.array(
        [[2.0 * p[0] * p[1], p[1] ** 2 - p[0] ** 2], [p[1] ** 2 - p[0] ** 2, -2.0 * p[0] * p[1]]]
    ) / (k2 * k2)
    knee_terms = (knee,) + chain_rule(knee_grad, knee_hess, jp, hp)
    hip_terms = (hip,) + chain_rule(hip_grad, hip_hess, jp, hp)
    return index, knee_terms, hip_terms


def joint_limit_barriers(x, geometry: model.RobotGeometry) -> List[BarrierTerm]:
    terms = []
    for i, spec in enumerate(geometry.legs):
        index, (knee, gk, hk), (hip, gh, hh) = leg_joint_derivatives(x, i, geometry)
        terms.append(BarrierTerm(f"knee_min[{spec.name}]", knee - spec.knee_range[0], index, gk, hk))
        terms.append(BarrierTerm(f"knee_max[{spec.name}]", spec.knee_range[1] - knee, index, -gk, -hk))
        terms.append(BarrierTerm(f"hip_min[{spec.name}]", hip - spec.hip_range[0], index, gh, hh))
        terms.append(BarrierTerm(f"hip_max[{spec.name}]", spec.hip_range[1] - hip, index, -gh, -hh))
    return terms


def build_joint_limit_rows(x, geometry: model.RobotGeometry, K, drift_terms: Optional[DriftTerms] = None) -> List[EcbfRow]:
    """Four rows per leg: knee min/max and hip min/max."""
    return _rows(joint_limit_barriers(x, geometry), x, K, ConstraintKind.JOINT_LIMIT, drift_terms)


# body versus obstacle cuboids

def _body_pose_jacobian(x) -> Tuple[np.ndarray, np.ndarray]:
    """d(center, yaw, pitch)/d(p, yaw, body x, body z, pitch) and its second derivatives."""
    yaw, bx = x[model.YAW], x[model.BODY_X]
    c, s = math.cos(yaw), math.sin(yaw)
    jac = np.zeros((5, 7))
    jac[0, [0, 3, 4]] = [1.0, -s * bx, c]
    jac[1, [1, 3, 4]] = [1.0, c * bx, s]
    jac[2, [2, 5]] = 1.0
    jac[3, 3] = 1.0
    jac[4, 6] = 1.0
    hess = np.zeros((5, 7, 7))
    hess[0, 3, 3] = -c * bx
    hess[0, 3, 4] = hess[0, 4, 3] = -s
    hess[1, 3, 3] = -s * bx
    hess[1, 3, 4] = hess[1, 4, 3] = c
    return jac, hess


def body_collision_barriers(
        x,
        obstacles: Sequence[Cuboid],
        geometry: model.RobotGeometry,
        params: SmoothingParams,
    ) -> List[BarrierTerm]:
    x = np.asarray(x, dtype=float)
    body = model.body_cuboid(x, geometry)
    jac, hess = _body_pose_jacobian(x)
    terms = []
    for k, obstacle in enumerate(obstacles):
        margin = ssat_margin(body, obstacle, params, _BODY_POSE)
        grad, hessian = chain_rule(margin.grad, margin.hessian, jac, hess)
        terms.append(BarrierTerm(f"body[{k}]", margin.h, _BODY_INDEX, grad, hessian))
    return terms


def build_body_collision_rows(
        x,
        obstacles: Sequence[Cuboid],
        geometry: model.RobotGeometry,
        params: SmoothingParams,
        K,
        drift_terms: Optional[DriftTerms] = None,
    ) -> List[EcbfRow]:
    """One Smooth-SAT row per obstacle; obstacles are expected to carry the safety margin already."""
    return _rows(body_collision_barriers(x, obstacles, geometry, params), x, K, ConstraintKind.BODY_COLLISION, drift_terms)


# toe versus obstacle cuboids

def _toe_jacobian(x, leg: int, geometry: model.RobotGeometry):
    """World toe position and its derivatives over `(p, yaw, toe x, toe z)`."""
    ix, iz, _, _ = model.ee_state_index(leg)
    yaw = x[model.YAW]
    c, s = math.cos(yaw), math.sin(yaw)
    lx, ly = x[ix], geometry.legs[leg].hip_anchor[1]
    index = np.array([0, 1, 2, model.YAW, ix, iz])
    jac = np.zeros((3, 6))
    jac[0, [0, 3, 4]] = [1.0, -s * lx - c * ly, c]
    jac[1, [1, 3, 4]] = [1.0, c * lx - s * ly, s]
    jac[2, [2, 5]] = 1.0
    hess = np.zeros((3, 6, 6))
    hess[0, 3, 3] = -c * lx + s * ly
    hess[0, 3, 4] = hess[0, 4, 3] = -s
    hess[1, 3, 3] = -s * lx - c * ly
    hess[1, 3, 4] = hess[1, 4, 3] = c
    return model.world_foot_position(x, leg, geometry), index, jac, hess


def toe_collision_barriers(
        x,
        legs: Iterable[int],
        obstacles: Sequence[Cuboid],
        geometry: model.RobotGeometry,
        N: int = 4,
        prefilter_distance: float = math.inf,
    ) -> List[BarrierTerm]:
    x = np.asarray(x, dtype=float)
    terms = []
    for leg in legs:
        radius = geometry.legs[leg].wheel_radius
        toe, index, jac, hess = _toe_jacobian(x, leg, geometry)
        for k, obstacle in enumerate(obstacles):
            reach = float(np.linalg.norm(obstacle.half_extents)) + radius + prefilter_distance
            if np.linalg.norm(toe - obstacle.center) > reach:
                continue
            margin = superellipsoid_margin(toe, obstacle, N, radius)
            grad, hessian = chain_rule(margin.grad, margin.hessian, jac, hess)
            terms.append(BarrierTerm(f"toe[{model.LEGS[leg]},{k}]", margin.h, index, grad, hessian))
    return terms


def build_toe_collision_rows(
        x,
        legs: Iterable[int],
        obstacles: Sequence[Cuboid],
        geometry: model.RobotGeometry,
        K,
        N: int = 4,
        prefilter_distance: float = math.inf,
        drift_terms: Optional[DriftTerms] = None,
    ) -> List[EcbfRow]:
    """One superellipsoid row per (toe, obstacle), the box inflated by the wheel radius."""
    terms = toe_collision_barriers(x, legs, obstacles, geometry, N, prefilter_distance)
    return _rows(terms, x, K, ConstraintKind.TOE_COLLISION, drift_terms)


# foothold regions

def foothold_barriers(x, regions: Mapping[int, object], geometry: model.RobotGeometry) -> List[BarrierTerm]:
    r"""`h_j = a_j . toe_xy + b_j` for every edge of every constrained foot's region.

    `regions` maps a leg index to an object with `normals` (m x 2) and
    `offsets` (m,) arrays, such as `planner.ConvexRegion`.
    """
    x = np.asarray(x, dtype=float)
    terms = []
    for leg, region in regions.items():
        toe, index, jac, hess = _toe_jacobian(x, leg, geometry)
        # drop the z row and the toe z column
        keep = [0, 1, 3, 4]
        jac_xy, hess_xy = jac[:2][:, keep], hess[:2][:, keep][:, :, keep]
        for j, (normal, offset) in enumerate(zip(region.normals, region.offsets)):
            h = float(normal @ toe[:2] + offset)
            grad = normal @ jac_xy
            hessian = np.einsum("i,ijk->jk", normal, hess_xy)
            terms.append(BarrierTerm(f"foothold[{model.LEGS[leg]},{j}]", h, index[keep], grad, hessian))
    return terms


def build_foothold_rows(x, regions: Mapping[int, object], geometry: model.RobotGeometry, K, drift_terms: Optional[DriftTerms] = None) -> List[EcbfRow]:
    """Rows for the feet that are lowering or in stance; `regions` selects them."""
    return _rows(foothold_barriers(x, regions, geometry), x, K, ConstraintKind.FOOTHOLD, drift_terms)


# foot height

def foot_height_barriers(x, floors: Mapping[int, float]) -> List[BarrierTerm]:
    """`h = toe z - floor z`, both origin-relative."""
    x = np.asarray(x, dtype=float)
    terms = []
    for leg, floor in floors.items():
        _, iz, _, _ = model.ee_state_index(leg)
        terms.append(BarrierTerm(f"height[{model.LEGS[leg]}]", float(x[iz] - floor), np.array([iz]), np.ones(1), np.zeros((1, 1))))
    return terms


def build_foot_height_rows(x, floors: Mapping[int, float], K, drift_terms: Optional[DriftTerms] = None) -> List[EcbfRow]:
    return _rows(foot_height_barriers(x, floors), x, K, ConstraintKind.FOOT_HEIGHT, drift_terms)


# static stability

def stability_bounds(geometry: model.RobotGeometry, shrink: float = 0.05, reach: float = 0.35) -> np.ndarray:
    r"""Per-leg `(lower, upper)` bounds on `toe x - body x`.

    Each foot stays within `reach` of its hip anchor; feet anchored ahead of
    the body center must stay at least `shrink` ahead of it and rear feet at
    least `shrink` behind, which keeps the body inside the support hull.
    """
    bounds = np.zeros((len(model.LEGS), 2))
    for i, leg in enumerate(geometry.legs):
        anchor = leg.hip_anchor[0]
        lower, upper = anchor - reach, anchor + reach
        if anchor > 0:
            lower = max(lower, shrink)
        elif anchor < 0:
            upper = min(upper, -shrink)
        bounds[i] = lower, upper
    return bounds


def stability_barriers(x, bounds: np.ndarray) -> List[BarrierTerm]:
    x = np.asarray(x, dtype=float)
    terms = []
    hess = np.zeros((2, 2))
    for i, (lower, upper) in enumerate(bounds):
        ix, _, _, _ = model.ee_state_index(i)
        index = np.array([model.BODY_X, ix])
        rel = x[ix] - x[model.BODY_X]
        name = model.LEGS[i]
        terms.append(BarrierTerm(f"stability_low[{name}]", float(rel - lower), index, np.array([-1.0, 1.0]), hess))
        terms.append(BarrierTerm(f"stability_up[{name}]", float(upper - rel), index, np.array([1.0, -1.0]), hess))
    return terms


def build_stability_rows(x, bounds: np.ndarray, K, drift_terms: Optional[DriftTerms] = None) -> List[EcbfRow]:
    """Twelve rows, a lower and an upper one per foot."""
    return _rows(stability_barriers(x, bounds), x, K, ConstraintKind.STABILITY, drift_terms)
