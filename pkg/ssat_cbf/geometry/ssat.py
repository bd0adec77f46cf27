#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass, field
from typing import Optional, Tuple
import math
import numpy as np

from ..smoothmath import (
    SmoothingParams,
    smooth_abs_terms,
    smooth_abs_value,
    smooth_max_terms,
    smooth_max_value,
)
from .cuboid import DEGENERATE_TOL, Cuboid, candidate_axes

POSE_PARAMETERS = ("x", "y", "z", "yaw", "pitch")
_UNIT = np.eye(3)
_E_Z = _UNIT[2]
# +1 for the center-offset projection, -1 for the six extent projections
_PROJECTION_SIGNS = np.array([1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class PoseParameterization:
    r"""Which body the margin is differentiated against, and along which pose
    parameters.

    Translations `x, y, z` move the body center in world frame. `yaw` turns the
    body about the world z axis through its center and `pitch` turns it about
    the body's own y axis; for a body posed as `R_z(yaw) R_y(pitch)` these are
    exactly the derivatives with respect to its yaw and pitch angles.
    """
    body: str = "A"
    params: Tuple[str, ...] = POSE_PARAMETERS

    def __post_init__(self):
        if self.body not in ("A", "B"):
            raise ValueError(f"'body' must be 'A' or 'B', got {self.body!r}")
        params = tuple(self.params)
        if not params:
            raise ValueError("'params' must not be empty")
        unknown = [p for p in params if p not in POSE_PARAMETERS]
        if unknown:
            raise ValueError(f"unknown pose parameters {unknown}; choose from {POSE_PARAMETERS}")
        if len(set(params)) != len(params):
            raise ValueError(f"pose parameters must be unique, got {params}")
        object.__setattr__(self, "params", tuple(p for p in POSE_PARAMETERS if p in params))

    @property
    def size(self) -> int:
        return len(self.params)


@dataclass
class CollisionMargin:
    """Margin `h` (> 0 means separated) with derivatives over `k` parameters."""
    h: float
    grad: np.ndarray
    hessian: np.ndarray
    switched: bool = False
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(15, dtype=bool))


def _rigid_derivatives(vectors: np.ndarray, omegas: np.ndarray, yaw_index: Optional[int], pitch_index: Optional[int]):
    """First and second derivatives of vectors rigidly attached to the moving body."""
    m, k = vectors.shape[0], omegas.shape[0]
    first = np.cross(omegas[None, :, :], vectors[:, None, :])
    second = np.zeros((m, k, k, 3))
    for index in (yaw_index, pitch_index):
        if index is not None:
            second[:, index, index] = np.cross(omegas[index], first[:, index])
    if yaw_index is not None and pitch_index is not None:
        # yaw is applied after pitch, so the mixed term turns the pitch rate about z
        mixed = np.cross(_E_Z, first[:, pitch_index])
        second[:, yaw_index, pitch_index] = mixed
        second[:, pitch_index, yaw_index] = mixed
    return first, second


def _normalized_derivatives(c: np.ndarray, dc: np.ndarray, ddc: np.ndarray):
    """Derivatives of `n = c/|c|` given those of `c` (rows are independent axes)."""
    rho = np.linalg.norm(c, axis=1)
    n = c / rho[:, None]
    n_dot_dc = np.einsum("ix,iax->ia", n, dc)
    dn = (dc - n[:, None, :] * n_dot_dc[:, :, None]) / rho[:, None, None]
    n_dot_ddc = np.einsum("ix,iabx->iab", n, ddc)
    proj_ddc = ddc - n[:, None, None, :] * n_dot_ddc[:, :, :, None]
    dn_dot_dc = np.einsum("ibx,iax->iab", dn, dc)
    ddn = (
        proj_ddc
        - dn[:, None, :, :] * n_dot_dc[:, :, None, None]
        - n[:, None, None, :] * dn_dot_dc[:, :, :, None]
        - dn[:, :, None, :] * n_dot_dc[:, None, :, None]
    ) / rho[:, None, None, None]
    return n, dn, 0.5 * (ddn + ddn.transpose(0, 2, 1, 3))


def _axis_derivatives(A: Cuboid, B: Cuboid, moving_is_a: bool, omegas, yaw_index, pitch_index):
    a = A.rotation.T
    b = B.rotation.T
    k = omegas.shape[0]
    zero_first = np.zeros((3, k, 3))
    zero_second = np.zeros((3, k, k, 3))
    moving_faces = a if moving_is_a else b
    d_faces, dd_faces = _rigid_derivatives(moving_faces, omegas, yaw_index, pitch_index)
    if moving_is_a:
        da, dda, db, ddb = d_faces, dd_faces, zero_first, zero_second
    else:
        da, dda, db, ddb = zero_first, zero_second, d_faces, dd_faces

    # pairs (i, j) with i over A and j over B, row-major like candidate_axes
    ai = np.repeat(a, 3, axis=0)
    bj = np.tile(b, (3, 1))
    dai, ddai = np.repeat(da, 3, axis=0), np.repeat(dda, 3, axis=0)
    dbj, ddbj = np.tile(db, (3, 1, 1)), np.tile(ddb, (3, 1, 1, 1))
    c = np.cross(ai, bj)
    dc = np.cross(dai, bj[:, None, :]) + np.cross(ai[:, None, :], dbj)
    ddc = (
        np.cross(ddai, bj[:, None, None, :])
        + np.cross(dai[:, :, None, :], dbj[:, None, :, :])
        + np.cross(dai[:, None, :, :], dbj[:, :, None, :])
        + np.cross(ai[:, None, None, :], ddbj)
    )
    degenerate = np.linalg.norm(c, axis=1) < DEGENERATE_TOL

    n_cross = ai.copy()
    dn_cross = dai.copy()
    ddn_cross = ddai.copy()
    regular = ~degenerate
    if np.any(regular):
        n_r, dn_r, ddn_r = _normalized_derivatives(c[regular], dc[regular], ddc[regular])
        n_cross[regular], dn_cross[regular], ddn_cross[regular] = n_r, dn_r, ddn_r

    axes = np.vstack([a, b, n_cross])
    d_axes = np.concatenate([da, db, dn_cross])
    dd_axes = np.concatenate([dda, ddb, ddn_cross])
    flags = np.concatenate([np.zeros(6, dtype=bool), degenerate])
    return axes, d_axes, dd_axes, flags


def ssat_margin(
        A: Cuboid,
        B: Cuboid,
        params: Optional[SmoothingParams] = None,
        wrt: Optional[PoseParameterization] = None,
    ) -> CollisionMargin:
    r"""Smooth separating-axis margin with analytic gradient and Hessian.

    Every per-axis margin `|n.dp| - sum |n.r_jk|` is smoothed with the
    configured absolute value and the 15 margins are combined with the
    configured smooth maximum. Derivatives are taken with respect to the pose
    parameters in `wrt`.

    If the exact margin exceeds `params.switch_threshold`, `h` is the exact
    value while `grad` and `hessian` still come from the smooth form.

    Example:
        >>> A = Cuboid.from_pose([0, 0, 0], [0.5, 0.5, 0.5])
        >>> B = Cuboid.from_pose([3, 0, 0], [0.5, 0.5, 0.5])
        >>> margin = ssat_margin(A, B, SmoothingParams(), PoseParameterization("A", ("x", "y")))
        >>> margin.grad.shape
        (2,)
    """
    params = params or SmoothingParams()
    wrt = wrt or PoseParameterization()
    moving_is_a = wrt.body == "A"
    moving = A if moving_is_a else B
    k = wrt.size

    omegas = np.zeros((k, 3))
    translation = np.zeros((k, 3))
    yaw_index = pitch_index = None
    for index, name in enumerate(wrt.params):
        if name == "yaw":
            omegas[index] = _E_Z
            yaw_index = index
        elif name == "pitch":
            omegas[index] = moving.rotation[:, 1]
            pitch_index = index
        else:
            translation[index] = _UNIT["xyz".index(name)]

    axes, d_axes, dd_axes, flags = _axis_derivatives(A, B, moving_is_a, omegas, yaw_index, pitch_index)

    # projected vectors: center offset, then A's and B's extent vectors
    offset = B.center - A.center
    vectors = np.vstack([offset, A.extent_vectors.T, B.extent_vectors.T])
    d_vectors = np.zeros((7, k, 3))
    dd_vectors = np.zeros((7, k, k, 3))
    d_vectors[0] = -translation if moving_is_a else translation
    extent_slice = slice(1, 4) if moving_is_a else slice(4, 7)
    d_vectors[extent_slice], dd_vectors[extent_slice] = _rigid_derivatives(
        vectors[extent_slice], omegas, yaw_index, pitch_index
    )

    proj = axes @ vectors.T
    d_proj = np.einsum("iax,mx->ima", d_axes, vectors) + np.einsum("ix,max->ima", axes, d_vectors)
    dd_proj = (
        np.einsum("iabx,mx->imab", dd_axes, vectors)
        + np.einsum("iax,mbx->imab", d_axes, d_vectors)
        + np.einsum("ibx,max->imab", d_axes, d_vectors)
        + np.einsum("ix,mabx->imab", axes, dd_vectors)
    )

    f, f1, f2 = smooth_abs_terms(proj, params.abs_variant, params.abs_param)
    y = f @ _PROJECTION_SIGNS
    w1 = f1 * _PROJECTION_SIGNS
    w2 = f2 * _PROJECTION_SIGNS
    dy = np.einsum("im,ima->ia", w1, d_proj)
    ddy = np.einsum("im,ima,imb->iab", w2, d_proj, d_proj) + np.einsum("im,imab->iab", w1, dd_proj)

    h, weights, h_yy = smooth_max_terms(y, params.max_variant, params.alpha_max)
    grad = weights @ dy
    hessian = dy.T @ h_yy @ dy + np.einsum("i,iab->ab", weights, ddy)
    hessian = 0.5 * (hessian + hessian.T)

    switched = False
    if math.isfinite(params.switch_threshold):
        exact = float((np.abs(proj) @ _PROJECTION_SIGNS).max())
        if exact > params.switch_threshold:
            h, switched = exact, True
    return CollisionMargin(float(h), grad, hessian, switched, flags)


def ssat_value(A: Cuboid, B: Cuboid, params: Optional[SmoothingParams] = None) -> float:
    """Smooth margin value only, without derivatives."""
    params = params or SmoothingParams()
    axes, _ = candidate_axes(A, B)
    vectors = np.vstack([B.center - A.center, A.extent_vectors.T, B.extent_vectors.T])
    proj = axes @ vectors.T
    if math.isfinite(params.switch_threshold):
        exact = float((np.abs(proj) @ _PROJECTION_SIGNS).max())
        if exact > params.switch_threshold:
            return exact
    y = smooth_abs_value(proj, params.abs_variant, params.abs_param) @ _PROJECTION_SIGNS
    return smooth_max_value(y, params.max_variant, params.alpha_max)
