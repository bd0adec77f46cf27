#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

import numpy as np

from ..utils import check_finite
from .cuboid import Cuboid
from .ssat import CollisionMargin


def superellipsoid_margin(point, box: Cuboid, N: int = 4, inflation: float = 0.0) -> CollisionMargin:
    r"""Point-versus-cuboid margin through the superellipsoid enclosing the box.

    `h = sum_k (p_k / a_k)^(2N) - 1` with `p = R^T (point - center)` and semi-axes
    `a = half_extents + inflation`. `h` is -1 at the center, 0 on the surface
    and positive outside. Derivatives are with respect to the world point.

    Example:
        >>> box = Cuboid.from_pose([0, 0, 0], [0.2, 0.1, 0.1])
        >>> margin = superellipsoid_margin([0.28, 0.0, 0.0], box, N=4, inflation=0.08)
        >>> abs(margin.h) < 1e-12
        True
    """
    if int(N) != N or N < 1:
        raise ValueError(f"'N' must be a positive integer, got {N}")
    if inflation < 0:
        raise ValueError(f"'inflation' must be non-negative, got {inflation}")
    point = check_finite("point", point).reshape(3)
    semi = box.half_extents + inflation
    local = box.rotation.T @ (point - box.center)
    power = 2 * int(N)
    scaled = local / semi
    h = float(np.sum(scaled ** power) - 1.0)
    d_local = power * scaled ** (power - 1) / semi
    dd_local = power * (power - 1) * scaled ** (power - 2) / (semi * semi)
    grad = box.rotation @ d_local
    hessian = (box.rotation * dd_local) @ box.rotation.T
    return CollisionMargin(h, grad, hessian)
