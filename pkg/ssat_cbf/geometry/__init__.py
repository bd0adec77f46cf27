#!/usr/bin/env python3

from .cuboid import Cuboid, SeparatingAxes, candidate_axes, footprint, sat_margin
from .ssat import CollisionMargin, PoseParameterization, ssat_margin, ssat_value
from .superellipsoid import superellipsoid_margin
from .baselines import gjk_intersect, lp_min_scaling

__all__ = [
    "Cuboid",
    "SeparatingAxes",
    "CollisionMargin",
    "PoseParameterization",
    "candidate_axes",
    "sat_margin",
    "ssat_margin",
    "ssat_value",
    "superellipsoid_margin",
    "gjk_intersect",
    "lp_min_scaling",
    "footprint",
]
