#!/usr/bin/env python3

from .ecbf import ConstraintKind, ConstraintSpec, DriftTerms, EcbfRow, ecbf_row, pole_placement_gains
from .constraints import (
    BarrierTerm,
    build_body_collision_rows,
    build_foot_height_rows,
    build_foothold_rows,
    build_joint_limit_rows,
    build_stability_rows,
    build_toe_collision_rows,
    stability_bounds,
)
from .qp import QpProblem, QpSolution, WarmStart, solve_qp
from .safety_filter import FilterConfig, FilterContext, FilterResult, SafetyFilter, default_constraint_specs

__all__ = [
    "ConstraintKind",
    "ConstraintSpec",
    "DriftTerms",
    "EcbfRow",
    "ecbf_row",
    "pole_placement_gains",
    "BarrierTerm",
    "build_joint_limit_rows",
    "build_body_collision_rows",
    "build_toe_collision_rows",
    "build_foothold_rows",
    "build_foot_height_rows",
    "build_stability_rows",
    "stability_bounds",
    "QpProblem",
    "QpSolution",
    "WarmStart",
    "solve_qp",
    "FilterConfig",
    "FilterContext",
    "FilterResult",
    "SafetyFilter",
    "default_constraint_specs",
]
