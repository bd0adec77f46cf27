#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple
import logging
import math
import time
import numpy as np

from .. import model
from ..geometry import Cuboid
from ..smoothmath import SmoothingParams
from .constraints import (
    build_body_collision_rows,
    build_foot_height_rows,
    build_foothold_rows,
    build_joint_limit_rows,
    build_stability_rows,
    build_toe_collision_rows,
    stability_bounds,
)
from .ecbf import ConstraintKind, ConstraintSpec, DriftTerms, EcbfRow, pole_placement_gains
from .qp import INFEASIBLE_START, OPTIMAL, QpProblem, QpSolution, WarmStart, solve_qp

logger = logging.getLogger(__name__)

SLACK_REPORT_TOL = 1e-6


def default_constraint_specs(lambda_collision: float = 4.0, lambda_joint: float = 8.0, slack_weight: float = 1e6) -> Tuple[ConstraintSpec, ...]:
    """One spec per family: joint limits at `lambda_joint`, everything else at `lambda_collision`."""
    specs = []
    for kind in ConstraintKind:
        lam = lambda_joint if kind is ConstraintKind.JOINT_LIMIT else lambda_collision
        specs.append(ConstraintSpec(kind, pole_placement_gains(lam), slack_weight))
    return tuple(specs)


@dataclass(frozen=True)
class FilterConfig:
    r"""Settings of the per-tick safety filter.

    Args:
        smoothing: Smooth-SAT parameters; `switch_threshold` also decides
            which rows get a slack variable.
        constraints: One `ConstraintSpec` per family (gains, slack weight,
            on/off toggle).
        input_weight: `w_u` for body and end-effector inputs.
        origin_weight: `w_u` for the origin acceleration and yaw acceleration.
            Below `input_weight`, rows on the world pose are met by braking
            the origin instead of sliding the body and feet backwards.
        obstacle_margin: Inflation of every obstacle before the body rows are
            built; `None` uses the upper Smooth-SAT error band, so that a
            non-negative smooth margin implies exact separation.
        superellipsoid_N: Exponent of the toe rows.
        toe_prefilter: Extra distance beyond an obstacle's bounding sphere
            within which toe rows are built.
        stability_shrink, stability_reach: Support-region bounds, see
            `stability_bounds`.
        limits: Box bounds on the inputs.
        max_iterations: Active-set iteration cap.
    """
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    constraints: Tuple[ConstraintSpec, ...] = field(default_factory=default_constraint_specs)
    input_weight: float = 1.0
    origin_weight: float = 0.1
    obstacle_margin: Optional[float] = None
    superellipsoid_N: int = 4
    toe_prefilter: float = 0.3
    stability_shrink: float = 0.05
    stability_reach: float = 0.35
    limits: model.InputLimits = field(default_factory=model.InputLimits)
    max_iterations: int = 200

    def __post_init__(self):
        kinds = [spec.kind for spec in self.constraints]
        if sorted(kinds) != sorted(ConstraintKind):
            raise ValueError(f"'constraints' needs exactly one spec per kind, got {[k.value for k in kinds]}")
        if not (self.input_weight > 0 and self.origin_weight > 0):
            raise ValueError("input weights must be positive")
        if self.obstacle_margin is not None and self.obstacle_margin < 0:
            raise ValueError(f"'obstacle_margin' must be non-negative, got {self.obstacle_margin}")
        if self.superellipsoid_N < 1:
            raise ValueError(f"'superellipsoid_N' must be at least 1, got {self.superellipsoid_N}")
        if self.max_iterations < 1:
            raise ValueError("'max_iterations' must be positive")

    def spec(self, kind) -> ConstraintSpec:
        kind = ConstraintKind(kind)
        return next(spec for spec in self.constraints if spec.kind is kind)

    def with_kinds(self, **active: bool) -> "FilterConfig":
        """Copy with families switched on or off, e.g. `with_kinds(body_collision=False)`."""
        specs = tuple(replace(spec, active=active.get(spec.kind.value, spec.active)) for spec in self.constraints)
        unknown = set(active) - {kind.value for kind in ConstraintKind}
        if unknown:
            raise ValueError(f"unknown constraint kinds {sorted(unknown)}")
        return replace(self, constraints=specs)

    def all_disabled(self) -> "FilterConfig":
        return self.with_kinds(**{kind.value: False for kind in ConstraintKind})

    @property
    def margin(self) -> float:
        return self.smoothing.error_band()[1] if self.obstacle_margin is None else self.obstacle_margin

    def input_weights(self) -> np.ndarray:
        weights = np.full(model.NU, self.input_weight)
        weights[[model.U_ACC, model.U_YAW_ACC]] = self.origin_weight
        return weights


@dataclass(frozen=True)
class FilterContext:
    """Gait-dependent inputs of one tick, provided by the planner.

    `swing_legs` get toe rows, `regions` maps lowering or stance legs to their
    foothold region, `floors` maps swinging legs to the origin-relative floor
    height their toe must stay above. Stance legs without a region get toe
    rows as well; with an empty context that is every leg.
    """
    swing_legs: Tuple[int, ...] = ()
    regions: Mapping[int, Any] = field(default_factory=dict)
    floors: Mapping[int, float] = field(default_factory=dict)

    def toe_legs(self) -> Tuple[int, ...]:
        """Swinging legs plus stance legs whose world position no foothold row holds."""
        unguarded = [leg for leg in range(len(model.LEGS)) if leg not in self.swing_legs and leg not in self.regions]
        return tuple(self.swing_legs) + tuple(unguarded)


@dataclass
class FilterResult:
    u: np.ndarray
    u_ref: np.ndarray
    rows: List[EcbfRow]
    solution: Optional[QpSolution]
    fallback: bool
    assembly_time: float
    solve_time: float

    @property
    def status(self) -> str:
        return "fallback" if self.solution is None else self.solution.status

    @property
    def max_slack(self) -> float:
        if self.solution is None or self.solution.delta.size == 0:
            return 0.0
        return float(np.max(np.abs(self.solution.delta)))

    def min_h(self) -> Dict[str, float]:
        """Smallest barrier value per constraint kind (NaN for kinds with no rows)."""
        values = {kind.value: math.nan for kind in ConstraintKind}
        for row in self.rows:
            current = values[row.kind.value]
            values[row.kind.value] = row.h if math.isnan(current) else min(current, row.h)
        return values

    def row_counts(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in ConstraintKind}
        for row in self.rows:
            counts[row.kind.value] += 1
        return counts


class SafetyFilter:
    r"""ECBF-QP safety filter over the six constraint families.

    Each tick assembles the rows of every enabled family, adds a slack
    variable to each row whose barrier value is below the smoothing switch
    threshold, and solves the QP warm-started from the previous tick. If the
    QP cannot find a feasible start, or assembling or solving raises, the
    filter logs an error and returns zero input.

    Example:
        >>> geometry = model.default_geometry()
        >>> safety = SafetyFilter(geometry)
        >>> x = model.RobotState.standing(geometry).vector
        >>> result = safety.filter(x, np.zeros(model.NU))
        >>> result.status
        'optimal'
    """

    def __init__(self, geometry: model.RobotGeometry, config: Optional[FilterConfig] = None, obstacles: Sequence[Cuboid] = ()):
        self.geometry = geometry
        self.config = config or FilterConfig()
        self.bounds = stability_bounds(geometry, self.config.stability_shrink, self.config.stability_reach)
        self.obstacles: Tuple[Cuboid, ...] = ()
        self.inflated: Tuple[Cuboid, ...] = ()
        self.update_obstacles(obstacles)
        self._warm: Optional[WarmStart] = None

    def update_obstacles(self, obstacles: Sequence[Cuboid]):
        """Swap in a new obstacle snapshot; called between ticks."""
        self.obstacles = tuple(obstacles)
        margin = self.config.margin
        self.inflated = tuple(box.inflated(margin) for box in self.obstacles)

    def reset(self):
        self._warm = None

    def assemble(self, x, context: Optional[FilterContext] = None) -> List[EcbfRow]:
        """All rows of the enabled families at state `x`, with slack indices assigned."""
        context = context or FilterContext()
        config = self.config
        terms = DriftTerms.at(x)
        rows: List[EcbfRow] = []

        def enabled(kind):
            spec = config.spec(kind)
            return spec if spec.active else None

        spec = enabled(ConstraintKind.JOINT_LIMIT)
        if spec:
            rows += self._stamp(build_joint_limit_rows(x, self.geometry, spec.gains, terms), spec)
        spec = enabled(ConstraintKind.BODY_COLLISION)
        if spec and self.inflated:
            rows += self._stamp(build_body_collision_rows(x, self.inflated, self.geometry, config.smoothing, spec.gains, terms), spec)
        spec = enabled(ConstraintKind.TOE_COLLISION)
        toe_legs = context.toe_legs()
        if spec and self.obstacles and toe_legs:
            N = int(spec.params.get("N", config.superellipsoid_N))
            rows += self._stamp(build_toe_collision_rows(
                x, toe_legs, self.obstacles, self.geometry, spec.gains, N, config.toe_prefilter, terms), spec)
        spec = enabled(ConstraintKind.FOOTHOLD)
        if spec and context.regions:
            rows += self._stamp(build_foothold_rows(x, context.regions, self.geometry, spec.gains, terms), spec)
        spec = enabled(ConstraintKind.FOOT_HEIGHT)
        if spec and context.floors:
            rows += self._stamp(build_foot_height_rows(x, context.floors, spec.gains, terms), spec)
        spec = enabled(ConstraintKind.STABILITY)
        if spec:
            rows += self._stamp(build_stability_rows(x, self.bounds, spec.gains, terms), spec)

        threshold = config.smoothing.switch_threshold
        n_slack = 0
        for row in rows:
            if row.h < threshold and not row.vacuous:
                row.slack = n_slack
                n_slack += 1
        return rows

    @staticmethod
    def _stamp(rows: List[EcbfRow], spec: ConstraintSpec) -> List[EcbfRow]:
        for row in rows:
            row.slack_weight = spec.slack_weight
        return rows

    def filter(self, x, u_ref, context: Optional[FilterContext] = None) -> FilterResult:
        """Minimally modify `u_ref` so that every enabled barrier stays non-negative."""
        u_ref = np.asarray(u_ref, dtype=float).reshape(model.NU)
        limits = self.config.limits
        start = time.perf_counter()
        try:
            rows = self.assemble(x, context)
        except (ValueError, FloatingPointError) as e:
            logger.error("constraint assembly failed: %s", e)
            self._warm = None
            return FilterResult(np.zeros(model.NU), u_ref, [], None, True, time.perf_counter() - start, 0.0)
        assembled = time.perf_counter()

        live = [row for row in rows if not row.vacuous]
        for row in rows:
            if row.vacuous and row.lb > 0:
                logger.debug("vacuous %s row %s is violated (lb=%.3e)", row.kind.value, row.label, row.lb)
        try:
            problem = QpProblem.from_rows(u_ref, self.config.input_weights(), live, limits.lower(), limits.upper())
            solution = solve_qp(problem, self._warm, self.config.max_iterations)
        except (ValueError, np.linalg.LinAlgError) as e:
            logger.error("QP solve failed: %s", e)
            solution = None
        solved = time.perf_counter()

        if solution is None or solution.status == INFEASIBLE_START:
            logger.error("safety QP failed, applying zero input")
            self._warm = None
            return FilterResult(np.zeros(model.NU), u_ref, rows, solution, True, assembled - start, solved - assembled)
        if solution.status != OPTIMAL:
            logger.warning("QP solver status: %s (kkt residual %.3e)", solution.status, solution.kkt_residual)
        slack = float(np.max(np.abs(solution.delta), initial=0.0))
        if slack > SLACK_REPORT_TOL:
            worst = live[int(np.argmax(np.abs(solution.delta)))]
            logger.info("CBF relaxed by slack=%.6f on %s", slack, worst.label)
        self._warm = WarmStart(solution.u.copy(), tuple(solution.active))
        return FilterResult(solution.u, u_ref, rows, solution, False, assembled - start, solved - assembled)

    def __repr__(self) -> str:
        return f"SafetyFilter(obstacles={len(self.obstacles)}, margin={self.config.margin:.4f})"
