#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

r"""Dense primal active-set solver for the safety-filter QP

    min_{u, delta}  sum_k w_k (u_k - u_ref_k)^2 + sum_i w_delta_i delta_i^2
    s.t.            a_i . u - delta_i >= lb_i      (delta_i only on relaxed rows)
                    lower <= u <= upper

The cost is diagonal and strictly positive definite, so each equality
constrained subproblem reduces to a small system in the working-set
multipliers.
"""

from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple
import logging
import math
import numpy as np
from scipy.optimize import linprog

from .ecbf import EcbfRow

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
MAX_ITERATIONS = "max_iterations"
INFEASIBLE_START = "infeasible_start"

FEASIBILITY_TOL = 1e-9
_STEP_TOL = 1e-12
_MULTIPLIER_TOL = 1e-10


@dataclass
class QpProblem:
    r"""Quadratic program over `n` inputs and `m` linear rows.

    Args:
        u_ref: Nominal input (n,).
        weights: Positive diagonal input weights (n,).
        A: Row coefficients (m, n).
        lb: Row lower bounds (m,).
        slack_weights: Per-row penalty; `inf` marks a hard row without slack.
        lower, upper: Box bounds on `u`; infinite entries are ignored.
        labels: Row names used for warm starts and reporting.
    """
    u_ref: np.ndarray
    weights: np.ndarray
    A: np.ndarray
    lb: np.ndarray
    slack_weights: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.u_ref = np.asarray(self.u_ref, dtype=float).ravel()
        n = self.u_ref.size
        self.weights = np.broadcast_to(np.asarray(self.weights, dtype=float), (n,)).copy()
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        m = self.A.shape[0]
        self.lb = np.asarray(self.lb, dtype=float).reshape(m)
        self.slack_weights = np.broadcast_to(np.asarray(self.slack_weights, dtype=float), (m,)).copy()
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if not self.labels:
            self.labels = [f"row[{i}]" for i in range(m)]
        if len(self.labels) != m:
            raise ValueError(f"'labels' has {len(self.labels)} entries for {m} rows")
        if not np.all(self.weights > 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("'weights' must be positive and finite")
        if not np.all(self.slack_weights > 0):
            raise ValueError("'slack_weights' must be positive (inf for hard rows)")
        for name in ("u_ref", "A", "lb"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"'{name}' must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("'lower' exceeds 'upper'")

    @classmethod
    def from_rows(cls, u_ref, weights, rows: Sequence[EcbfRow], lower, upper) -> "QpProblem":
        """Rows with a `slack` index are relaxed with their `slack_weight`; the rest are hard."""
        n = np.asarray(u_ref).size
        A = np.array([row.a for row in rows], dtype=float).reshape(-1, n)
        lb = np.array([row.lb for row in rows], dtype=float)
        slack_weights = np.array([row.slack_weight if row.slack is not None else math.inf for row in rows])
        labels = [row.label or f"row[{i}]" for i, row in enumerate(rows)]
        return cls(u_ref, weights, A, lb, slack_weights, lower, upper, labels)

    @property
    def n_inputs(self) -> int:
        return self.u_ref.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def relaxed(self) -> np.ndarray:
        return np.flatnonzero(np.isfinite(self.slack_weights))

    def cost(self, u, delta=None) -> float:
        u = np.asarray(u, dtype=float)
        value = float(np.sum(self.weights * (u - self.u_ref) ** 2))
        if delta is not None:
            delta = np.asarray(delta, dtype=float)
            relaxed = self.relaxed
            value += float(np.sum(self.slack_weights[relaxed] * delta[relaxed] ** 2))
        return value


@dataclass
class QpSolution:
    u: np.ndarray
    delta: np.ndarray
    status: str
    kkt_residual: float
    residuals: Dict[str, float]
    iterations: int
    active: List[Hashable]
    multipliers: np.ndarray

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class WarmStart:
    """Previous solution and the keys of its active constraints."""
    u: np.ndarray
    active: Sequence[Hashable] = ()


class _Standard:
    """`min 1/2 z^T diag(H) z + c^T z  s.t.  G z >= g` for a QpProblem."""

    def __init__(self, problem: QpProblem):
        n, m = problem.n_inputs, problem.n_rows
        relaxed = problem.relaxed
        self.n, self.n_slack = n, relaxed.size
        self.slack_column = {int(i): n + k for k, i in enumerate(relaxed)}
        size = n + relaxed.size
        self.H = np.concatenate([2.0 * problem.weights, 2.0 * problem.slack_weights[relaxed]])
        self.c = np.concatenate([-2.0 * problem.weights * problem.u_ref, np.zeros(relaxed.size)])

        rows, rhs, keys = [], [], []
        for i in range(m):
            row = np.zeros(size)
            row[:n] = problem.A[i]
            if i in self.slack_column:
                row[self.slack_column[i]] = -1.0
            rows.append(row)
            rhs.append(problem.lb[i])
            keys.append(problem.labels[i])
        for k in range(n):
            if math.isfinite(problem.lower[k]):
                row = np.zeros(size)
                row[k] = 1.0
                rows.append(row)
                rhs.append(problem.lower[k])
                keys.append(("lower", k))
            if math.isfinite(problem.upper[k]):
                row = np.zeros(size)
                row[k] = -1.0
                rows.append(row)
                rhs.append(-problem.upper[k])
                keys.append(("upper", k))
        self.G = np.array(rows).reshape(-1, size)
        self.g = np.array(rhs, dtype=float)
        self.keys = keys
        self.n_rows = m

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        delta = np.zeros(self.n_rows)
        for i, col in self.slack_column.items():
            delta[i] = z[col]
        return z[:self.n].copy(), delta


def _initial_point(problem: QpProblem, std: _Standard, u0: np.ndarray) -> Optional[np.ndarray]:
    u = np.clip(u0, problem.lower, problem.upper)
    hard = [i for i in range(problem.n_rows) if i not in std.slack_column]
    violated = [i for i in hard if problem.A[i] @ u - problem.lb[i] < -FEASIBILITY_TOL]
    if violated:
        logger.debug("phase-1 LP for %d violated hard rows", len(violated))
        bounds = [(lo if math.isfinite(lo) else None, hi if math.isfinite(hi) else None)
                  for lo, hi in zip(problem.lower, problem.upper)]
        result = linprog(
            c=np.zeros(problem.n_inputs),
            A_ub=-problem.A[hard],
            b_ub=-problem.lb[hard],
            bounds=bounds,
            method="highs",
        )
        if result.status != 0:
            return None
        u = np.clip(result.x, problem.lower, problem.upper)
    z = np.zeros(problem.n_inputs + std.n_slack)
    z[:problem.n_inputs] = u
    for i, col in std.slack_column.items():
        z[col] = min(0.0, problem.A[i] @ u - problem.lb[i])
    return z


def _independent(G: np.ndarray, working: List[int], candidate: int) -> bool:
    if not working:
        return bool(np.any(G[candidate] != 0.0))
    stacked = G[working + [candidate]]
    return np.linalg.matrix_rank(stacked) == len(working) + 1


def _equality_step(std: _Standard, z: np.ndarray, working: List[int]):
    h_inv = 1.0 / std.H
    q = std.H * z + std.c
    if not working:
        return -h_inv * q, np.zeros(0)
    GW = std.G[working]
    M = (GW * h_inv) @ GW.T
    lam = np.linalg.lstsq(M, GW @ (h_inv * q), rcond=None)[0]
    return -h_inv * (q - GW.T @ lam), lam


def kkt_residuals(std: _Standard, z: np.ndarray, multipliers: np.ndarray) -> Dict[str, float]:
    slackness = std.G @ z - std.g
    return {
        "stationarity": float(np.max(np.abs(std.H * z + std.c - std.G.T @ multipliers), initial=0.0)),
        "primal": float(np.max(np.maximum(-slackness, 0.0), initial=0.0)),
        "dual": float(np.max(np.maximum(-multipliers, 0.0), initial=0.0)),
        "complementarity": float(np.max(np.abs(multipliers * slackness), initial=0.0)),
    }


def solve_qp(problem: QpProblem, warm_start: Optional[WarmStart] = None, max_iterations: int = 200) -> QpSolution:
    r"""Solve `problem` with a primal active-set method.

    The iterate starts at the warm-start input (or `u_ref`) clipped into the
    box, with each relaxed row's slack set just large enough to satisfy it. A
    phase-1 LP repairs violated hard rows. Constraints active in the warm
    start that are still tight at the start point seed the working set.

    Never raises on infeasibility or on the iteration cap; the status says
    what happened and `residuals` reports the KKT conditions of the returned
    iterate.

    Example:
        >>> p = QpProblem([0.0], [1.0], [[1.0]], [1.0], [np.inf], [-10.0], [10.0])
        >>> round(float(solve_qp(p).u[0]), 9)
        1.0
    """
    std = _Standard(problem)
    u0 = problem.u_ref if warm_start is None else np.asarray(warm_start.u, dtype=float).reshape(problem.n_inputs)
    z = _initial_point(problem, std, u0)
    if z is None:
        logger.warning("QP has no point satisfying its hard rows")
        u = np.clip(problem.u_ref, problem.lower, problem.upper)
        return QpSolution(u, np.zeros(problem.n_rows), INFEASIBLE_START, math.inf,
                          {"primal": math.inf}, 0, [], np.zeros(std.G.shape[0]))

    working: List[int] = []
    if warm_start is not None and warm_start.active:
        wanted = set(warm_start.active)
        slackness = std.G @ z - std.g
        for j, key in enumerate(std.keys):
            if key in wanted and abs(slackness[j]) <= FEASIBILITY_TOL and _independent(std.G, working, j):
                working.append(j)

    status = MAX_ITERATIONS
    lam = np.zeros(0)
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        p, lam = _equality_step(std, z, working)
        if np.max(np.abs(p), initial=0.0) <= _STEP_TOL * (1.0 + np.max(np.abs(z), initial=0.0)):
            if lam.size == 0 or lam.min() >= -_MULTIPLIER_TOL:
                status = OPTIMAL
                break
            working.pop(int(np.argmin(lam)))
            continue
        Gp = std.G @ p
        step, blocking = 1.0, None
        for j in np.flatnonzero(Gp < -1e-14):
            if j in working:
                continue
            ratio = max(0.0, std.G[j] @ z - std.g[j]) / -Gp[j]
            if ratio < step:
                step, blocking = ratio, int(j)
        z = z + step * p
        if blocking is not None:
            working.append(blocking)

    if status != OPTIMAL:
        logger.warning("active-set QP stopped after %d iterations", max_iterations)
        _, lam = _equality_step(std, z, working)
    multipliers = np.zeros(std.G.shape[0])
    if working:
        multipliers[working] = lam
    residuals = kkt_residuals(std, z, multipliers)
    u, delta = std.split(z)
    return QpSolution(u, delta, status, max(residuals.values()), residuals, iterations,
                      [std.keys[j] for j in working], multipliers[:problem.n_rows])
