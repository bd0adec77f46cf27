import itertools
import logging
import math
import numpy as np
import pytest

from ssat_cbf import model
from ssat_cbf.geometry import Cuboid, sat_margin
from ssat_cbf.safety import (
    ConstraintKind,
    ConstraintSpec,
    DriftTerms,
    FilterConfig,
    FilterContext,
    QpProblem,
    SafetyFilter,
    WarmStart,
    build_foothold_rows,
    build_joint_limit_rows,
    build_stability_rows,
    ecbf_row,
    pole_placement_gains,
    solve_qp,
    stability_bounds,
)
from ssat_cbf.safety.constraints import (
    body_collision_barriers,
    foothold_barriers,
    joint_limit_barriers,
    stability_barriers,
    toe_collision_barriers,
)
from ssat_cbf.safety.qp import INFEASIBLE_START, OPTIMAL
from ssat_cbf.smoothmath import SmoothingParams
from ssat_cbf.simharness import synthetic_load


@pytest.fixture
def moving(geometry, rng):
    x = model.RobotState.standing(geometry, (0.2, -0.1, 0.0), yaw=0.4, speed=0.3).vector
    x[model.YAW_RATE] = 0.2
    x[model.BODY_X] = 0.02
    x[model.BODY_PITCH] = 0.1
    x[model.BODY_QD] = rng.uniform(-0.2, 0.2, 3)
    for i in range(len(model.LEGS)):
        ix, iz, ixd, izd = model.ee_state_index(i)
        x[[ix, iz]] += rng.uniform(-0.03, 0.03, 2)
        x[[ixd, izd]] = rng.uniform(-0.2, 0.2, 2)
    return x


class SquareRegion:
    normals = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    offsets = np.array([1.0, 1.0, 1.0, 1.0])


def obstacle_ahead(x, distance=0.5, yaw=0.3):
    heading = np.array([math.cos(x[model.YAW]), math.sin(x[model.YAW]), 0.0])
    return Cuboid.from_pose(x[:3] + (0.4 + distance + 0.2) * heading + np.array([0.0, 0.1, 0.3]),
                            [0.2, 0.3, 0.2], yaw=x[model.YAW] + yaw)


def test_pole_placement_gains():
    np.testing.assert_allclose(pole_placement_gains(4.0), [16.0, 8.0])
    with pytest.raises(ValueError):
        pole_placement_gains(0.0)


def test_non_hurwitz_gains_are_rejected():
    with pytest.raises(ValueError, match="Hurwitz"):
        ConstraintSpec(ConstraintKind.STABILITY, gains=(-1.0, 2.0))
    with pytest.raises(ValueError):
        ConstraintSpec(ConstraintKind.STABILITY, relative_degree=1)


def _families(x, geometry):
    params = SmoothingParams(alpha_max=20.0, alpha_abs=20.0).without_switching()
    toe = model.world_foot_position(x, 1, geometry)
    near_toe = Cuboid.from_pose(toe + np.array([0.15, 0.05, 0.02]), [0.05, 0.05, 0.05], yaw=0.2)
    return {
        "joint": lambda v: joint_limit_barriers(v, geometry),
        "body": lambda v: body_collision_barriers(v, [obstacle_ahead(x)], geometry, params),
        "toe": lambda v: toe_collision_barriers(v, [1], [near_toe], geometry, N=2),
        "foothold": lambda v: foothold_barriers(v, {0: SquareRegion(), 4: SquareRegion()}, geometry),
        "stability": lambda v: stability_barriers(v, stability_bounds(geometry)),
    }


@pytest.mark.parametrize("family", ["joint", "body", "toe", "foothold", "stability"])
def test_barrier_gradients_match_finite_differences(geometry, moving, family):
    barriers = _families(moving, geometry)[family]
    eps = 1e-6
    for j, term in enumerate(barriers(moving)):
        numeric = []
        for k in term.index:
            step = np.zeros(model.NX)
            step[k] = eps
            numeric.append((barriers(moving + step)[j].h - barriers(moving - step)[j].h) / (2 * eps))
        np.testing.assert_allclose(term.grad, numeric, atol=1e-6 * (1 + np.abs(term.grad).max()))


@pytest.mark.parametrize("family", ["joint", "body", "toe", "foothold", "stability"])
def test_row_reproduces_second_time_derivative(geometry, moving, rng, family):
    barriers = _families(moving, geometry)[family]
    K = pole_placement_gains(4.0)
    u = rng.uniform(-1.0, 1.0, model.NU)
    xdot = model.drift(moving) + model.input_matrix() @ u

    def hdot(v, j):
        term = barriers(v)[j]
        return term.grad @ (model.drift(v) + model.input_matrix() @ u)[term.index]

    eps = 1e-6
    for j, term in enumerate(barriers(moving)):
        row = ecbf_row(term.h, term.grad, term.hess, moving, K, term.index)
        assert row.hdot == pytest.approx(hdot(moving, j), abs=1e-10)
        hddot = -row.lb - K[0] * row.h - K[1] * row.hdot + row.a @ u
        numeric = (hdot(moving + eps * xdot, j) - hdot(moving - eps * xdot, j)) / (2 * eps)
        assert hddot == pytest.approx(numeric, abs=1e-5 * (1 + abs(numeric)))


def test_ecbf_row_drops_non_finite_barriers(standing, caplog):
    with caplog.at_level(logging.WARNING):
        row = ecbf_row(math.nan, np.ones(1), np.zeros((1, 1)), standing, [1.0, 2.0], [model.BODY_Z])
    assert row is None
    assert "non-finite" in caplog.text


def test_row_families_have_expected_sizes(geometry, standing):
    terms = DriftTerms.at(standing)
    K = pole_placement_gains(4.0)
    assert len(build_joint_limit_rows(standing, geometry, K, terms)) == 24
    assert len(build_stability_rows(standing, stability_bounds(geometry), K, terms)) == 12
    assert len(build_foothold_rows(standing, {0: SquareRegion()}, geometry, K, terms)) == 4


def test_stability_bounds(geometry):
    bounds = stability_bounds(geometry, shrink=0.05, reach=0.35)
    lf, mf, lr = model.LEGS.index("LF"), model.LEGS.index("MF"), model.LEGS.index("LR")
    np.testing.assert_allclose(bounds[lf], [0.05, 0.65])
    np.testing.assert_allclose(bounds[mf], [0.05, 0.50])
    np.testing.assert_allclose(bounds[lr], [-0.65, -0.05])


# QP

def _brute_force(problem: QpProblem):
    """Optimum by enumerating every active set of a problem with hard rows only."""
    n = problem.n_inputs
    G = np.vstack([problem.A, np.eye(n), -np.eye(n)])
    g = np.concatenate([problem.lb, problem.lower, -problem.upper])
    H = np.diag(2.0 * problem.weights)
    c = -2.0 * problem.weights * problem.u_ref
    best, best_cost = None, math.inf
    for size in range(n + 1):
        for working in itertools.combinations(range(G.shape[0]), size):
            W = list(working)
            kkt = np.block([[H, -G[W].T], [G[W], np.zeros((size, size))]])
            try:
                sol = np.linalg.solve(kkt, np.concatenate([-c, g[W]]))
            except np.linalg.LinAlgError:
                continue
            u = sol[:n]
            if np.all(G @ u - g >= -1e-9) and problem.cost(u) < best_cost:
                best, best_cost = u, problem.cost(u)
    return best


@pytest.mark.parametrize("seed", range(10))
def test_qp_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n, m = 3, 4
    feasible = rng.uniform(-1.0, 1.0, n)
    A = rng.normal(size=(m, n))
    lb = A @ feasible - rng.uniform(0.0, 0.5, m)
    problem = QpProblem(rng.uniform(-3.0, 3.0, n), rng.uniform(0.5, 2.0, n), A, lb,
                        np.full(m, np.inf), np.full(n, -2.0), np.full(n, 2.0))
    solution = solve_qp(problem)
    assert solution.status == OPTIMAL
    np.testing.assert_allclose(solution.u, _brute_force(problem), atol=1e-7)
    assert solution.kkt_residual < 1e-7


def test_qp_without_binding_rows_returns_reference():
    problem = QpProblem([0.5, -0.5], [1.0, 1.0], [[1.0, 0.0]], [-1.0], [np.inf], [-1.0, -1.0], [1.0, 1.0])
    solution = solve_qp(problem)
    np.testing.assert_allclose(solution.u, [0.5, -0.5])
    assert solution.active == []


def test_qp_clips_reference_into_box():
    problem = QpProblem([5.0, -5.0], [1.0, 1.0], np.zeros((0, 2)), [], [], [-1.0, -1.0], [1.0, 1.0])
    np.testing.assert_allclose(solve_qp(problem).u, [1.0, -1.0])


def test_qp_reports_infeasible_hard_rows():
    problem = QpProblem([0.0], [1.0], [[1.0], [-1.0]], [1.0, 0.0], [np.inf, np.inf], [-10.0], [10.0])
    solution = solve_qp(problem)
    assert solution.status == INFEASIBLE_START
    assert not solution.optimal


def test_qp_relaxes_soft_rows():
    # u >= 1 hard, u <= 0 soft with weight 1: optimum trades off at u = 1
    problem = QpProblem([0.0], [1.0], [[1.0], [-1.0]], [1.0, 0.0], [np.inf, 1.0], [-10.0], [10.0])
    solution = solve_qp(problem)
    assert solution.status == OPTIMAL
    assert solution.u[0] == pytest.approx(1.0)
    assert solution.delta[1] == pytest.approx(-1.0)
    assert solution.delta[0] == 0.0


def test_qp_warm_start_reaches_same_solution(rng):
    A = rng.normal(size=(5, 4))
    lb = A @ np.zeros(4) - 0.1
    lb[:2] += 1.0
    problem = QpProblem(rng.normal(size=4), np.ones(4), A, lb, np.full(5, 1e6), np.full(4, -5.0), np.full(4, 5.0))
    cold = solve_qp(problem)
    warm = solve_qp(problem, WarmStart(cold.u, cold.active))
    np.testing.assert_allclose(warm.u, cold.u, atol=1e-8)


def test_qp_problem_validation():
    with pytest.raises(ValueError, match="weights"):
        QpProblem([0.0], [0.0], [[1.0]], [0.0], [np.inf], [-1.0], [1.0])
    with pytest.raises(ValueError, match="lower"):
        QpProblem([0.0], [1.0], [[1.0]], [0.0], [np.inf], [1.0], [-1.0])
    with pytest.raises(ValueError):
        QpProblem([0.0], [1.0], [[math.nan]], [0.0], [np.inf], [-1.0], [1.0])


# filter

def test_filter_leaves_safe_reference_untouched(geometry, standing, rng):
    safety = SafetyFilter(geometry)
    u_ref = rng.uniform(-0.1, 0.1, model.NU)
    result = safety.filter(standing, u_ref)
    assert result.status == "optimal"
    assert not result.fallback
    np.testing.assert_allclose(result.u, u_ref, atol=1e-8)
    assert result.row_counts()["joint_limit"] == 24
    assert result.row_counts()["stability"] == 12


def test_filter_slows_down_towards_obstacle(geometry, standing):
    x = standing.copy()
    x[model.SPEED] = 0.5
    obstacle = Cuboid.from_pose([0.4 + 0.2 + 0.15, 0.0, 0.25], [0.15, 0.5, 0.3])
    safety = SafetyFilter(geometry, obstacles=[obstacle])
    u_ref = np.zeros(model.NU)
    u_ref[model.U_ACC] = 2.0
    result = safety.filter(x, u_ref)
    assert result.status == "optimal"
    assert not np.allclose(result.u, u_ref)
    live = [row for row in result.rows if not row.vacuous]
    delta = result.solution.delta
    for row, d in zip(live, delta):
        assert row.a @ result.u - d >= row.lb - 1e-7
    assert result.min_h()["body_collision"] < 0.5


def test_filter_logs_and_falls_back_when_infeasible(geometry, standing, caplog):
    x = standing.copy()
    x[model.SPEED] = 100.0
    obstacle = Cuboid.from_pose([0.4 + 1.0 + 0.2, 0.0, 0.25], [0.2, 0.5, 0.3])
    safety = SafetyFilter(geometry, obstacles=[obstacle])
    with caplog.at_level(logging.ERROR):
        result = safety.filter(x, np.ones(model.NU))
    assert result.fallback
    assert result.status == INFEASIBLE_START
    np.testing.assert_allclose(result.u, 0.0)
    assert "zero input" in caplog.text


def test_filter_with_every_family_disabled(geometry, standing):
    config = FilterConfig().all_disabled()
    safety = SafetyFilter(geometry, config, [Cuboid.from_pose([0.5, 0, 0.25], [0.1, 0.1, 0.1])])
    u_ref = np.full(model.NU, 50.0)
    result = safety.filter(standing, u_ref)
    assert result.rows == []
    np.testing.assert_allclose(result.u, config.limits.clip(u_ref))


def test_filter_config_toggles_and_margin():
    config = FilterConfig().with_kinds(body_collision=False)
    assert not config.spec("body_collision").active
    assert config.spec(ConstraintKind.JOINT_LIMIT).active
    assert config.margin == pytest.approx(SmoothingParams().error_band()[1])
    assert FilterConfig(obstacle_margin=0.2).margin == 0.2
    with pytest.raises(ValueError):
        config.with_kinds(flying=True)
    weights = config.input_weights()
    assert weights[model.U_ACC] == 0.1 and weights[model.U_BODY][0] == 1.0


def test_obstacles_are_inflated_by_error_band(geometry):
    box = Cuboid.from_pose([1.0, 0.0, 0.2], [0.1, 0.2, 0.3])
    safety = SafetyFilter(geometry, obstacles=[box])
    np.testing.assert_allclose(safety.inflated[0].half_extents, box.half_extents + safety.config.margin)
    safety.update_obstacles([])
    assert safety.inflated == ()


def test_slack_only_below_switch_threshold(geometry, standing):
    far = Cuboid.from_pose([3.0, 0.0, 0.25], [0.1, 0.1, 0.1])
    safety = SafetyFilter(geometry, obstacles=[far])
    rows = safety.assemble(standing)
    body = [row for row in rows if row.kind is ConstraintKind.BODY_COLLISION]
    assert len(body) == 1 and body[0].slack is None
    knee_min = next(row for row in rows if row.label == "knee_min[LF]")
    assert knee_min.slack is not None


def test_synthetic_load_assembles_requested_rows(geometry):
    x, obstacles, context = synthetic_load(269, seed=3, geometry=geometry)
    safety = SafetyFilter(geometry, obstacles=obstacles)
    assert len(safety.assemble(x, context)) == 269
    with pytest.raises(ValueError):
        synthetic_load(10)


def _hold_posture(x, rest, kp=25.0, kd=10.0):
    """Proportional-derivative hold of the body and every toe at `rest`."""
    u = np.zeros(model.NU)
    u[model.U_BODY] = kp * (rest[model.BODY_Q] - x[model.BODY_Q]) - kd * x[model.BODY_QD]
    for i in range(len(model.LEGS)):
        ix, iz, ixd, izd = model.ee_state_index(i)
        ux, uz = model.ee_input_index(i)
        u[ux] = kp * (rest[ix] - x[ix]) - kd * x[ixd]
        u[uz] = kp * (rest[iz] - x[iz]) - kd * x[izd]
    return u


def _drive_at_wall(geometry, config, steps=500, dt=0.01):
    wall = Cuboid.from_pose([1.5, 0.0, 0.5], [0.1, 1.0, 0.5])
    safety = SafetyFilter(geometry, config, [wall])
    rest = model.RobotState.standing(geometry).vector
    x = rest.copy()
    worst, front = math.inf, -math.inf
    for _ in range(steps):
        u_ref = _hold_posture(x, rest)
        u_ref[model.U_ACC] = 2.0 * (0.5 - x[model.SPEED])
        result = safety.filter(x, u_ref)
        assert not result.fallback
        x = model.integrate(x, result.u, dt)
        worst = min(worst, sat_margin(model.body_cuboid(x, geometry), wall))
        front = max(front, max(model.world_foot_position(x, i, geometry)[0] for i in range(len(model.LEGS))))
    return worst, front, x


def test_filter_keeps_body_clear_of_wall(geometry):
    worst, front, x = _drive_at_wall(geometry, FilterConfig())
    assert worst >= 0.0
    assert front < 1.4
    assert abs(x[model.SPEED]) < 0.1
    assert abs(x[model.BODY_X]) < 0.05


def test_wall_is_hit_without_collision_rows(geometry):
    worst, front, _ = _drive_at_wall(geometry, FilterConfig().with_kinds(body_collision=False, toe_collision=False))
    assert worst < 0.0
    assert front > 1.4


def test_origin_is_cheaper_to_change_than_local_coordinates(geometry, standing):
    x = standing.copy()
    x[model.SPEED] = 0.5
    margin = FilterConfig().margin
    wall = Cuboid.from_pose([0.4 + margin + 0.1 + 0.1, 0.0, 0.5], [0.1, 1.0, 0.5])
    safety = SafetyFilter(geometry, obstacles=[wall])
    u_ref = _hold_posture(x, standing)
    u_ref[model.U_ACC] = 1.0
    result = safety.filter(x, u_ref)
    assert result.u[model.U_ACC] < u_ref[model.U_ACC]
    shift = abs(result.u[model.U_ACC] - u_ref[model.U_ACC])
    assert abs(result.u[model.U_BODY][0] - u_ref[model.U_BODY][0]) < 0.2 * shift


def test_stance_toes_without_region_get_toe_rows(geometry, standing):
    box = Cuboid.from_pose([0.6, 0.0, 0.1], [0.1, 0.5, 0.1])
    safety = SafetyFilter(geometry, obstacles=[box])
    assert FilterContext().toe_legs() == tuple(range(len(model.LEGS)))
    toe_labels = {row.label for row in safety.assemble(standing) if row.kind is ConstraintKind.TOE_COLLISION}
    assert "toe[LF,0]" in toe_labels and "toe[RF,0]" in toe_labels

    held = FilterContext((), {leg: SquareRegion() for leg in range(len(model.LEGS))}, {})
    assert held.toe_legs() == ()
    rows = safety.assemble(standing, held)
    assert not [row for row in rows if row.kind is ConstraintKind.TOE_COLLISION]

    swinging = FilterContext((1,), {leg: SquareRegion() for leg in (0, 2, 3, 4)}, {1: 0.0})
    assert swinging.toe_legs() == (1, 5)
