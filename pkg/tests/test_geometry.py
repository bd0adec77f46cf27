import math
import numpy as np
import pytest

from ssat_cbf.geometry import (
    Cuboid,
    PoseParameterization,
    candidate_axes,
    footprint,
    gjk_intersect,
    lp_min_scaling,
    sat_margin,
    ssat_margin,
    ssat_value,
    superellipsoid_margin,
)
from ssat_cbf.smoothmath import SmoothingParams


def unit_cube(center=(0.0, 0.0, 0.0)):
    return Cuboid.from_pose(center, [0.5, 0.5, 0.5])


def test_sat_margin_of_separated_touching_and_overlapping_cubes():
    A = unit_cube()
    assert sat_margin(A, unit_cube([3.0, 0.0, 0.0])) == pytest.approx(2.0)
    assert sat_margin(A, unit_cube([1.0, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-12)
    assert sat_margin(A, unit_cube([0.5, 0.0, 0.0])) == pytest.approx(-0.5)


def test_sat_margin_is_symmetric(random_cuboid):
    for _ in range(20):
        A, B = random_cuboid(), random_cuboid()
        assert sat_margin(A, B) == pytest.approx(sat_margin(B, A), abs=1e-12)


def test_parallel_boxes_have_three_degenerate_edge_axes():
    axes = candidate_axes(unit_cube(), Cuboid.from_pose([2, 0, 0], [0.2, 0.3, 0.4]))
    assert axes.degenerate.sum() == 3
    assert list(np.flatnonzero(axes.degenerate)) == [6, 10, 14]
    np.testing.assert_allclose(np.linalg.norm(axes.axes, axis=1), 1.0)


def test_yawed_boxes_have_one_degenerate_edge_axis():
    axes = candidate_axes(unit_cube(), Cuboid.from_pose([2, 0, 0], [0.2, 0.3, 0.4], yaw=0.3))
    assert axes.degenerate.sum() == 1


@pytest.mark.parametrize("params", [SmoothingParams(), SmoothingParams(alpha_max=30.0, alpha_abs=30.0),
                                    SmoothingParams(abs_variant="sqrt", eps_sqrt=0.02)])
def test_smooth_margin_stays_in_error_band(random_cuboid, params):
    params = params.without_switching()
    lower, upper = params.error_band()
    for _ in range(200):
        A, B = random_cuboid(), random_cuboid()
        gap = ssat_value(A, B, params) - sat_margin(A, B)
        assert -lower - 1e-12 <= gap <= upper + 1e-12


def test_boltzmann_margin_never_exceeds_band(random_cuboid):
    params = SmoothingParams(max_variant="boltzmann").without_switching()
    _, upper = params.error_band()
    for _ in range(100):
        A, B = random_cuboid(), random_cuboid()
        assert ssat_value(A, B, params) - sat_margin(A, B) <= upper + 1e-12


def test_switching_returns_exact_margin_far_away():
    A, B = unit_cube(), unit_cube([3.0, 0.2, 0.0])
    margin = ssat_margin(A, B, SmoothingParams(switch_threshold=0.5))
    assert margin.switched
    assert margin.h == pytest.approx(sat_margin(A, B))
    assert ssat_value(A, B) == pytest.approx(sat_margin(A, B))


def test_smooth_value_matches_margin_value(random_cuboid):
    params = SmoothingParams(alpha_max=20.0, alpha_abs=20.0).without_switching()
    for _ in range(20):
        A, B = random_cuboid(), random_cuboid()
        assert ssat_margin(A, B, params).h == pytest.approx(ssat_value(A, B, params), abs=1e-12)


def _posed(q, half_extents):
    return Cuboid.from_pose(q[:3], half_extents, yaw=q[3], pitch=q[4])


@pytest.mark.parametrize("seed", range(5))
def test_margin_derivatives_match_finite_differences(central_gradient, central_jacobian, seed):
    rng = np.random.default_rng(seed)
    params = SmoothingParams(alpha_max=20.0, alpha_abs=20.0).without_switching()
    q = np.concatenate([rng.uniform(-0.5, 0.5, 3), rng.uniform(-math.pi, math.pi, 1), rng.uniform(-0.6, 0.6, 1)])
    extents = rng.uniform(0.1, 0.5, 3)
    B = Cuboid.from_pose(rng.uniform(-1.0, 1.0, 3), rng.uniform(0.1, 0.5, 3), yaw=0.7, pitch=-0.3, roll=0.2)
    wrt = PoseParameterization("A")

    def h(v):
        return ssat_value(_posed(v, extents), B, params)

    def grad(v):
        return ssat_margin(_posed(v, extents), B, params, wrt).grad

    margin = ssat_margin(_posed(q, extents), B, params, wrt)
    np.testing.assert_allclose(margin.grad, central_gradient(h, q), atol=1e-6)
    np.testing.assert_allclose(margin.hessian, central_jacobian(grad, q), atol=1e-5 * (1 + np.abs(margin.hessian).max()))


def test_derivatives_with_respect_to_second_body(central_gradient):
    params = SmoothingParams(alpha_max=20.0, alpha_abs=20.0).without_switching()
    A = Cuboid.from_pose([0.1, -0.2, 0.0], [0.4, 0.2, 0.1], yaw=0.4, roll=0.1)

    def h(v):
        return ssat_value(A, Cuboid.from_pose([v[0], 0.3, 0.2], [0.3, 0.3, 0.2], yaw=v[1]), params)

    q = np.array([0.6, -0.8])
    margin = ssat_margin(A, Cuboid.from_pose([q[0], 0.3, 0.2], [0.3, 0.3, 0.2], yaw=q[1]), params,
                         PoseParameterization("B", ("yaw", "x")))
    np.testing.assert_allclose(margin.grad, central_gradient(h, q), atol=1e-6)


def test_margin_gradient_matches_autograd():
    torch = pytest.importorskip("torch")
    torch.set_default_dtype(torch.float64)
    alpha = 20.0
    extents_a = torch.tensor([0.4, 0.2, 0.1])
    B = Cuboid.from_pose([0.9, 0.3, 0.1], [0.3, 0.2, 0.25], yaw=0.5, pitch=0.2)
    rot_b = torch.tensor(B.rotation)
    center_b = torch.tensor(B.center)
    extents_b = torch.tensor(B.half_extents)

    def rotation(yaw, pitch):
        cy, sy, cp, sp = torch.cos(yaw), torch.sin(yaw), torch.cos(pitch), torch.sin(pitch)
        one, zero = torch.ones(()), torch.zeros(())
        rz = torch.stack([torch.stack([cy, -sy, zero]), torch.stack([sy, cy, zero]), torch.stack([zero, zero, one])])
        ry = torch.stack([torch.stack([cp, zero, sp]), torch.stack([zero, one, zero]), torch.stack([-sp, zero, cp])])
        return rz @ ry

    def h(q):
        rot_a = rotation(q[3], q[4])
        a, b = rot_a.T, rot_b.T
        cross = torch.cross(a[:, None, :].expand(3, 3, 3), b[None, :, :].expand(3, 3, 3), dim=-1).reshape(9, 3)
        axes = torch.cat([a, b, cross / torch.linalg.norm(cross, dim=1, keepdim=True)])
        offset = center_b - q[:3]

        def sabs(x):
            return x * torch.tanh(alpha * x)

        y = sabs(axes @ offset) - sabs(axes @ (rot_a * extents_a)).sum(1) - sabs(axes @ (rot_b * extents_b)).sum(1)
        return torch.logsumexp(alpha * y, 0) / alpha

    q = torch.tensor([0.05, -0.1, 0.2, 0.3, -0.2], requires_grad=True)
    params = SmoothingParams(alpha_max=alpha, alpha_abs=alpha).without_switching()
    A = Cuboid.from_pose(q.detach().numpy()[:3], extents_a.numpy(), yaw=0.3, pitch=-0.2)
    margin = ssat_margin(A, B, params, PoseParameterization("A"))
    assert margin.h == pytest.approx(float(h(q)), abs=1e-10)
    (grad,) = torch.autograd.grad(h(q), q)
    np.testing.assert_allclose(margin.grad, grad.numpy(), atol=1e-9)
    hessian = torch.autograd.functional.hessian(h, q.detach())
    np.testing.assert_allclose(margin.hessian, hessian.numpy(), atol=1e-7)


def test_superellipsoid_margin_signs_and_gradient(central_gradient):
    box = Cuboid.from_pose([1.0, 0.5, 0.2], [0.2, 0.1, 0.15], yaw=0.6)
    assert superellipsoid_margin(box.center, box).h == pytest.approx(-1.0)
    surface = box.center + box.rotation @ np.array([0.28, 0.0, 0.0])
    assert superellipsoid_margin(surface, box, N=4, inflation=0.08).h == pytest.approx(0.0, abs=1e-12)
    outside = box.center + box.rotation @ np.array([0.1, 0.3, 0.0])
    assert superellipsoid_margin(outside, box, N=4, inflation=0.08).h > 0
    point = np.array([1.1, 0.7, 0.3])
    margin = superellipsoid_margin(point, box, N=2, inflation=0.05)
    np.testing.assert_allclose(
        margin.grad, central_gradient(lambda p: superellipsoid_margin(p, box, N=2, inflation=0.05).h, point), rtol=1e-6)


@pytest.mark.parametrize("kwargs", [{"N": 0}, {"N": 2.5}, {"inflation": -0.1}])
def test_superellipsoid_rejects_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        superellipsoid_margin([0, 0, 0], unit_cube(), **kwargs)


def test_baselines_agree_with_sat_sign(random_cuboid):
    checked = 0
    for _ in range(200):
        A, B = random_cuboid(), random_cuboid()
        exact = sat_margin(A, B)
        if abs(exact) < 1e-6:
            continue
        assert gjk_intersect(A, B) == (exact < 0)
        assert (lp_min_scaling(A, B) <= 1.0) == (exact < 0)
        checked += 1
    assert checked > 150


def test_cuboid_validation():
    with pytest.raises(ValueError, match="half_extents"):
        Cuboid.from_pose([0, 0, 0], [0.1, -0.1, 0.1])
    with pytest.raises(ValueError, match="orthonormal"):
        Cuboid(np.zeros(3), 2 * np.eye(3), np.ones(3))
    with pytest.raises(ValueError, match="determinant"):
        Cuboid(np.zeros(3), np.diag([1.0, 1.0, -1.0]), np.ones(3))
    with pytest.raises(ValueError):
        Cuboid(np.array([0.0, math.nan, 0.0]), np.eye(3), np.ones(3))


def test_cuboid_helpers():
    box = Cuboid.from_pose([1.0, 2.0, 0.5], [0.4, 0.2, 0.1], yaw=0.5)
    assert box.vertices().shape == (8, 3)
    assert box.contains(box.center)
    assert not box.contains(box.center + np.array([0.0, 0.0, 0.2]))
    np.testing.assert_allclose(box.inflated(0.1).half_extents, [0.5, 0.3, 0.2])
    xy = footprint(box)
    assert xy.shape == (4, 2)
    cross = np.cross(xy[1] - xy[0], xy[2] - xy[1])
    assert cross > 0
