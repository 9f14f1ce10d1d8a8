import math

import numpy as np
import pytest

from polysmooth.flow2d import (
    ConformalSphereMetric,
    FlowError,
    cap_region,
    explicit_dt_cap,
    holder_constant,
    init_from_cap,
    polar_grid,
    product_pinching,
    run,
    step,
)


@pytest.fixture(scope="module")
def cap():
    return init_from_cap(math.pi, 0.1, n=512)


@pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
def test_round_sphere_is_exact(rho):
    m = ConformalSphereMetric.round(rho, 257)
    assert np.allclose(m.gauss_curvature(), 1 / rho**2, rtol=1e-10)
    assert m.area() == pytest.approx(4 * math.pi * rho**2, rel=1e-6)
    assert m.total_curvature() == pytest.approx(4 * math.pi, rel=1e-6)
    assert m.arclength()[-1] == pytest.approx(math.pi * rho, rel=1e-12)


def test_metric_validation():
    phi = polar_grid(9)
    assert phi[0] == 0.0 and phi[-1] == math.pi
    with pytest.raises(ValueError):
        ConformalSphereMetric(phi, np.zeros(8))
    with pytest.raises(ValueError):
        ConformalSphereMetric(phi, np.full(9, np.nan))


def test_zero_step_is_identity():
    m = ConformalSphereMetric.round(1.0, 65)
    same, used = step(m, 0.0)
    assert used == 0.0 and np.array_equal(same.u, m.u) and same is not m
    with pytest.raises(ValueError):
        step(m, -1.0)
    with pytest.raises(ValueError, match="unknown stepper"):
        step(m, 0.01, "rk4")


def test_round_sphere_area_is_exact():
    rho2 = 4.0
    res = run(ConformalSphereMetric.round(2.0, 257), 0.5, stop_area_fraction=0.0)
    assert res.stopped == "horizon" and res.horizon == pytest.approx(0.5)
    exact = 4 * math.pi * (rho2 - 2 * res.times)
    assert np.allclose(res.areas, exact, rtol=1e-6)
    # distances shrink uniformly by sqrt(1 - 2t / rho^2)
    scale = res.distances[-1] / res.distances[0]
    assert np.allclose(scale, math.sqrt(1 - 2 * 0.5 / rho2), rtol=1e-10)
    assert 0 < holder_constant(res.times, res.distances) < 10
    assert res.gauss_bonnet_drift() < 1e-5 and res.min_k_monotone()


def test_explicit_stepper_respects_cap():
    m = ConformalSphereMetric.round(1.0, 65)
    cap_dt = explicit_dt_cap(m)
    new, used = step(m, 1.0, "explicit")
    assert used == pytest.approx(cap_dt)
    assert np.allclose(new.gauss_curvature(), 1 / (1 - 2 * used), rtol=1e-8)


def test_area_stop():
    res = run(ConformalSphereMetric.round(1.0, 65), 1.0, stop_area_fraction=0.5)
    assert res.stopped == "area"
    assert res.areas[-1] < 0.5 * res.areas[0] <= res.areas[-2]


def test_cap_initial_data(cap):
    K = cap.gauss_curvature()
    assert K.min() >= -1e-8
    assert abs(cap.total_curvature() - 4 * math.pi) < 1e-4
    # the poles carry the tip curvature (3k / 2 eps)^2 of the collar
    tip = cap.meta["tip_curvature"]
    assert K[0] == pytest.approx(tip, rel=0.02) and K[-1] == pytest.approx(tip, rel=0.02)
    mask = cap_region(cap)
    assert mask[0] and mask[-1] and not mask[len(mask) // 2]


def test_cap_obtuse_angle_is_resolved():
    m = init_from_cap(1.5 * math.pi, 0.1, n=512)
    assert m.gauss_curvature()[0] == pytest.approx(m.meta["tip_curvature"], rel=1e-3)
    assert abs(m.total_curvature() - 4 * math.pi) < 1e-5


@pytest.mark.parametrize(
    "theta, eps, radius",
    [(2 * math.pi - 0.05, 0.1, None), (0.0, 0.1, None), (math.pi, 0.0, None), (math.pi, 0.1, 0.1)],
)
def test_cap_rejects_bad_input(theta, eps, radius):
    with pytest.raises(ValueError):
        init_from_cap(theta, eps, n=64, radius=radius)


def test_cap_flow_keeps_invariants(cap):
    res = run(cap, 1e-3, stop_area_fraction=0.0)
    assert res.gauss_bonnet_drift() <= 1e-3
    assert res.min_k_monotone()
    assert np.all(np.diff(res.areas) < 0)
    assert np.all(np.isfinite(res.table()))
    assert res.table().shape[1] == len(res.columns())
    assert set(res.summary()) >= {"area_slope", "holder_constant", "gauss_bonnet_drift"}


def test_product_pinching_examples():
    assert product_pinching(1.0, 0.1)
    assert not product_pinching(-0.1, 0.5)
    assert product_pinching(0.0, 0.0)
    assert product_pinching(np.array([0.0, 2.0, 5.0]), 0.0)
    with pytest.raises(ValueError):
        product_pinching(1.0, -1.0)


def test_flow_error_on_collapse():
    # a round sphere of area 4 pi * 0.01 vanishes at t = 0.005
    with pytest.raises(FlowError):
        tiny = ConformalSphereMetric.round(0.1, 33)
        for _ in range(200):
            tiny, _ = step(tiny, 1e-3)
