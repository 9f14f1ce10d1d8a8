import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import jacobi_lambda_min
from polysmooth.curvature import (
    CurvatureTensor3,
    cosectional_decomposition,
    eigvalsh3,
    gauss_sectionals,
    gauss_tensor,
    jacobi_eigvalsh,
    lambda_min,
    pinching_margin,
    pinching_margins,
    random_bivectors,
    scalar,
    sectional,
    verify_patch_pinching,
)
from polysmooth.patches import closed_edge_patch, random_smooth_max_cone, vertex_grid, vertex_patch

BAD = CurvatureTensor3.diag(-1, 3, 3)
symmetric = arrays(np.float64, (3, 3), elements=st.floats(-5, 5)).map(lambda a: 0.5 * (a + a.T))


def test_sectional_examples():
    sigmas = random_bivectors(100, seed=0)
    assert all(sectional(np.eye(3), s) == pytest.approx(1.0) for s in sigmas)
    assert sectional(BAD, [1, 0, 0]) == -1.0
    with pytest.raises(ValueError):
        sectional(BAD, [0, 0, 0])


def test_sectional_range_over_random_directions():
    sigmas = random_bivectors(10_000, seed=1)
    values = np.einsum("ni,ij,nj->n", sigmas, BAD.matrix, sigmas)
    assert values.min() >= -1 - 1e-12 and values.max() <= 3 + 1e-12
    assert values.min() < -0.99 and values.max() > 2.99


def test_scalar_examples():
    assert scalar(np.eye(3)) == 6.0
    assert scalar(np.zeros((3, 3))) == 0.0
    assert scalar(BAD) == 10.0
    # twice the sum of sectional curvatures over an orthonormal bivector basis
    assert scalar(BAD) == 2 * sum(sectional(BAD, e) for e in np.eye(3))


def test_pinching_margin_examples():
    for eps in (0.0, 0.1, 1.0):
        assert pinching_margin(np.eye(3), eps) == pytest.approx(1 + 3 * eps)
        assert pinching_margin(BAD, eps) == pytest.approx(-1 + 5 * eps)
    assert pinching_margin(BAD, 0.2) >= -1e-15
    assert pinching_margin(BAD, 0.19) < 0
    assert pinching_margin(CurvatureTensor3.diag(2.0, 0, 0), 0.0) == 0.0
    with pytest.raises(ValueError):
        pinching_margin(BAD, -0.1)


def test_gauss_tensor_examples():
    for rho in (0.5, 1.0, 2.0):
        k = 1 / rho
        assert np.allclose(gauss_tensor(k, k, k).matrix, np.eye(3) / rho**2, atol=1e-12)
    assert np.all(gauss_tensor(0, 0, 5.0).matrix == 0)
    R = gauss_tensor(-1, 2, 3)
    assert np.array_equal(np.diag(R.matrix), [6, -3, -2])
    assert scalar(R) == 2.0


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_gauss_scalar_identity(k):
    k1, k2, k3 = sorted(k)
    assert scalar(gauss_tensor(k1, k2, k3)) == pytest.approx(2 * (k1 * k2 + k1 * k3 + k2 * k3), abs=1e-9)
    assert np.allclose(gauss_sectionals(np.array([k1, k2, k3])), np.diag(gauss_tensor(k1, k2, k3).matrix))


def test_tensor_validation():
    with pytest.raises(ValueError):
        CurvatureTensor3(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0.0]]))
    with pytest.raises(ValueError):
        CurvatureTensor3(np.eye(2))


@settings(max_examples=200)
@given(symmetric)
def test_closed_form_eigenvalues_match_two_oracles(m):
    closed = eigvalsh3(m)
    assert np.all(np.diff(closed) >= -1e-12)
    scale = max(1.0, np.abs(m).max())
    assert np.allclose(closed, jacobi_eigvalsh(m), atol=1e-12 * scale)
    assert closed[0] == pytest.approx(jacobi_lambda_min(m), abs=1e-12 * scale)


def test_stacked_eigenvalues():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(500, 3, 3))
    A = A + np.swapaxes(A, 1, 2)
    assert np.allclose(eigvalsh3(A), np.linalg.eigvalsh(A), atol=1e-12)
    # repeated eigenvalues
    assert np.allclose(eigvalsh3(np.diag([2.0, 2.0, 2.0])), 2.0)
    assert np.allclose(eigvalsh3(np.diag([1.0, 3.0, 3.0])), [1, 3, 3])


@settings(max_examples=100)
@given(symmetric)
def test_random_directions_never_beat_lambda_min(m):
    sigmas = random_bivectors(2000, seed=3)
    values = np.einsum("ni,ij,nj->n", sigmas, m, sigmas)
    assert values.min() >= lambda_min(m) - 1e-9


@settings(max_examples=200)
@given(symmetric)
def test_decomposition_equivalences(m):
    res = cosectional_decomposition(m)
    assert bool(res) == (lambda_min(m) >= -1e-12) == (pinching_margin(m, 0.0) >= -1e-12)
    if res:
        assert all(lam >= 0 for lam, _ in res.terms)
        assert np.allclose(res.reconstruct(), m, atol=1e-11)
    else:
        assert res.min_eigenvalue < -1e-12


def test_decomposition_examples():
    ident = cosectional_decomposition(np.eye(3))
    assert len(ident.terms) == 3 and all(lam == pytest.approx(1.0) for lam, _ in ident.terms)
    two = cosectional_decomposition(np.diag([2.0, 1.0, 0.0]))
    assert sorted(round(lam, 12) for lam, _ in two.terms) == [1.0, 2.0]
    assert np.allclose(two.reconstruct(), np.diag([2.0, 1.0, 0.0]), atol=1e-12)
    bad = cosectional_decomposition(BAD)
    assert not bad and bad.min_eigenvalue == pytest.approx(-1.0)


@given(symmetric, st.floats(0, 1), st.floats(0, 1))
def test_margin_linear_in_eps(m, a, b):
    lo, hi = sorted((a, b))
    s = scalar(m)
    if s >= 0:
        assert pinching_margin(m, hi) >= pinching_margin(m, lo) - 1e-12
    else:
        assert pinching_margin(m, hi) <= pinching_margin(m, lo) + 1e-12


def test_vectorised_margins_agree():
    k = np.sort(np.random.default_rng(5).normal(size=(200, 3)), axis=1)
    direct = [pinching_margin(gauss_tensor(*row), 0.1) for row in k]
    assert np.allclose(pinching_margins(k, 0.1), direct, atol=1e-12)


def test_verify_patch_examples():
    closed = closed_edge_patch(math.pi, 0.1, np.linspace(0, 0.2, 100))
    rep = verify_patch_pinching(closed, 0.0)
    assert rep.min_sectional == 0.0 and rep.min_margin >= 0 and rep.pinched
    assert set(rep.location) == {"r"}
    F = random_smooth_max_cone(5, seed=1)
    vert = vertex_patch(F, 0.05, vertex_grid(F, 0.05, 60, 20))
    rep = verify_patch_pinching(vert, 0.1)
    assert rep.min_sectional >= -1e-12 and rep.pinched
    # a saddle-type sample fails and is located
    rep = verify_patch_pinching(np.array([[0.0, 1.0, 2.0], [-1.0, 1.0, 2.0]]), 0.1)
    assert not rep.pinched and rep.argmin == 1
    assert rep.to_dict()["passed"] is False


def test_kappa_target():
    k = np.array([[-0.1, 1.0, 1.0]])
    # margin = -0.1 + 0.5 * (-0.1 - 0.1 + 1) = 0.3
    rep = verify_patch_pinching(k, 0.5, kappa_target=-0.05)
    assert rep.pinched and not rep.passed
    assert verify_patch_pinching(k, 0.5, kappa_target=-0.2).passed
