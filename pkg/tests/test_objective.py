"""Tests for the penalized cost, its analytic gradient and its Hessian."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparse_stability.errors import RankConditionError
from sparse_stability.objective import (
    build_workspace,
    cost,
    finite_difference_gradient,
    finite_difference_hessian,
    gradient,
    hessian,
)
from sparse_stability.problem import WeightMatrix
from sparse_stability.sylvester import SylvesterOperator, evaluate, evaluate_z

from .systems import DIAGONAL_G0, DIAGONAL_OMEGA0, random_stable_instance

seeds = st.integers(0, 2**32 - 1)
MIN_CONDITIONING = 0.05


def _relative_error(a, b):
    return np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b))


def _random_point(seed, p, columns=2, weighted=False, density=0.5):
    """A well-conditioned random search point, or None when the draw is degenerate."""
    rng = np.random.default_rng(seed)
    inst = random_stable_instance(rng, 4, 2, p, density)
    weights = WeightMatrix(float(rng.uniform(1.0, 20.0)), inst.pattern)
    op = SylvesterOperator(inst.A, columns)
    z = rng.standard_normal(2 * columns)
    if columns == 2:
        z = np.append(z, rng.uniform(0.3, 4.0))
    point = evaluate_z(inst, z, op, weights=weights if weighted else None)
    if not point.a3 or point.conditioning < MIN_CONDITIONING:
        return None
    return inst, weights, op, z, point


def _functions(inst, weights, op, weighted):
    reconstruction = weights if weighted else None

    def f(z):
        return cost(evaluate_z(inst, z, op, weights=reconstruction), weights)

    def grad(z):
        return gradient(inst, evaluate_z(inst, z, op, weights=reconstruction), weights, op)

    return f, grad


def test_cost_is_half_weighted_norm(diagonal_instance):
    point = evaluate(diagonal_instance, DIAGONAL_G0, DIAGONAL_OMEGA0)
    weights = WeightMatrix(10.0, diagonal_instance.pattern)
    expected = 0.5 * np.sum((weights.W * point.delta) ** 2)
    assert cost(point, weights) == pytest.approx(expected)
    assert cost(point, WeightMatrix(1.0, diagonal_instance.pattern)) == pytest.approx(
        0.5 * np.linalg.norm(point.delta) ** 2
    )


def test_finite_differences_of_a_quadratic():
    Q = np.array([[3.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.0]])
    z = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(
        finite_difference_gradient(lambda v: 0.5 * v @ Q @ v, z), Q @ z, rtol=1e-7
    )
    np.testing.assert_allclose(finite_difference_hessian(lambda v: Q @ v, z), Q, atol=1e-7)


@settings(max_examples=100, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_gradient_matches_finite_differences(seed, p):
    drawn = _random_point(seed, p)
    if drawn is None:
        return
    inst, weights, op, z, _ = drawn
    f, grad = _functions(inst, weights, op, weighted=False)
    assert _relative_error(grad(z), finite_difference_gradient(f, z)) < 1e-5


@settings(max_examples=100, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_hessian_matches_finite_differences(seed, p):
    drawn = _random_point(seed, p)
    if drawn is None:
        return
    inst, weights, op, z, point = drawn
    _, grad = _functions(inst, weights, op, weighted=False)
    H = hessian(inst, point, weights, op)
    np.testing.assert_allclose(H, H.T, atol=1e-10 * (1 + np.abs(H).max()))
    assert _relative_error(H, finite_difference_hessian(grad, z)) < 1e-4


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_weighted_gradient_and_hessian(seed):
    drawn = _random_point(seed, 3, weighted=True)
    if drawn is None:
        return
    inst, weights, op, z, point = drawn
    f, grad = _functions(inst, weights, op, weighted=True)
    assert _relative_error(grad(z), finite_difference_gradient(f, z)) < 1e-5
    H = hessian(inst, point, weights, op)
    assert _relative_error(H, finite_difference_hessian(grad, z)) < 1e-4


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_real_variant_derivatives(seed):
    drawn = _random_point(seed, 2, columns=1)
    if drawn is None:
        return
    inst, weights, op, z, point = drawn
    f, grad = _functions(inst, weights, op, weighted=False)
    assert z.size == inst.m
    assert _relative_error(grad(z), finite_difference_gradient(f, z)) < 1e-5
    H = hessian(inst, point, weights, op)
    assert _relative_error(H, finite_difference_hessian(grad, z)) < 1e-4


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_closed_form_curvature_matches_directional(seed):
    drawn = _random_point(seed, 2)
    if drawn is None:
        return
    inst, weights, op, _, point = drawn
    ws = build_workspace(inst, point, op)
    closed = ws.curvature_closed_form(weights)
    directional = ws.curvature_directional(weights)
    assert _relative_error(closed, directional) < 1e-6


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_gauss_newton_term_is_positive_semidefinite(seed, p):
    drawn = _random_point(seed, p)
    if drawn is None:
        return
    inst, weights, op, _, point = drawn
    GN = build_workspace(inst, point, op).gauss_newton(weights)
    eigs = np.linalg.eigvalsh(0.5 * (GN + GN.T))
    assert eigs.min() >= -1e-10 * max(1.0, eigs.max())


def test_closed_form_curvature_needs_square_cx():
    drawn = None
    seed = 0
    while drawn is None:
        drawn = _random_point(seed, 3)
        seed += 1
    inst, weights, op, _, point = drawn
    with pytest.raises(ValueError, match="square CX"):
        build_workspace(inst, point, op).curvature_closed_form(weights)


def test_workspace_rejects_rank_deficient_point(full_instance):
    op = SylvesterOperator(full_instance.A)
    point = evaluate(full_instance, np.zeros(4), 1.0, op)
    with pytest.raises(RankConditionError):
        build_workspace(full_instance, point, op)
