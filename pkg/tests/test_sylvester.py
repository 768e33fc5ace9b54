"""Tests for the Sylvester parametrization and the Delta reconstruction."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparse_stability.errors import RankConditionError
from sparse_stability.matops import IBAR, vec
from sparse_stability.problem import ProblemInstance, SparsityPattern, WeightMatrix
from sparse_stability import sylvester
from sparse_stability.sylvester import (
    SylvesterOperator,
    evaluate,
    evaluate_real,
    evaluate_z,
    lifted_delta,
    reconstruct_delta,
    reconstruct_weighted_delta,
    solve_X,
)

from .systems import DIAGONAL_G0, DIAGONAL_OMEGA0, random_stable_instance

seeds = st.integers(0, 2**32 - 1)


def test_scalar_solve(scalar_instance):
    X = solve_X(scalar_instance, np.array([[1.0, 0.0]]), 1.0)
    np.testing.assert_allclose(X, [[0.5, -0.5]])


def test_zero_rhs_gives_zero_solution(full_instance):
    X = solve_X(full_instance, np.zeros((2, 2)), 3.0)
    np.testing.assert_array_equal(X, np.zeros((4, 2)))


def test_solve_rejects_wrong_g_shape(full_instance):
    with pytest.raises(ValueError, match="G must have 2 rows"):
        solve_X(full_instance, np.zeros((3, 2)), 1.0)
    with pytest.raises(ValueError, match="g must have length 4"):
        evaluate(full_instance, np.zeros(5), 1.0)


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(-20.0, 20.0))
def test_sylvester_residual(seed, omega):
    rng = np.random.default_rng(seed)
    inst = random_stable_instance(rng, 5, 2, 3)
    G = rng.standard_normal((2, 2))
    X = solve_X(inst, G, omega)

    residual = inst.A @ X - omega * X @ IBAR + inst.B @ G
    scale = 1 + np.linalg.norm(inst.A) * np.linalg.norm(X) + np.linalg.norm(inst.B @ G)
    assert np.linalg.norm(residual) <= 1e-10 * scale


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_operator_spectrum_is_shifted_by_omega(seed):
    rng = np.random.default_rng(seed)
    A = random_stable_instance(rng, 4, 1, 1).A
    omega = rng.uniform(0.1, 5.0)
    eigs = np.linalg.eigvals(SylvesterOperator(A).matrix(omega))
    lam = np.linalg.eigvals(A)
    tol = 1e-6 * (1 + np.abs(lam).max())
    for expected in np.concatenate([lam + 1j * omega, lam - 1j * omega]):
        assert np.min(np.abs(eigs - expected)) < tol


def test_operator_caches_factorization():
    op = SylvesterOperator(-np.eye(3))
    first = op.factor(1.0)
    assert op.factor(1.0) is first
    assert op.factor(2.0) is not first
    assert op.size == 6
    assert SylvesterOperator(-np.eye(3), columns=1).size == 3
    with pytest.raises(ValueError, match="columns"):
        SylvesterOperator(-np.eye(3), columns=3)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_reconstruction_assigns_the_eigenvalue(seed):
    rng = np.random.default_rng(seed)
    inst = random_stable_instance(rng, 5, 2, 3)
    omega = rng.uniform(0.2, 5.0)
    point = evaluate(inst, rng.standard_normal(4), omega)
    if not point.a3 or point.conditioning < 1e-4:
        return

    np.testing.assert_allclose(point.delta @ point.CX, point.G, atol=1e-7)
    A_delta = inst.perturbed_matrix(point.delta)
    tol = 1e-8 * (1 + np.linalg.norm(A_delta)) * (1 + np.linalg.norm(point.X))
    np.testing.assert_allclose(A_delta @ point.X, omega * point.X @ IBAR, atol=tol)
    x = point.eigenvector
    np.testing.assert_allclose(A_delta @ x, 1j * omega * x, atol=tol)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_reconstruction_is_minimum_norm(seed):
    rng = np.random.default_rng(seed)
    inst = random_stable_instance(rng, 4, 2, 3)
    G = rng.standard_normal((2, 2))
    X = solve_X(inst, G, 1.3)
    if inst.check_a3(X).value < 1e-4:
        return
    delta = reconstruct_delta(inst, G, X)
    CX = inst.C @ X

    # Any other solution differs by rows orthogonal to the range of CX.
    null = np.linalg.svd(CX.T)[2][2:].T
    other = delta + rng.standard_normal((2, 1)) @ null.T
    np.testing.assert_allclose(other @ CX, G, atol=1e-8)
    assert np.linalg.norm(delta) <= np.linalg.norm(other) + 1e-9
    np.testing.assert_allclose(vec(delta), lifted_delta(CX, vec(G), inst.m), atol=1e-10)


def test_reconstruction_rejects_rank_deficient_cx(full_instance):
    X = np.zeros((4, 2))
    X[0] = 1.0
    with pytest.raises(RankConditionError):
        reconstruct_delta(full_instance, np.ones((2, 2)), X)
    assert not evaluate(full_instance, np.zeros(4), 1.0).a3


def test_reference_initializer_satisfies_rank_condition(diagonal_instance):
    point = evaluate(diagonal_instance, DIAGONAL_G0, DIAGONAL_OMEGA0)
    assert point.a3
    assert point.z.tolist() == DIAGONAL_G0.tolist() + [DIAGONAL_OMEGA0]
    assert point.eigenvalue == 2.5j


def test_weighted_reconstruction_matches_plain_for_square_cx(full_instance):
    G = np.array([[1.0, 0.5], [-0.3, 2.0]])
    X = solve_X(full_instance, G, 1.5)
    weights = WeightMatrix(10.0, SparsityPattern.diagonal(2, 2))
    np.testing.assert_allclose(
        reconstruct_weighted_delta(full_instance, G, X, weights),
        reconstruct_delta(full_instance, G, X),
        rtol=1e-8,
    )
    plain = evaluate(full_instance, vec(G), 1.5)
    weighted = evaluate(full_instance, vec(G), 1.5, weights=weights)
    assert not weighted.weighted
    np.testing.assert_allclose(weighted.delta, plain.delta)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_weighted_reconstruction_shrinks_forced_entries(seed):
    rng = np.random.default_rng(seed)
    A = random_stable_instance(rng, 5, 2, 4).A
    pattern = SparsityPattern(np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0]]))
    inst = ProblemInstance(A, rng.standard_normal((5, 2)), rng.standard_normal((4, 5)), pattern)
    weights = WeightMatrix(50.0, pattern)
    g = rng.standard_normal(4)
    plain = evaluate(inst, g, 0.9)
    if not plain.a3 or plain.conditioning < 1e-3:
        return
    weighted = evaluate(inst, g, 0.9, weights=weights)

    assert weighted.weighted
    np.testing.assert_allclose(weighted.delta @ weighted.CX, weighted.G, atol=1e-6)
    W = weights.W
    assert np.linalg.norm(W * weighted.delta) <= np.linalg.norm(W * plain.delta) + 1e-10


def test_real_variant_solves_a_single_column(scalar_instance):
    point = evaluate_real(scalar_instance, np.array([1.0]))
    np.testing.assert_allclose(point.X, [[1.0]])
    np.testing.assert_allclose(point.delta, [[1.0]])
    np.testing.assert_allclose(scalar_instance.perturbed_matrix(point.delta), [[0.0]])
    assert point.omega == 0.0 and point.eigenvalue == 0j
    assert point.z.tolist() == [1.0]

    with pytest.raises(ValueError, match="one-column"):
        evaluate_real(scalar_instance, np.array([1.0]), SylvesterOperator(np.array([[-1.0]])))


def test_evaluate_z_splits_omega(full_instance):
    op = SylvesterOperator(full_instance.A)
    z = np.array([1.0, 0.0, 0.0, 1.0, 2.0])
    point = evaluate_z(full_instance, z, op)
    assert point.omega == 2.0
    np.testing.assert_array_equal(point.g, z[:-1])


def test_lifted_form_agrees_at_debug_level(full_instance, caplog):
    caplog.set_level(logging.DEBUG, logger="sparse_stability.sylvester")
    evaluate(full_instance, DIAGONAL_G0, DIAGONAL_OMEGA0)
    assert "disagrees" not in caplog.text


def test_lifted_mismatch_is_logged(full_instance, caplog, monkeypatch):
    monkeypatch.setattr(
        sylvester, "lifted_delta", lambda CX, g, m, pinv_tol: np.zeros(m * CX.shape[0])
    )
    caplog.set_level(logging.DEBUG, logger="sparse_stability.sylvester")
    evaluate(full_instance, DIAGONAL_G0, DIAGONAL_OMEGA0)
    assert "disagrees with G (CX)^+" in caplog.text


def test_lifted_form_is_skipped_above_debug(full_instance, caplog, monkeypatch):
    calls = []
    monkeypatch.setattr(sylvester, "lifted_delta", lambda *args: calls.append(args))
    caplog.set_level(logging.INFO, logger="sparse_stability.sylvester")
    evaluate(full_instance, DIAGONAL_G0, DIAGONAL_OMEGA0)
    assert not calls
