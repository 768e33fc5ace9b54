"""Tests for the problem definition, sparsity machinery and assumption checks."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparse_stability.errors import UnstableSystemError
from sparse_stability.matops import vec
from sparse_stability.problem import ProblemInstance, SparsityPattern, WeightMatrix

from .systems import EXAMPLE_A, EXAMPLE_B, EXAMPLE_C


def test_pattern_derived_quantities():
    pattern = SparsityPattern(np.array([[1, 0, 1], [0, 0, 1]]))

    np.testing.assert_array_equal(pattern.complement, [[0, 1, 0], [1, 1, 0]])
    assert pattern.forced_zero_count == 3
    assert pattern.free_count == 3
    assert pattern.free_entries == [(0, 0), (0, 2), (1, 2)]
    assert pattern.selector.shape == (3, 6)


def test_pattern_rejects_non_binary():
    with pytest.raises(ValueError, match="0 or 1"):
        SparsityPattern(np.array([[1, 2]]))
    with pytest.raises(ValueError, match="outside"):
        SparsityPattern.from_entries(2, 2, [(2, 0)])


@given(st.integers(0, 2**32 - 1))
def test_selector_detects_forced_zero_violations(seed):
    rng = np.random.default_rng(seed)
    pattern = SparsityPattern((rng.uniform(size=(3, 2)) < 0.5).astype(float))
    delta = rng.standard_normal((3, 2))
    sparse, error = pattern.project(delta)

    assert np.allclose(pattern.selector @ vec(sparse), 0)
    assert (np.linalg.norm(pattern.selector @ vec(delta)) == 0) == (error == 0)
    assert error == pytest.approx(np.linalg.norm(pattern.complement * delta))


def test_project_sparse_examples(diagonal_instance, full_instance):
    delta = np.array([[1.0, 2.0], [3.0, 4.0]])

    sparse, error = diagonal_instance.project_sparse(delta)
    np.testing.assert_array_equal(sparse, [[1.0, 0.0], [0.0, 4.0]])
    assert error == pytest.approx(np.sqrt(13.0))

    sparse, error = full_instance.project_sparse(delta)
    np.testing.assert_array_equal(sparse, delta)
    assert error == 0.0

    _, error = diagonal_instance.project_sparse(np.array([[0.0, -0.0002], [0.0006, 0.0]]))
    assert error == pytest.approx(6.3e-4, abs=1e-5)


@given(st.floats(1.0, 1e3), st.integers(0, 2**32 - 1))
def test_weight_matrix_identity(w, seed):
    rng = np.random.default_rng(seed)
    pattern = SparsityPattern((rng.uniform(size=(3, 3)) < 0.5).astype(float))
    weights = WeightMatrix(w, pattern)
    delta = rng.standard_normal((3, 3))

    free = pattern.S == 1
    np.testing.assert_array_equal(weights.squared[free], 1.0)
    np.testing.assert_allclose(weights.squared[~free], w * w, rtol=1e-12)
    weighted = 0.5 * np.sum((weights.W * delta) ** 2)
    forced = np.sum((pattern.complement * delta) ** 2)
    split = 0.5 * np.sum(delta**2) + 0.5 * (w * w - 1) * forced
    assert weighted == pytest.approx(split, rel=1e-9)
    np.testing.assert_array_equal(np.diag(weights.W_bar), weights.diagonal)


def test_weight_matrix_rejects_small_weight():
    with pytest.raises(ValueError, match="at least 1"):
        WeightMatrix(0.5, SparsityPattern.full(2, 2))


def test_instance_shape_validation():
    full = SparsityPattern.full(1, 1)
    with pytest.raises(ValueError, match="square"):
        ProblemInstance(np.ones((2, 3)), np.ones((2, 1)), np.ones((1, 2)), full)
    with pytest.raises(ValueError, match="rows"):
        ProblemInstance(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), full)
    with pytest.raises(ValueError, match="Sparsity pattern must be"):
        ProblemInstance(
            np.eye(2), np.ones((2, 1)), np.ones((1, 2)), SparsityPattern.full(2, 2)
        )
    with pytest.raises(ValueError, match="non-finite"):
        ProblemInstance(np.array([[np.inf]]), np.ones((1, 1)), np.ones((1, 1)), full)


def test_perturbed_matrix(full_instance):
    np.testing.assert_array_equal(full_instance.perturbed_matrix(np.zeros((2, 2))), EXAMPLE_A)

    identity = ProblemInstance(-np.eye(2), np.eye(2), np.eye(2), SparsityPattern.full(2, 2))
    np.testing.assert_array_equal(identity.perturbed_matrix(np.eye(2)), np.zeros((2, 2)))

    with pytest.raises(ValueError, match="Delta must be"):
        full_instance.perturbed_matrix(np.zeros((3, 2)))


def test_perturbed_matrix_is_affine(full_instance):
    rng = np.random.default_rng(0)
    D1, D2 = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    f = full_instance.perturbed_matrix
    np.testing.assert_allclose(f(D1 + D2) - f(D1) - f(D2) + f(np.zeros((2, 2))), 0, atol=1e-10)


def test_check_a1():
    stable = ProblemInstance(-np.eye(2), np.eye(2), np.eye(2), SparsityPattern.full(2, 2))
    check = stable.check_a1()
    assert check and check.value == pytest.approx(-1.0)

    example = ProblemInstance(EXAMPLE_A, EXAMPLE_B, EXAMPLE_C, SparsityPattern.full(2, 2))
    assert example.check_a1().value == pytest.approx(-1.0, abs=1e-8)

    one = np.ones((1, 1))
    marginal = ProblemInstance(np.zeros((1, 1)), one, one, SparsityPattern.full(1, 1))
    assert not marginal.check_a1()
    with pytest.raises(UnstableSystemError):
        marginal.require_stable()


def test_check_a3():
    inst = ProblemInstance(-np.eye(3), np.eye(3), np.eye(3), SparsityPattern.full(3, 3))
    e1, e2 = np.eye(3)[:, 0], np.eye(3)[:, 1]

    assert inst.check_a3(np.column_stack([e1, e2]))
    assert not inst.check_a3(np.column_stack([e1, e1]))
    assert not inst.check_a3(np.zeros((3, 2)))
    assert inst.check_a3(e1)

    single_output = ProblemInstance(
        -np.eye(2), np.eye(2), np.ones((1, 2)), SparsityPattern.full(2, 1)
    )
    check = single_output.check_a3(np.eye(2))
    assert not check and "p < 2" in check.detail


@given(st.integers(0, 2**32 - 1))
def test_check_a3_agrees_with_svd_rank(seed):
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((3, 4))
    inst = ProblemInstance(-np.eye(4), np.eye(4, 2), C, SparsityPattern.full(2, 3))
    X = rng.standard_normal((4, 2))
    if rng.uniform() < 0.5:
        X[:, 1] = 2.0 * X[:, 0]
    s = np.linalg.svd(inst.C @ X, compute_uv=False)
    assert bool(inst.check_a3(X)) == bool(s[1] > 1e-9 * s[0])


def test_restrict_to_support_round_trip():
    pattern = SparsityPattern.from_entries(3, 3, [(0, 1), (2, 1)])
    inst = ProblemInstance(-np.eye(3), np.eye(3), np.eye(3), pattern)
    reduction = inst.restrict_to_support()

    assert reduction.reduced.m == 2 and reduction.reduced.p == 1
    assert not reduction.is_identity
    small = np.array([[0.5], [-1.5]])
    full = reduction.expand_delta(small)
    assert full[0, 1] == 0.5 and full[2, 1] == -1.5 and np.count_nonzero(full) == 2
    np.testing.assert_array_equal(reduction.restrict_delta(full), small)
    np.testing.assert_array_equal(
        inst.perturbed_matrix(full), reduction.reduced.perturbed_matrix(small)
    )


def test_restrict_to_support_rejects_empty_pattern():
    inst = ProblemInstance(-np.eye(2), np.eye(2), np.eye(2), SparsityPattern.zeros(2, 2))
    with pytest.raises(ValueError, match="no free entries"):
        inst.restrict_to_support()
