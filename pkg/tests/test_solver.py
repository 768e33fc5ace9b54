"""Tests for the descent loop, multistart and the penalty weight sweep."""

from dataclasses import replace

import numpy as np
import pytest

from sparse_stability.errors import UnstableSystemError
from sparse_stability.models import DescentMode, Parametrization, StepRule, Termination
from sparse_stability.problem import ProblemInstance, SparsityPattern
from sparse_stability.solver import (
    SolverConfig,
    multistart,
    sample_initializers,
    solve,
    solve_omega_zero,
    solve_single_column,
    weight_sweep,
)
from sparse_stability.verify import brute_force_sr

from .systems import (
    DIAGONAL_G0,
    DIAGONAL_INVALID,
    DIAGONAL_MINIMUM,
    DIAGONAL_OMEGA0,
    FULL_MINIMA,
)


@pytest.fixture
def acceptance_config():
    return SolverConfig(multistart_count=50, max_iters=200, seed=0)


def _footnote_instance():
    """Perturbing only A[0, 1] of a triangular A can never move its eigenvalues."""
    return ProblemInstance(
        np.array([[-1.0, 2.0], [0.0, -2.0]]),
        np.eye(2),
        np.eye(2),
        SparsityPattern(np.array([[0.0, 1.0], [0.0, 0.0]])),
    )


def _rotation_instance(C=None, pattern=None):
    """A lightly damped rotation; perturbing A[0, 0] alone reaches j sqrt(24) at norm 2."""
    A = np.array([[-1.0, -5.0], [5.0, -1.0]])
    C = np.eye(2) if C is None else C
    if pattern is None:
        pattern = SparsityPattern(np.array([[1.0, 0.0], [0.0, 0.0]]))
    return ProblemInstance(A, np.eye(2), C, pattern)


def test_reference_initializer_converges(diagonal_instance):
    cfg = SolverConfig(max_iters=200, seed=0)
    result = solve(diagonal_instance, cfg, DIAGONAL_G0, DIAGONAL_OMEGA0)
    delta, fnorm, omega = DIAGONAL_MINIMUM

    assert result.converged
    assert result.iterations <= 200
    assert result.valid_local_min
    assert result.fnorm == pytest.approx(fnorm, abs=1e-3)
    assert result.omega == pytest.approx(omega, abs=1e-2)
    np.testing.assert_allclose(result.sparse_delta, delta, atol=1e-2)
    assert result.eigen_residual < 1e-6


def test_trace_is_monotone_and_starts_with_zero_step(diagonal_instance):
    cfg = SolverConfig(max_iters=200, seed=0)
    result = solve(diagonal_instance, cfg, DIAGONAL_G0, DIAGONAL_OMEGA0)
    trace = result.trace

    assert trace[0].iteration == 0 and trace[0].beta == 0.0
    assert trace[0].omega == DIAGONAL_OMEGA0
    assert [r.iteration for r in trace] == list(range(len(trace)))
    costs = np.array([r.cost for r in trace])
    assert np.all(np.diff(costs) <= 1e-12 * (1 + costs[:-1]))
    assert all(0 < r.beta <= cfg.initial_step for r in trace[1:])
    assert abs(trace[-1].alpha) <= cfg.alpha_tol


@pytest.mark.parametrize(
    "mode, step_rule",
    [
        (DescentMode.NEWTON, StepRule.BACKTRACKING),
        (DescentMode.GRADIENT, StepRule.ARMIJO),
    ],
)
def test_other_modes_decrease_the_cost(diagonal_instance, mode, step_rule):
    cfg = SolverConfig(mode=mode, step_rule=step_rule, max_iters=30, seed=0)
    result = solve(diagonal_instance, cfg, DIAGONAL_G0, DIAGONAL_OMEGA0)
    costs = [r.cost for r in result.trace]
    assert costs[-1] < costs[0]


def test_iteration_budget_exhausted(diagonal_instance):
    cfg = SolverConfig(max_iters=0, seed=0)
    result = solve(diagonal_instance, cfg, DIAGONAL_G0, DIAGONAL_OMEGA0)

    assert result.termination is Termination.MAX_ITERATIONS
    assert not result.converged and not result.valid_local_min
    assert len(result.trace) == 1


def test_negative_omega_is_mirrored(diagonal_instance):
    cfg = SolverConfig(max_iters=200, seed=0)
    reference = solve(diagonal_instance, cfg, DIAGONAL_G0, DIAGONAL_OMEGA0)
    mirrored_g0 = np.concatenate([DIAGONAL_G0[:2], -DIAGONAL_G0[2:]])
    result = solve(diagonal_instance, cfg, mirrored_g0, -DIAGONAL_OMEGA0)

    assert result.omega > 0
    assert result.omega == pytest.approx(reference.omega, abs=1e-6)
    np.testing.assert_allclose(result.delta, reference.delta, atol=1e-6)


def test_scalar_instance_uses_real_variant(scalar_instance):
    result = solve(scalar_instance, SolverConfig(seed=0), np.array([0.7, 0.3]), 1.0)

    assert result.parametrization is Parametrization.OMEGA_ZERO
    assert result.omega == 0.0
    assert result.fnorm == pytest.approx(1.0)
    assert result.alpha == pytest.approx(0.0, abs=1e-12)
    assert result.valid_local_min


def test_omega_zero_rejects_wrong_length(scalar_instance):
    with pytest.raises(ValueError, match="g0 must have length 1"):
        solve_omega_zero(scalar_instance, SolverConfig(), np.ones(2))


def test_unstable_system_is_rejected(fast_config):
    inst = ProblemInstance(np.eye(2), np.eye(2), np.eye(2), SparsityPattern.full(2, 2))
    with pytest.raises(UnstableSystemError):
        solve(inst, fast_config, np.ones(4), 1.0)
    with pytest.raises(UnstableSystemError):
        multistart(inst, fast_config)


def test_invalid_config_is_rejected(diagonal_instance):
    with pytest.raises(ValueError, match="eps"):
        solve(diagonal_instance, SolverConfig(eps=0.0), DIAGONAL_G0, 1.0)


def test_initializers_are_seeded(full_instance, fast_config):
    first = sample_initializers(full_instance, fast_config)
    second = sample_initializers(full_instance, fast_config)
    other = sample_initializers(full_instance, replace(fast_config, seed=1))

    assert len(first) == fast_config.multistart_count
    assert all(np.array_equal(a.g0, b.g0) and a.omega0 == b.omega0 for a, b in zip(first, second))
    assert not np.array_equal(first[-1].g0, other[-1].g0)
    assert [t.omega0 for t in first[:2]] == pytest.approx([1.0, 10.0])
    assert all(0.1 <= t.omega0 <= 100.0 for t in first)


def test_initializers_with_real_variant(full_instance, fast_config):
    tasks = sample_initializers(full_instance, fast_config, complex_pair=True, omega_zero=True)
    assert len(tasks) == 2 * fast_config.multistart_count
    real = [t for t in tasks if t.parametrization is Parametrization.OMEGA_ZERO]
    assert all(t.g0.size == full_instance.m and t.omega0 == 0.0 for t in real)


def test_multistart_full_pattern(full_instance, acceptance_config):
    result = multistart(full_instance, acceptance_config)

    assert result.has_certificate
    assert result.radius == pytest.approx(FULL_MINIMA[0][1], abs=1e-3)
    valid = result.valid_points
    for _, fnorm, omega in FULL_MINIMA:
        assert any(
            abs(r.fnorm - fnorm) < 1e-3 and abs(r.omega - omega) < 1e-2 for r in valid
        )
    assert result.best.omega == pytest.approx(FULL_MINIMA[0][2], abs=1e-2)
    norms = [r.fnorm for r in result.points]
    assert norms == sorted(norms)


def test_multistart_diagonal_pattern(diagonal_instance, acceptance_config):
    result = multistart(diagonal_instance, acceptance_config)
    delta, fnorm, omega = DIAGONAL_MINIMUM

    assert result.radius == pytest.approx(fnorm, abs=1e-3)
    assert result.best.omega == pytest.approx(omega, abs=1e-2)
    np.testing.assert_allclose(result.best.sparse_delta, delta, atol=1e-2)

    _, invalid_fnorm, invalid_omega = DIAGONAL_INVALID
    near = [
        r
        for r in result.points
        if abs(r.fnorm - invalid_fnorm) < 1e-2 and abs(r.omega - invalid_omega) < 5e-2
    ]
    assert near
    assert all(not r.valid_local_min and r.alpha > 0 for r in near)


def test_multistart_without_certificate(fast_config):
    result = multistart(_footnote_instance(), fast_config)

    assert not result.has_certificate
    assert result.radius is None
    assert result.failures


def test_multistart_parallel_matches_serial(diagonal_instance):
    cfg = SolverConfig(multistart_count=4, max_iters=100, seed=3)
    serial = multistart(diagonal_instance, cfg)
    parallel = multistart(diagonal_instance, replace(cfg, jobs=2))

    assert [r.fnorm for r in serial.points] == pytest.approx([r.fnorm for r in parallel.points])


def test_weight_sweep_trends(diagonal_instance, acceptance_config):
    rows = weight_sweep(diagonal_instance, acceptance_config, [5.0, 10.0, 20.0])
    expected = [(0.5609, 1.3385), (0.5642, 1.3370), (0.5651, 1.3367)]

    assert all(row.valid for row in rows)
    for row, (fnorm, omega) in zip(rows, expected):
        assert row.fnorm == pytest.approx(fnorm, abs=1e-3)
        assert row.omega == pytest.approx(omega, abs=1e-2)
    errors = [row.sparsity_error for row in rows]
    norms = [row.fnorm for row in rows]
    assert errors[0] > errors[1] > errors[2]
    assert norms[0] <= norms[1] <= norms[2]


def test_weight_sweep_records_failures(fast_config):
    rows = weight_sweep(_footnote_instance(), fast_config, [10.0])
    assert rows[0].error == "no valid minimum" and not rows[0].valid

    with pytest.raises(ValueError, match="nonempty"):
        weight_sweep(_footnote_instance(), fast_config, [])


def test_single_entry_pattern_finds_complex_crossing(fast_config):
    inst = _rotation_instance()
    result = multistart(inst, replace(fast_config, multistart_count=4))
    best = result.best

    assert result.radius == pytest.approx(2.0, abs=1e-6)
    assert best.parametrization is Parametrization.COMPLEX_PAIR
    assert best.omega == pytest.approx(np.sqrt(24.0), abs=1e-6)
    assert best.delta[0, 0] == pytest.approx(2.0, abs=1e-6)
    assert best.eigen_residual < 1e-8
    assert brute_force_sr(inst).contains(result.radius, slack=1e-6)


def test_solve_prefers_crossing_over_real_variant(fast_config):
    result = solve(_rotation_instance(), fast_config, np.array([1.0, 0.0, 0.0, 0.0]), 1.0)

    assert result.parametrization is Parametrization.COMPLEX_PAIR
    assert result.valid_local_min
    assert result.fnorm == pytest.approx(2.0, abs=1e-6)
    assert result.omega == pytest.approx(np.sqrt(24.0), abs=1e-6)


def test_single_column_scan_with_several_inputs(fast_config):
    inst = _rotation_instance(C=np.array([[1.0, 0.0]]), pattern=SparsityPattern.full(2, 1))
    results = solve_single_column(inst, fast_config)
    best = results[0]

    assert best.converged and best.valid_local_min
    assert best.fnorm == pytest.approx(2.0, abs=1e-6)
    assert best.omega == pytest.approx(np.sqrt(24.0), abs=1e-5)
    np.testing.assert_allclose(best.delta, [[2.0], [0.0]], atol=1e-5)
    assert [r.fnorm for r in results] == sorted(r.fnorm for r in results)


def test_single_column_scan_rejects_two_columns(full_instance, fast_config):
    with pytest.raises(ValueError, match="expected 1"):
        solve_single_column(full_instance, fast_config)


def test_cost_resolution_is_not_convergence(diagonal_instance):
    assert not Termination.COST_RESOLUTION.converged
    assert Termination.GRADIENT_TOLERANCE.converged

    cfg = SolverConfig(grad_tol=1e-30, max_iters=60, seed=0)
    result = solve(diagonal_instance, cfg, DIAGONAL_G0, DIAGONAL_OMEGA0)
    assert result.termination is not Termination.GRADIENT_TOLERANCE
    assert not result.converged
    assert not result.valid_local_min


def test_converged_run_meets_gradient_tolerance(diagonal_instance):
    cfg = SolverConfig(max_iters=200, seed=0)
    result = solve(diagonal_instance, cfg, DIAGONAL_G0, DIAGONAL_OMEGA0)

    assert result.termination is Termination.GRADIENT_TOLERANCE
    assert result.grad_norm <= cfg.grad_tol * (1.0 + result.trace[-1].cost)
