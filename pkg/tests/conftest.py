"""Shared fixtures: the four-state example system and its two sparsity patterns."""

import numpy as np
import pytest

from sparse_stability.problem import ProblemInstance, SparsityPattern
from sparse_stability.solver import SolverConfig

from .systems import EXAMPLE_A, EXAMPLE_B, EXAMPLE_C


@pytest.fixture
def full_instance():
    """Example system with every perturbation entry free."""
    return ProblemInstance(EXAMPLE_A, EXAMPLE_B, EXAMPLE_C, SparsityPattern.full(2, 2))


@pytest.fixture
def diagonal_instance():
    """Example system with a diagonal perturbation pattern."""
    return ProblemInstance(EXAMPLE_A, EXAMPLE_B, EXAMPLE_C, SparsityPattern.diagonal(2, 2))


@pytest.fixture
def scalar_instance():
    """A = -1, B = C = S = 1: radius exactly 1."""
    return ProblemInstance(
        np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]), SparsityPattern.full(1, 1)
    )


@pytest.fixture
def fast_config():
    """Solver settings small enough for unit tests."""
    return SolverConfig(multistart_count=12, max_iters=300, seed=0)
