"""Reference systems shared across the test modules."""

import numpy as np

from sparse_stability.problem import ProblemInstance, SparsityPattern

EXAMPLE_A = np.array(
    [
        [79.0, 20.0, -30.0, -20.0],
        [-41.0, -12.0, 17.0, 13.0],
        [167.0, 40.0, -60.0, -38.0],
        [33.5, 9.0, -14.5, -11.0],
    ]
)
EXAMPLE_B = np.array(
    [
        [0.2190, 0.9347],
        [0.0470, 0.3835],
        [0.6789, 0.5194],
        [0.6793, 0.8310],
    ]
)
EXAMPLE_C = np.array(
    [
        [0.0346, 0.5297, 0.0077, 0.0668],
        [0.0535, 0.6711, 0.3848, 0.4175],
    ]
)

# Known minima: (Delta, ||Delta||_F, omega)
FULL_MINIMA = [
    (np.array([[-0.0332, -0.0717], [0.1975, 0.4700]]), 0.5159, 1.3753),
    (np.array([[0.1841, 0.5173], [-0.8050, -0.4151]]), 1.0592, 10.8758),
]
DIAGONAL_MINIMUM = (np.diag([-0.0418, 0.5638]), 0.5653, 1.3365)
DIAGONAL_INVALID = (np.diag([4.8818, -0.8898]), 4.9622, 11.0790)
DIAGONAL_G0 = np.array([1.0582, 0.4363, 1.4115, -0.0146])
DIAGONAL_OMEGA0 = 2.5


def random_stable_instance(rng, n, m, p, density=1.0):
    """Random instance with alpha(A) <= -0.5 and a random nonempty pattern."""
    A = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(A).real) + 0.5 + rng.uniform()
    A = A - shift * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    S = (rng.uniform(size=(m, p)) < density).astype(float)
    S[rng.integers(m), rng.integers(p)] = 1.0
    return ProblemInstance(A, B, C, SparsityPattern(S))
