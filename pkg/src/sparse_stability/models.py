"""Data models for solver runs, certification reports and network rankings."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


class DescentMode(str, Enum):
    GRADIENT = "gradient"
    NEWTON = "newton"


class StepRule(str, Enum):
    ARMIJO = "armijo"
    BACKTRACKING = "backtracking"


class Termination(str, Enum):
    """Why a descent stopped. Only the gradient test counts as convergence.

    ``COST_RESOLUTION`` means the cost could no longer be decreased measurably
    while the gradient was still above tolerance.
    """
    GRADIENT_TOLERANCE = "gradient_tolerance"
    COST_RESOLUTION = "cost_resolution"
    LINE_SEARCH_FAILED = "line_search_failed"
    MAX_ITERATIONS = "max_iterations"

    @property
    def converged(self) -> bool:
        return self is Termination.GRADIENT_TOLERANCE


class Parametrization(str, Enum):
    COMPLEX_PAIR = "complex_pair"
    OMEGA_ZERO = "omega_zero"


def _matrix(M: Optional[np.ndarray]) -> Optional[List[List[float]]]:
    return None if M is None else np.asarray(M, dtype=float).tolist()


def _complex_vector(v: Optional[np.ndarray]) -> Optional[List[List[float]]]:
    return None if v is None else [[float(z.real), float(z.imag)] for z in v]


@dataclass
class IterationRecord:
    """One row of the descent trace."""
    iteration: int
    cost: float
    grad_norm: float
    omega: float
    alpha: float
    beta: float
    delta_fnorm: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'iter': self.iteration,
            'cost': self.cost,
            'grad_norm': self.grad_norm,
            'omega': self.omega,
            'alpha': self.alpha,
            'beta': self.beta,
            'delta_fnorm': self.delta_fnorm,
        }


@dataclass
class SolveResult:
    """A candidate minimum (Delta, x, omega) with its validity flags and trace."""
    delta: np.ndarray
    omega: float
    X: np.ndarray
    g: np.ndarray
    trace: List[IterationRecord]
    termination: Termination
    parametrization: Parametrization
    sparse_delta: np.ndarray
    sparsity_error: float
    alpha: float
    alpha_sparse: float
    valid_local_min: bool
    valid_sparse: bool
    eigen_residual: float
    grad_norm: float

    @property
    def converged(self) -> bool:
        return self.termination.converged

    @property
    def fnorm(self) -> float:
        return float(np.linalg.norm(self.delta))

    @property
    def sparse_fnorm(self) -> float:
        return float(np.linalg.norm(self.sparse_delta))

    @property
    def eigenvector(self) -> np.ndarray:
        if self.X.shape[1] == 1:
            return self.X[:, 0].astype(complex)
        return self.X[:, 0] + 1j * self.X[:, 1]

    @property
    def iterations(self) -> int:
        return max(len(self.trace) - 1, 0)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'delta': _matrix(self.delta),
            'sparse_delta': _matrix(self.sparse_delta),
            'omega': self.omega,
            'fnorm': self.fnorm,
            'sparse_fnorm': self.sparse_fnorm,
            'sparsity_error': self.sparsity_error,
            'alpha': self.alpha,
            'alpha_sparse': self.alpha_sparse,
            'valid_local_min': self.valid_local_min,
            'valid_sparse': self.valid_sparse,
            'converged': self.converged,
            'termination': self.termination.value,
            'parametrization': self.parametrization.value,
            'eigen_residual': self.eigen_residual,
            'grad_norm': self.grad_norm,
            'iterations': self.iterations,
            'eigenvector': _complex_vector(self.eigenvector),
        }


@dataclass
class MultistartResult:
    """Distinct stationary points of a multistart run and the best valid one."""
    points: List[SolveResult]
    best: Optional[SolveResult]
    runs: int
    failures: List[str] = field(default_factory=list)

    @property
    def has_certificate(self) -> bool:
        return self.best is not None

    @property
    def radius(self) -> Optional[float]:
        """Upper bound on the stability radius from the best valid minimum."""
        return None if self.best is None else self.best.fnorm

    @property
    def valid_points(self) -> List[SolveResult]:
        return [r for r in self.points if r.valid_local_min]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'radius': self.radius,
            'runs': self.runs,
            'points': [r.to_dict() for r in self.points],
            'failures': list(self.failures),
        }


@dataclass
class WeightSweepRow:
    """Trend data for one penalty weight."""
    w: float
    delta: Optional[np.ndarray]
    fnorm: Optional[float]
    omega: Optional[float]
    sparsity_error: Optional[float]
    valid: bool
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'w': self.w,
            'delta': _matrix(self.delta),
            'fnorm': self.fnorm,
            'omega': self.omega,
            'sparsity_error': self.sparsity_error,
            'valid': self.valid,
            'error': self.error,
        }


@dataclass
class EigenPair:
    """Right/left eigenvectors of A(Delta) at the eigenvalue nearest j*omega."""
    x: np.ndarray
    l: np.ndarray
    eigenvalue: complex
    omega: float
    beta: complex
    condition: float
    distance: float
    warnings: List[str] = field(default_factory=list)


@dataclass
class StationarityResiduals:
    stationarity: float
    realness: float
    outer_rank: int


@dataclass
class SecondOrderCheck:
    """Hessian of the Lagrangian restricted to the Jacobian kernel, phase direction removed."""
    kernel_dimension: int
    min_eig: Optional[float]
    kernel_spectrum: List[float]
    projected_spectrum: List[float]
    passed: bool


@dataclass
class OptimalityReport:
    """Residuals and pass flags for the first- and second-order conditions."""
    residual_stationarity: float
    residual_realness: float
    jacobian_rank: int
    jacobian_shape: Tuple[int, int]
    full_rank: bool
    kernel_dimension: int
    projected_hessian_min_eig: Optional[float]
    projected_hessian_spectrum: List[float]
    second_order_pass: Optional[bool]
    alpha_check: float
    outer_rank: int
    eigenvalue_distance: float
    stationarity_pass: bool
    realness_pass: bool
    alpha_pass: bool
    warnings: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.stationarity_pass
            and self.realness_pass
            and self.full_rank
            and bool(self.second_order_pass)
            and self.alpha_pass
        )

    def to_dict(self) -> Dict[str, Any]:
        """Flat key/value view."""
        return {
            'residual_stationarity': self.residual_stationarity,
            'stationarity_pass': self.stationarity_pass,
            'residual_realness': self.residual_realness,
            'realness_pass': self.realness_pass,
            'jacobian_rows': self.jacobian_shape[0],
            'jacobian_cols': self.jacobian_shape[1],
            'jacobian_rank': self.jacobian_rank,
            'full_rank': self.full_rank,
            'kernel_dimension': self.kernel_dimension,
            'projected_hessian_min_eig': self.projected_hessian_min_eig,
            'second_order_pass': self.second_order_pass,
            'alpha_check': self.alpha_check,
            'alpha_pass': self.alpha_pass,
            'outer_rank': self.outer_rank,
            'eigenvalue_distance': self.eigenvalue_distance,
            'passed': self.passed,
        }


@dataclass
class SpectralCloud:
    """Sampled eigenvalues of A + B Delta C over sparse Delta with ||Delta||_F <= eta."""
    eta: float
    points: np.ndarray
    norms: np.ndarray
    strategy: str
    samples: int

    @property
    def max_real(self) -> float:
        return float(np.max(self.points.real))

    def rightmost(self) -> complex:
        return complex(self.points[int(np.argmax(self.points.real))])


@dataclass
class SRBracket:
    """Bracket [lower, upper] on the stability radius from the brute-force oracle."""
    lower: float
    upper: float
    delta: np.ndarray

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack


@dataclass
class CriticalEdgeResult:
    """Stability radius for one admissible perturbation pattern."""
    entries: Tuple[Tuple[int, int], ...]
    sr: Optional[float]
    omega: Optional[float]
    delta: Optional[np.ndarray]
    error: Optional[str] = None

    @property
    def perturbation_values(self) -> List[float]:
        if self.delta is None:
            return []
        return [float(self.delta[i, j]) for i, j in self.entries]


@dataclass
class EdgeRanking:
    """Patterns sorted by stability radius, with tie groups of equal radius."""
    results: List[CriticalEdgeResult]
    tie_groups: List[List[CriticalEdgeResult]]
    failures: List[CriticalEdgeResult]

    @property
    def best(self) -> Optional[CriticalEdgeResult]:
        return self.results[0] if self.results else None


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI invocation."""
    subcommand: str
    inputs: Dict[str, Optional[str]]
    overrides: Dict[str, Any]
    seed: Optional[int]
    output_dir: str
    tool_version: str
    argv: List[str]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subcommand': self.subcommand,
            'inputs': dict(self.inputs),
            'overrides': dict(self.overrides),
            'seed': self.seed,
            'output_dir': self.output_dir,
            'tool_version': self.tool_version,
            'argv': list(self.argv),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(
            subcommand=data['subcommand'],
            inputs=dict(data.get('inputs', {})),
            overrides=dict(data.get('overrides', {})),
            seed=data.get('seed'),
            output_dir=data['output_dir'],
            tool_version=data.get('tool_version', ''),
            argv=list(data.get('argv', [])),
        )
