"""Sylvester parametrization: solve A X - w X Ibar = -B G and rebuild Delta = G (CX)^+."""

from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np
import scipy.linalg

from .config import config
from .errors import NumericalError, RankConditionError
from .matops import IBAR, kron, pinv, unvec, vec
from .problem import ProblemInstance, WeightMatrix

logger = logging.getLogger(__name__)

_LIFTED_TOL = 1e-9


class SylvesterOperator:
    """Lifted operator A~(w) = I (x) A + w (Ibar (x) I_n) with a cached LU factorization.

    With ``columns=1`` the operator is A itself; this serves the real
    eigenvector variant where the assigned eigenvalue is zero.
    """

    def __init__(self, A: np.ndarray, columns: int = 2):
        if columns not in (1, 2):
            raise ValueError(f"columns must be 1 or 2, got {columns}")
        self.A = np.asarray(A, dtype=float)
        self.columns = columns
        self._omega: Optional[float] = None
        self._lu = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def size(self) -> int:
        return self.columns * self.n

    def matrix(self, omega: float) -> np.ndarray:
        if self.columns == 1:
            return self.A.copy()
        return kron(np.eye(2), self.A) + omega * kron(IBAR, np.eye(self.n))

    def factor(self, omega: float):
        """LU factorization of A~(omega), recomputed only when omega changes."""
        omega = 0.0 if self.columns == 1 else float(omega)
        if self._lu is None or omega != self._omega:
            lu, piv = scipy.linalg.lu_factor(self.matrix(omega), check_finite=True)
            pivots = np.abs(np.diag(lu))
            if pivots.min() <= np.finfo(float).eps * max(pivots.max(), 1.0):
                raise NumericalError(f"Sylvester operator is singular at omega = {omega}")
            self._lu = (lu, piv)
            self._omega = omega
        return self._lu

    def solve(self, rhs: np.ndarray, omega: float, transpose: bool = False) -> np.ndarray:
        """Apply A~(omega)^{-1} (or its transpose) to a vector or matrix."""
        return scipy.linalg.lu_solve(self.factor(omega), rhs, trans=1 if transpose else 0)


@dataclass(eq=False)
class SearchPoint:
    """Free variables (G, omega) of the unconstrained problem and the derived X, Delta."""
    g: np.ndarray
    omega: float
    X: np.ndarray
    G: np.ndarray
    delta: np.ndarray
    CX: np.ndarray
    conditioning: float
    a3: bool
    row_weights: Optional[np.ndarray] = None

    @property
    def weighted(self) -> bool:
        """True when Delta came from the weighted rather than the plain minimum-norm solve."""
        return self.row_weights is not None

    @property
    def columns(self) -> int:
        return self.X.shape[1]

    @property
    def x_v(self) -> np.ndarray:
        return vec(self.X)

    @property
    def delta_vec(self) -> np.ndarray:
        return vec(self.delta)

    @property
    def z(self) -> np.ndarray:
        """Stacked free variables [g, omega]; omega is absent for the real variant."""
        if self.columns == 1:
            return self.g.copy()
        return np.append(self.g, self.omega)

    @property
    def eigenvector(self) -> np.ndarray:
        """x = X[:, 0] + j X[:, 1], or the real column for the real variant."""
        if self.columns == 1:
            return self.X[:, 0].astype(complex)
        return self.X[:, 0] + 1j * self.X[:, 1]

    @property
    def eigenvalue(self) -> complex:
        return 1j * self.omega if self.columns == 2 else 0j


def solve_X(
    inst: ProblemInstance,
    G: np.ndarray,
    omega: float,
    operator: Optional[SylvesterOperator] = None,
) -> np.ndarray:
    """Unique X with A X - omega X Ibar = -B G (or A X = -B G for one column).

    Args:
        inst: The problem
        G: m x 2 (or m x 1, or a length-m vector) right-hand side factor
        omega: Frequency; ignored for one column
        operator: Cached lifted operator for A; built when omitted

    Returns:
        X, n x 2 (or n x 1)

    Raises:
        ValueError: If G does not have m rows
    """
    G = np.asarray(G, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    columns = G.shape[1]
    if G.shape[0] != inst.m:
        raise ValueError(f"G must have {inst.m} rows, got shape {G.shape}")
    operator = operator or SylvesterOperator(inst.A, columns)
    rhs = -vec(inst.B @ G)
    return unvec(operator.solve(rhs, omega), inst.n, columns)


def reconstruct_delta(
    inst: ProblemInstance,
    G: np.ndarray,
    X: np.ndarray,
    rank_tol: float = config.RANK_TOL,
    pinv_tol: float = config.PINV_TOL,
) -> np.ndarray:
    """Minimum-norm Delta with Delta C X = G.

    Args:
        inst: The problem
        G: m x k
        X: n x k with CX of full column rank
        rank_tol: Relative rank tolerance for CX
        pinv_tol: Relative cutoff for the pseudoinverse

    Returns:
        Delta = G (CX)^+, m x p

    Raises:
        RankConditionError: If CX does not have full column rank.
    """
    check = inst.check_a3(X, rank_tol)
    if not check:
        raise RankConditionError(f"CX is rank deficient: {check.detail}")
    return np.atleast_2d(G).reshape(inst.m, -1) @ pinv(inst.C @ X, pinv_tol)


def weighted_row_pinv(Y: np.ndarray, inverse_weights: np.ndarray) -> np.ndarray:
    """Stack of per-row weighted pseudoinverses (Y^T D_i Y)^{-1} Y^T D_i, shape (m, k, p).

    ``inverse_weights`` holds 1 / W_ij^2, one row of D_i per perturbation row.
    """
    out = []
    for d in inverse_weights:
        YD = Y.T * d
        out.append(np.linalg.solve(YD @ Y, YD))
    return np.array(out)


def reconstruct_weighted_delta(
    inst: ProblemInstance,
    G: np.ndarray,
    X: np.ndarray,
    weights: WeightMatrix,
    rank_tol: float = config.RANK_TOL,
) -> np.ndarray:
    """Delta minimizing ||W o Delta||_F subject to Delta C X = G.

    Equals G (CX)^+ when CX is square or every weight is 1.

    Raises:
        RankConditionError: If CX does not have full column rank.
    """
    check = inst.check_a3(X, rank_tol)
    if not check:
        raise RankConditionError(f"CX is rank deficient: {check.detail}")
    G = np.atleast_2d(G).reshape(inst.m, -1)
    pinvs = weighted_row_pinv(inst.C @ X, 1.0 / weights.squared)
    return np.einsum("ik,ikp->ip", G, pinvs)


def lifted_delta(
    CX: np.ndarray, g: np.ndarray, m: int, pinv_tol: float = config.PINV_TOL
) -> np.ndarray:
    """vec(Delta) computed as X~^+ g with X~ = (CX)^T (x) I_m.

    Args:
        CX: The p x k product C X.
        g: vec(G), length k m.
        m: Number of rows of Delta.
        pinv_tol: Relative cutoff for the pseudoinverse.

    Returns:
        vec(Delta), length m p. Equals vec(G (CX)^+).
    """
    return pinv(kron(CX.T, np.eye(m)), pinv_tol) @ g


def _check_lifted(
    CX: np.ndarray, g: np.ndarray, delta: np.ndarray, pinv_tol: float
) -> None:
    lifted = lifted_delta(CX, g, delta.shape[0], pinv_tol)
    mismatch = float(np.linalg.norm(lifted - vec(delta)))
    if mismatch > _LIFTED_TOL * (1.0 + float(np.linalg.norm(delta))):
        logger.debug(f"X~^+ g disagrees with G (CX)^+ by {mismatch:.3e}")


def _uses_weighted_solve(CX: np.ndarray, weights: Optional[WeightMatrix]) -> bool:
    return (
        weights is not None
        and CX.shape[0] != CX.shape[1]
        and bool(np.any(weights.W != 1.0))
    )


def evaluate(
    inst: ProblemInstance,
    g: np.ndarray,
    omega: float,
    operator: Optional[SylvesterOperator] = None,
    rank_tol: float = config.RANK_TOL,
    pinv_tol: float = config.PINV_TOL,
    weights: Optional[WeightMatrix] = None,
) -> SearchPoint:
    """Build the full search point for g = vec(G) and omega.

    The A3 flag is reported rather than raised. Delta is G (CX)^+, unless
    ``weights`` is given and CX is not square; then Delta is the weighted
    minimum-norm solution of Delta C X = G. At debug level the lifted form
    X~^+ g is checked against G (CX)^+.

    Args:
        inst: The problem
        g: vec(G), length 2 m (or m with a one-column operator)
        omega: Frequency
        operator: Cached lifted operator; its column count fixes the variant
        rank_tol: Relative rank tolerance for CX
        pinv_tol: Relative cutoff for the pseudoinverse
        weights: Penalty weights for the weighted reconstruction

    Returns:
        The SearchPoint with X, G, Delta, CX and the A3 flag

    Raises:
        ValueError: If g has the wrong length
    """
    g = np.asarray(g, dtype=float).ravel()
    columns = operator.columns if operator is not None else 2
    if g.size != columns * inst.m:
        raise ValueError(f"g must have length {columns * inst.m}, got {g.size}")
    G = unvec(g, inst.m, columns)
    X = solve_X(inst, G, omega, operator or SylvesterOperator(inst.A, columns))
    CX = inst.C @ X
    check = inst.check_a3(X, rank_tol)
    row_weights = None
    if check.passed and _uses_weighted_solve(CX, weights):
        row_weights = weights.squared
        delta = np.einsum("ik,ikp->ip", G, weighted_row_pinv(CX, 1.0 / row_weights))
    else:
        delta = G @ pinv(CX, pinv_tol)
        if logger.isEnabledFor(logging.DEBUG):
            _check_lifted(CX, g, delta, pinv_tol)
    return SearchPoint(
        g=g,
        omega=float(omega) if columns == 2 else 0.0,
        X=X,
        G=G,
        delta=delta,
        CX=CX,
        conditioning=check.value,
        a3=check.passed,
        row_weights=row_weights,
    )


def evaluate_real(
    inst: ProblemInstance,
    g: np.ndarray,
    operator: Optional[SylvesterOperator] = None,
    rank_tol: float = config.RANK_TOL,
    pinv_tol: float = config.PINV_TOL,
    weights: Optional[WeightMatrix] = None,
) -> SearchPoint:
    """Search point of the real variant: X = -A^{-1} B G with one column."""
    operator = operator or SylvesterOperator(inst.A, columns=1)
    if operator.columns != 1:
        raise ValueError("evaluate_real needs a one-column operator")
    return evaluate(inst, g, 0.0, operator, rank_tol, pinv_tol, weights)


def evaluate_z(
    inst: ProblemInstance,
    z: np.ndarray,
    operator: SylvesterOperator,
    rank_tol: float = config.RANK_TOL,
    pinv_tol: float = config.PINV_TOL,
    weights: Optional[WeightMatrix] = None,
) -> SearchPoint:
    """Evaluate from stacked free variables [g, omega] (or g alone for one column)."""
    z = np.asarray(z, dtype=float)
    if operator.columns == 1:
        return evaluate(inst, z, 0.0, operator, rank_tol, pinv_tol, weights)
    return evaluate(inst, z[:-1], z[-1], operator, rank_tol, pinv_tol, weights)
