"""Penalized cost J_W, its analytic gradient and Hessian in z = [g, omega]."""

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import RankConditionError
from .matops import IBAR, commutation_matrix, kron, pinv, unvec, vec
from .problem import ProblemInstance, WeightMatrix
from .sylvester import SearchPoint, SylvesterOperator


def cost(point: SearchPoint, weights: WeightMatrix) -> float:
    """J_W = 1/2 ||W o Delta||_F^2."""
    return 0.5 * float(np.sum(weights.squared * point.delta**2))


@dataclass
class _Direction:
    """First-order variation of the search point along one coordinate of z.

    ``dN``, ``dP`` and ``dY_pinv`` are stacked per perturbation row, since each
    row of Delta uses its own (weighted) pseudoinverse of CX.
    """
    dG: np.ndarray
    domega: float
    dX: np.ndarray
    dY: np.ndarray
    dN: np.ndarray
    dP: np.ndarray
    dY_pinv: np.ndarray
    dDelta: np.ndarray


@dataclass(eq=False)
class GradientWorkspace:
    """Lifted matrices and Z for one iterate.

    Z maps mp-vectors to the free-variable space so that d(delta) = Z^T dz.
    When CX is not square the derivative of (CX)^+ has a component outside
    the row space of CX; Z carries it through the correction term E.
    """
    inst: ProblemInstance
    point: SearchPoint
    operator: SylvesterOperator
    X_tilde_pinv: np.ndarray
    B_tilde: np.ndarray
    Delta_tilde: np.ndarray
    I_tilde: np.ndarray
    correction: np.ndarray
    Z: np.ndarray
    _directions: Optional[List[_Direction]] = field(default=None, repr=False)

    @property
    def columns(self) -> int:
        return self.point.columns

    @property
    def dimension(self) -> int:
        return self.inst.m * self.columns + (1 if self.has_omega else 0)

    @property
    def has_omega(self) -> bool:
        return self.columns == 2

    @property
    def is_square(self) -> bool:
        return self.point.CX.shape[0] == self.point.CX.shape[1]

    def gradient(self, weights: WeightMatrix) -> np.ndarray:
        """Z W-bar delta."""
        return self.Z @ (weights.diagonal * self.point.delta_vec)

    def gauss_newton(self, weights: WeightMatrix) -> np.ndarray:
        """Z W-bar Z^T, positive semidefinite by construction."""
        return (self.Z * weights.diagonal) @ self.Z.T

    def curvature(self, weights: WeightMatrix) -> np.ndarray:
        """The term M of the Hessian, H = Z W-bar Z^T + M + M^T."""
        if self.has_omega and self.is_square:
            return self.curvature_closed_form(weights)
        return self.curvature_directional(weights)

    def hessian(self, weights: WeightMatrix) -> np.ndarray:
        M = self.curvature(weights)
        return self.gauss_newton(weights) + M + M.T

    def curvature_closed_form(self, weights: WeightMatrix) -> np.ndarray:
        """M assembled from the commutation matrix and the rank-one omega term.

        Valid when CX is square and omega is a free variable.
        """
        if not (self.has_omega and self.is_square):
            raise ValueError("Closed-form curvature needs square CX and a free omega")
        inst, point = self.inst, self.point
        m, p, omega = inst.m, inst.p, point.omega
        weighted = weights.squared * point.delta

        Y_op = self.operator.solve(
            np.hstack([self.B_tilde, (self.I_tilde @ point.x_v)[:, None]]), omega
        )
        first = (
            kron(pinv(point.CX) @ weighted.T, inst.C.T)
            @ commutation_matrix(m, p)
            @ self.Z.T
        )
        weighted_delta = weights.diagonal * point.delta_vec
        v = self.I_tilde.T @ self.operator.solve(
            self.Delta_tilde.T @ (self.X_tilde_pinv.T @ weighted_delta),
            omega,
            transpose=True,
        )
        e_last = np.zeros(self.dimension)
        e_last[-1] = 1.0
        return Y_op.T @ (first - np.outer(v, e_last))

    def _row_metric(self) -> np.ndarray:
        """1 / W_ij^2 per row when Delta is the weighted solve, otherwise all ones."""
        if self.point.weighted:
            return 1.0 / self.point.row_weights
        return np.ones((self.inst.m, self.inst.p))

    def _row_inverses(self) -> np.ndarray:
        Y = self.point.CX
        return np.array([np.linalg.inv((Y.T * d) @ Y) for d in self._row_metric()])

    def directions(self) -> List[_Direction]:
        """First derivatives of X, the row pseudoinverses and Delta along each coordinate."""
        if self._directions is not None:
            return self._directions
        inst, point = self.inst, self.point
        m, n, k = inst.m, inst.n, self.columns
        Y = point.CX
        D = self._row_metric()
        P = self._row_inverses()
        result = []
        for u in range(self.dimension):
            dG = np.zeros((m, k))
            domega = 0.0
            if u < m * k:
                dG = unvec(np.eye(m * k)[u], m, k)
            else:
                domega = 1.0
            rhs = -inst.B @ dG
            if domega:
                rhs = rhs + domega * point.X @ IBAR
            dX = unvec(self.operator.solve(vec(rhs), point.omega), n, k)
            dY = inst.C @ dX
            dN = np.array([(dY.T * d) @ Y + (Y.T * d) @ dY for d in D])
            dP = -P @ dN @ P
            dY_pinv = np.array(
                [dP[i] @ (Y.T * D[i]) + P[i] @ (dY.T * D[i]) for i in range(m)]
            )
            dDelta = np.array(
                [dG[i] @ P[i] @ (Y.T * D[i]) + point.G[i] @ dY_pinv[i] for i in range(m)]
            )
            result.append(_Direction(dG, domega, dX, dY, dN, dP, dY_pinv, dDelta))
        self._directions = result
        return result

    def second_derivative(self, u: int, v: int) -> np.ndarray:
        """d^2 Delta along coordinates u and v of z."""
        inst, point = self.inst, self.point
        m, n, k = inst.m, inst.n, self.columns
        du, dv = self.directions()[u], self.directions()[v]
        Y = point.CX
        D = self._row_metric()
        P = self._row_inverses()

        d2X = np.zeros((n, k))
        if k == 2 and (du.domega or dv.domega):
            rhs = (dv.domega * du.dX + du.domega * dv.dX) @ IBAR
            d2X = unvec(self.operator.solve(vec(rhs), point.omega), n, k)
        d2Y = inst.C @ d2X

        out = np.zeros((m, inst.p))
        for i in range(m):
            d = D[i]
            d2N = (
                (d2Y.T * d) @ Y
                + (du.dY.T * d) @ dv.dY
                + (dv.dY.T * d) @ du.dY
                + (Y.T * d) @ d2Y
            )
            d2P = (
                P[i] @ dv.dN[i] @ P[i] @ du.dN[i] @ P[i]
                + P[i] @ du.dN[i] @ P[i] @ dv.dN[i] @ P[i]
                - P[i] @ d2N @ P[i]
            )
            d2Y_pinv = (
                d2P @ (Y.T * d)
                + du.dP[i] @ (dv.dY.T * d)
                + dv.dP[i] @ (du.dY.T * d)
                + P[i] @ (d2Y.T * d)
            )
            out[i] = (
                du.dG[i] @ dv.dY_pinv[i]
                + dv.dG[i] @ du.dY_pinv[i]
                + point.G[i] @ d2Y_pinv
            )
        return out

    def curvature_directional(self, weights: WeightMatrix) -> np.ndarray:
        """M as half the weighted second derivative of Delta, for any CX shape."""
        weighted = weights.squared * self.point.delta
        d = self.dimension
        S2 = np.zeros((d, d))
        for u in range(d):
            for v in range(u, d):
                S2[u, v] = S2[v, u] = float(np.sum(weighted * self.second_derivative(u, v)))
        return 0.5 * S2


def build_workspace(
    inst: ProblemInstance, point: SearchPoint, operator: SylvesterOperator
) -> GradientWorkspace:
    """Assemble X~^+, B~, Delta~, I~ and Z at a search point.

    Args:
        inst: The problem the point was evaluated on
        point: Search point with full-rank CX
        operator: The lifted operator used for the point

    Returns:
        A GradientWorkspace whose Z gives the gradient Z W-bar delta

    Raises:
        RankConditionError: If CX is rank deficient at the point.
    """
    if not point.a3:
        raise RankConditionError(
            f"Gradient needs full column rank CX (conditioning {point.conditioning:.3g})"
        )
    m, n, k = inst.m, inst.n, point.columns
    Y = point.CX
    Y_pinv = pinv(Y)
    X_tilde_pinv = kron(Y_pinv.T, np.eye(m))
    B_tilde = kron(np.eye(k), inst.B)
    Delta_tilde = kron(np.eye(k), point.delta @ inst.C)
    I_tilde = kron(IBAR, np.eye(n)) if k == 2 else np.zeros((n, n))

    Q = np.eye(Y.shape[0]) - Y @ Y_pinv
    K = point.G @ np.linalg.inv(Y.T @ Y)
    correction = kron(Q @ inst.C, K) @ commutation_matrix(n, k)
    workspace = GradientWorkspace(
        inst=inst,
        point=point,
        operator=operator,
        X_tilde_pinv=X_tilde_pinv,
        B_tilde=B_tilde,
        Delta_tilde=Delta_tilde,
        I_tilde=I_tilde,
        correction=correction,
        Z=np.zeros((0, m * inst.p)),
    )
    if point.weighted:
        workspace.Z = np.array([vec(d.dDelta) for d in workspace.directions()])
        return workspace

    R = X_tilde_pinv @ Delta_tilde - correction
    blocks = [X_tilde_pinv + R @ operator.solve(B_tilde, point.omega)]
    if k == 2:
        blocks.append((R @ operator.solve(I_tilde @ point.x_v, point.omega))[:, None])
    workspace.Z = np.hstack(blocks).T
    return workspace


def gradient(
    inst: ProblemInstance, point: SearchPoint, weights: WeightMatrix, operator: SylvesterOperator
) -> np.ndarray:
    """Gradient of J_W in z = [g, omega]."""
    return build_workspace(inst, point, operator).gradient(weights)


def hessian(
    inst: ProblemInstance, point: SearchPoint, weights: WeightMatrix, operator: SylvesterOperator
) -> np.ndarray:
    """Full Hessian of J_W in z: Gauss-Newton term plus curvature."""
    return build_workspace(inst, point, operator).hessian(weights)


def _steps(z: np.ndarray, step: float) -> np.ndarray:
    return step * np.maximum(1.0, np.abs(z))


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], z: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Centered differences of a scalar function, step scaled by |z_i|."""
    z = np.asarray(z, dtype=float)
    h = _steps(z, step)
    out = np.zeros_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h[i]
        out[i] = (f(z + e) - f(z - e)) / (2 * h[i])
    return out


def finite_difference_hessian(
    grad: Callable[[np.ndarray], np.ndarray], z: np.ndarray, step: float = 1e-5
) -> np.ndarray:
    """Centered differences of a gradient, symmetrized."""
    z = np.asarray(z, dtype=float)
    h = _steps(z, step)
    H = np.zeros((z.size, z.size))
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h[i]
        H[:, i] = (grad(z + e) - grad(z - e)) / (2 * h[i])
    return 0.5 * (H + H.T)
