"""Complex-pair crossings for patterns whose support is a single column of Delta.

With one free column, Delta = d (m x 1) and A + B d C has the eigenvalue
j omega exactly when H(j omega) d = 1, where H(s) = C (sI - A)^{-1} B is a
1 x m row. Split into real and imaginary parts this is the 2 x m real system
[Re H; Im H] d = [1; 0], whose least-norm solution is explicit. The search for
the smallest destabilizing d is therefore a search over omega alone:

- one input (m = 1): d = 1 / H, admissible only where Im H(j omega) = 0;
- several inputs: ||d(omega)||^2 = (K^{-1})_{11} with K = M M^T, minimized
  over omega.

The Sylvester parametrization cannot express these points, since CX has a
single row and never reaches rank two.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import NumericalError
from .matops import frequency_response
from .problem import ProblemInstance

logger = logging.getLogger(__name__)

_E1 = np.array([1.0, 0.0])

# Largest condition number of M M^T treated as full rank.
_GRAM_CONDITION_LIMIT = 1e12


@dataclass
class Crossing:
    """A single-column perturbation d that puts j omega in the spectrum.

    Attributes:
        delta: The m x 1 perturbation.
        omega: Crossing frequency, positive.
        x: Complex eigenvector with C x = 1.
        slope: Derivative of 1/2 ||d(omega)||^2 in omega at the crossing.
            Zero for one input, where admissible crossings are isolated.
    """
    delta: np.ndarray
    omega: float
    x: np.ndarray
    slope: float

    @property
    def fnorm(self) -> float:
        return float(np.linalg.norm(self.delta))


def _resolvent_terms(
    inst: ProblemInstance, omega: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """H(j omega) as a row, its derivative in omega, and (j omega I - A)^{-1} B."""
    shifted = 1j * omega * np.eye(inst.n) - inst.A
    try:
        lu = scipy.linalg.lu_factor(shifted)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Resolvent at omega = {omega:.6g} failed: {e}") from e
    Y = scipy.linalg.lu_solve(lu, inst.B.astype(complex))
    H = (inst.C @ Y)[0]
    dH = -1j * (inst.C @ scipy.linalg.lu_solve(lu, Y))[0]
    return H, dH, Y


def least_norm_column(H: np.ndarray) -> Optional[np.ndarray]:
    """Smallest real d with H d = 1 for a complex row H, or None if none exists.

    Args:
        H: Complex row of length m >= 2.

    Returns:
        The least-norm solution of [Re H; Im H] d = [1; 0], or None when the
        real and imaginary parts are linearly dependent.
    """
    M = np.vstack([H.real, H.imag])
    K = M @ M.T
    if np.linalg.cond(K) > _GRAM_CONDITION_LIMIT:
        return None
    return M.T @ scipy.linalg.solve(K, _E1, assume_a="pos")


def _norm_slope(inst: ProblemInstance, omega: float) -> float:
    """d/d omega of 1/2 ||d(omega)||^2 for the least-norm column."""
    H, dH, _ = _resolvent_terms(inst, omega)
    M = np.vstack([H.real, H.imag])
    dM = np.vstack([dH.real, dH.imag])
    u = scipy.linalg.solve(M @ M.T, _E1, assume_a="pos")
    return -float(u @ (dM @ (M.T @ u)))


def _crossing_norm(inst: ProblemInstance, omega: float) -> float:
    d = least_norm_column(_resolvent_terms(inst, omega)[0])
    return np.inf if d is None else float(d @ d)


def _crossing_at(inst: ProblemInstance, omega: float) -> Optional[Crossing]:
    H, _, Y = _resolvent_terms(inst, omega)
    if inst.m == 1:
        if H[0].real == 0.0:
            return None
        d = np.array([1.0 / H[0].real])
        slope = 0.0
    else:
        d = least_norm_column(H)
        if d is None:
            return None
        slope = _norm_slope(inst, omega)
    x = Y @ d
    return Crossing(delta=d.reshape(-1, 1), omega=float(omega), x=x, slope=slope)


def _bracket_roots(values: np.ndarray) -> np.ndarray:
    """Indices i where values changes sign strictly between i and i + 1."""
    finite = np.isfinite(values[:-1]) & np.isfinite(values[1:])
    return np.flatnonzero(finite & (values[:-1] * values[1:] < 0))


def _single_input_crossings(
    inst: ProblemInstance, omegas: np.ndarray, xtol: float
) -> List[Crossing]:
    imag = frequency_response(inst.A, inst.B, inst.C, omegas)[:, 0, 0].imag

    def phase(omega: float) -> float:
        return float(_resolvent_terms(inst, omega)[0][0].imag)

    crossings = []
    for i in _bracket_roots(imag):
        omega = scipy.optimize.brentq(phase, omegas[i], omegas[i + 1], xtol=xtol)
        crossing = _crossing_at(inst, omega)
        if crossing is not None:
            crossings.append(crossing)
    return crossings


def _multi_input_crossings(
    inst: ProblemInstance, omegas: np.ndarray, xtol: float
) -> List[Crossing]:
    H = frequency_response(inst.A, inst.B, inst.C, omegas)[:, 0, :]
    norms = np.full(omegas.size, np.inf)
    for i, row in enumerate(H):
        d = least_norm_column(row)
        if d is not None:
            norms[i] = float(d @ d)

    interior = np.arange(1, omegas.size - 1)
    minima = interior[
        np.isfinite(norms[interior])
        & (norms[interior] <= norms[interior - 1])
        & (norms[interior] <= norms[interior + 1])
    ]
    crossings = []
    for i in minima:
        lo, hi = omegas[i - 1], omegas[i + 1]
        try:
            if _norm_slope(inst, lo) < 0 < _norm_slope(inst, hi):
                omega = scipy.optimize.brentq(
                    lambda w: _norm_slope(inst, w), lo, hi, xtol=xtol
                )
            else:
                omega = scipy.optimize.minimize_scalar(
                    lambda w: _crossing_norm(inst, w),
                    bounds=(lo, hi),
                    method="bounded",
                    options={"xatol": xtol},
                ).x
        except (np.linalg.LinAlgError, ValueError) as e:
            logger.debug(f"Refinement near omega = {omegas[i]:.4g} failed: {e}")
            continue
        crossing = _crossing_at(inst, float(omega))
        if crossing is not None:
            crossings.append(crossing)
    return crossings


def scan_single_column(
    inst: ProblemInstance, omegas: np.ndarray, xtol: float = 1e-12
) -> List[Crossing]:
    """Find every complex-pair crossing along a frequency grid.

    For one input these are the roots of Im H(j omega); for several inputs the
    local minima of the least-norm ||d(omega)||. Each is bracketed on the grid
    and refined with brentq.

    Args:
        inst: A problem with a single output (p = 1) and every entry free.
        omegas: Increasing positive frequencies.
        xtol: Absolute frequency tolerance of the refinement.

    Returns:
        Crossings sorted by norm, smallest first.

    Raises:
        ValueError: If inst has more than one output.
        NumericalError: If the resolvent is singular on the grid.
    """
    if inst.p != 1:
        raise ValueError(f"Single-column scan needs p = 1, got p = {inst.p}")
    omegas = np.asarray(omegas, dtype=float)
    if inst.m == 1:
        crossings = _single_input_crossings(inst, omegas, xtol)
    else:
        crossings = _multi_input_crossings(inst, omegas, xtol)
    logger.debug(
        f"Frequency scan over [{omegas[0]:.3g}, {omegas[-1]:.3g}]: "
        f"{len(crossings)} crossings"
    )
    return sorted(crossings, key=lambda c: c.fnorm)
