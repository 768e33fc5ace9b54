"""Dense small-matrix utilities: vectorization, Kronecker, Hadamard, pseudoinverse."""

from typing import Tuple

import numpy as np
import scipy.linalg

from .errors import NumericalError

# Real form of multiplication by j: [[0, 1], [-1, 0]].
IBAR = np.array([[0.0, 1.0], [-1.0, 0.0]])

DEFAULT_PINV_TOL = 1e-12


def vec(M: np.ndarray) -> np.ndarray:
    """Stack the columns of M into one vector."""
    return np.asarray(M).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of vec for a rows x cols matrix."""
    return np.asarray(v).reshape((rows, cols), order="F")


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product A (x) B."""
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def hadamard(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Entrywise product of two equally sized matrices.

    Raises:
        ValueError: If the shapes differ.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"Hadamard product needs equal shapes, got {A.shape} and {B.shape}")
    return A * B


def commutation_matrix(m: int, p: int) -> np.ndarray:
    """Permutation T_{m,p} with T @ vec(M) == vec(M.T) for every m x p matrix M."""
    if m < 1 or p < 1:
        raise ValueError(f"Commutation matrix needs positive sizes, got {m}x{p}")
    index = np.arange(m * p).reshape((m, p), order="F")
    return np.eye(m * p)[vec(index.T)]


def _svd(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return scipy.linalg.svd(M, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"SVD failed: {e}") from e


def pinv(M: np.ndarray, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero.
    Works for real and complex input.

    Args:
        M: Matrix to invert
        tol: Relative singular value cutoff

    Returns:
        The pseudoinverse, shape M.T.shape

    Raises:
        ValueError: If tol is not positive.
        NumericalError: If the SVD does not converge.
    """
    if tol <= 0:
        raise ValueError("pinv tolerance must be positive")
    M = np.atleast_2d(M)
    U, s, Vh = _svd(M)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0]), dtype=M.dtype)
    keep = s > tol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (Vh.conj().T * inv_s) @ U.conj().T


def singular_values(M: np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    try:
        return scipy.linalg.svdvals(np.atleast_2d(M))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"SVD failed: {e}") from e


def rank(M: np.ndarray, tol: float = 1e-9) -> int:
    """Numerical rank: singular values above ``tol * sigma_max``."""
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def nullspace(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the kernel of M, one vector per column."""
    M = np.atleast_2d(M)
    try:
        _, s, Vh = scipy.linalg.svd(M, full_matrices=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"SVD failed: {e}") from e
    r = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return Vh[r:].conj().T


def spectral_abscissa(M: np.ndarray) -> float:
    """Largest real part over the spectrum of M."""
    try:
        eigenvalues = scipy.linalg.eigvals(np.atleast_2d(M))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Eigenvalue computation failed: {e}") from e
    return float(np.max(eigenvalues.real))


def batched_abscissa(
    A: np.ndarray, B: np.ndarray, C: np.ndarray, deltas: np.ndarray
) -> np.ndarray:
    """Spectral abscissa of A + B @ D @ C for every D in a stack of shape (N, m, p)."""
    stacked = A[None, :, :] + B[None, :, :] @ deltas @ C[None, :, :]
    eigenvalues = np.linalg.eigvals(stacked)
    return eigenvalues.real.max(axis=-1)


def batched_spectra(
    A: np.ndarray, B: np.ndarray, C: np.ndarray, deltas: np.ndarray
) -> np.ndarray:
    """All eigenvalues of A + B @ D @ C for a stack of perturbations, shape (N, n)."""
    stacked = A[None, :, :] + B[None, :, :] @ deltas @ C[None, :, :]
    return np.linalg.eigvals(stacked)


def frequency_response(
    A: np.ndarray, B: np.ndarray, C: np.ndarray, omegas: np.ndarray
) -> np.ndarray:
    """Evaluate H(j omega) = C (j omega I - A)^{-1} B on a frequency grid.

    Args:
        A: The n x n state matrix.
        B: The n x m input matrix.
        C: The p x n output matrix.
        omegas: Frequencies, any shape; flattened.

    Returns:
        Complex array of shape (N, p, m), one slice per frequency.

    Raises:
        NumericalError: If j omega is an eigenvalue of A for some omega.
    """
    omegas = np.asarray(omegas, dtype=float).ravel()
    n = A.shape[0]
    shifted = 1j * omegas[:, None, None] * np.eye(n)[None, :, :] - A[None, :, :]
    rhs = np.broadcast_to(np.asarray(B, dtype=complex), (omegas.size,) + B.shape)
    try:
        Y = np.linalg.solve(shifted, rhs)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Resolvent is singular on the frequency grid: {e}") from e
    return C[None, :, :] @ Y
