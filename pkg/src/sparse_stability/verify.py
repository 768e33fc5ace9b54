"""Independent certification of candidate minima and brute-force radius oracles."""

from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging

import numpy as np
import scipy.linalg
import scipy.optimize

from .config import config
from .errors import NotBoundaryPointError, RegularityError, SearchBoundError
from .matops import (
    batched_abscissa,
    batched_spectra,
    kron,
    nullspace,
    pinv,
    rank,
    spectral_abscissa,
    vec,
)
from .models import (
    EigenPair,
    OptimalityReport,
    SecondOrderCheck,
    SpectralCloud,
    SRBracket,
    StationarityResiduals,
)
from .problem import ProblemInstance

logger = logging.getLogger(__name__)

__all__ = [
    "Thresholds",
    "brute_force_sr",
    "build_jacobian",
    "build_lagrangian_hessian",
    "certify",
    "check_second_order",
    "check_stationarity",
    "extract_eigenpair",
    "sample_spectral_set",
    "spectral_abscissa",
]

CONDITION_WARNING = 1e8
GRID_MAX_FREE = 3
BRUTE_FORCE_MAX_FREE = 2
SCAN_POINTS = 400
SCAN_DECADES = 6.0
CHUNK = 4096


@dataclass
class Thresholds:
    """Pass/fail thresholds for certification."""
    eig_tol: float = config.EIG_TOL
    stationarity_tol: float = config.STATIONARITY_TOL
    realness_tol: float = config.REALNESS_TOL
    alpha_tol: float = config.ALPHA_TOL
    pd_tol: float = config.PD_TOL
    rank_tol: float = config.RANK_TOL

    @classmethod
    def from_config(cls) -> "Thresholds":
        return cls(
            eig_tol=config.EIG_TOL,
            stationarity_tol=config.STATIONARITY_TOL,
            realness_tol=config.REALNESS_TOL,
            alpha_tol=config.ALPHA_TOL,
            pd_tol=config.PD_TOL,
            rank_tol=config.RANK_TOL,
        )


def _outer_term(inst: ProblemInstance, l: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Complex B^T l x^T C^T."""
    return inst.B.T @ np.outer(l, x) @ inst.C.T


def extract_eigenpair(
    inst: ProblemInstance,
    delta: np.ndarray,
    omega: float,
    eig_tol: float = config.EIG_TOL,
) -> EigenPair:
    """Right and left eigenvectors of A(Delta) at the eigenvalue nearest j*omega.

    x is normalized to unit norm with its largest entry real and positive.
    l is then scaled by the complex beta that best satisfies
    Delta = -S o [B^T Re(l x^T) C^T] in the least-squares sense.

    Args:
        inst: The problem
        delta: A sparse m x p perturbation
        omega: The claimed crossing frequency
        eig_tol: Relative distance allowed between j*omega and the eigenvalue

    Returns:
        The EigenPair with x, l, beta and the eigenvalue distance

    Raises:
        NotBoundaryPointError: If no eigenvalue lies within
            eig_tol * (1 + ||A(Delta)||_F) of j*omega.
    """
    M = inst.perturbed_matrix(delta)
    eigenvalues, vl, vr = scipy.linalg.eig(M, left=True, right=True)
    target = 1j * omega
    gaps = np.abs(eigenvalues - target)
    idx = int(np.argmin(gaps))
    tol = eig_tol * (1.0 + np.linalg.norm(M))
    if gaps[idx] > tol:
        raise NotBoundaryPointError(
            f"No eigenvalue of A(Delta) within {tol:.3g} of j*{omega:.6g}; "
            f"nearest is {eigenvalues[idx]:.6g}"
        )

    x = vr[:, idx] / np.linalg.norm(vr[:, idx])
    pivot = x[np.argmax(np.abs(x))]
    x = x * (abs(pivot) / pivot)
    y = vl[:, idx]
    overlap = abs(np.vdot(y, x))
    condition = np.linalg.norm(y) / overlap if overlap > 0 else np.inf

    warnings: List[str] = []
    if condition > CONDITION_WARNING:
        warnings.append(f"eigenvalue is ill-conditioned (condition {condition:.3g})")
    others = np.delete(eigenvalues, idx)
    if others.size and np.min(np.abs(others - eigenvalues[idx])) <= tol:
        warnings.append("another eigenvalue lies within eig_tol; eigenvalue may be defective")
    for message in warnings:
        logger.warning(message)

    l0 = np.conj(y)
    S = inst.pattern.S
    N = _outer_term(inst, l0, x)
    basis = np.column_stack([vec(S * N.real), -vec(S * N.imag)])
    coeffs, *_ = scipy.linalg.lstsq(basis, -vec(np.asarray(delta, dtype=float)))
    beta = complex(coeffs[0], coeffs[1])

    return EigenPair(
        x=x,
        l=beta * l0,
        eigenvalue=complex(eigenvalues[idx]),
        omega=float(eigenvalues[idx].imag),
        beta=beta,
        condition=float(condition),
        distance=float(gaps[idx]),
        warnings=warnings,
    )


def check_stationarity(
    inst: ProblemInstance, delta: np.ndarray, pair: EigenPair, rank_tol: float = config.RANK_TOL
) -> StationarityResiduals:
    """||Delta + S o [B^T Re(l x^T) C^T]||_F, |Im(l^T x)| and rank of B^T L X^T C^T."""
    delta = np.asarray(delta, dtype=float)
    N = _outer_term(inst, pair.l, pair.x)
    stationarity = float(np.linalg.norm(delta + inst.pattern.S * N.real))
    realness = float(abs(np.imag(pair.l @ pair.x)))
    L = np.column_stack([pair.l.real, -pair.l.imag])
    X = np.column_stack([pair.x.real, pair.x.imag])
    outer = inst.B.T @ L @ X.T @ inst.C.T
    outer_rank = rank(outer, rank_tol) if np.any(outer) else 0
    return StationarityResiduals(stationarity, realness, outer_rank)


def build_jacobian(
    inst: ProblemInstance, delta: np.ndarray, pair: EigenPair, rank_tol: float = config.RANK_TOL
) -> Tuple[np.ndarray, int]:
    """Constraint Jacobian in z = [x, x*, vec(Delta), omega] and its numerical rank.

    Rows: the eigenvector equation, its conjugate, the normalization and the
    n_s forced-zero constraints.
    """
    n = inst.n
    M = inst.perturbed_matrix(delta)
    x, omega = pair.x, pair.omega
    I = np.eye(n)
    Z = np.zeros((n, n))
    Cx = inst.C @ x
    selector = inst.pattern.selector
    n_s = selector.shape[0]
    mp = inst.m * inst.p

    J = np.block(
        [
            [M - 1j * omega * I, Z, kron(Cx[None, :], inst.B), -1j * x[:, None]],
            [Z, M + 1j * omega * I, kron(np.conj(Cx)[None, :], inst.B), 1j * np.conj(x)[:, None]],
            [np.conj(x)[None, :], x[None, :], np.zeros((1, mp)), np.zeros((1, 1))],
            [np.zeros((n_s, 2 * n)), selector, np.zeros((n_s, 1))],
        ]
    )
    return J, rank(J, rank_tol)


def build_lagrangian_hessian(inst: ProblemInstance, pair: EigenPair) -> np.ndarray:
    """Hermitian Hessian of the Lagrangian in z = [x, x*, vec(Delta), omega]."""
    n, mp = inst.n, inst.m * inst.p
    l = pair.l
    L = kron(inst.C, (inst.B.T @ l)[:, None])
    Z = np.zeros((n, n))
    return np.block(
        [
            [Z, Z, L.conj().T, 1j * np.conj(l)[:, None]],
            [Z, Z, L.T, -1j * l[:, None]],
            [L, L.conj(), 2.0 * np.eye(mp), np.zeros((mp, 1))],
            [-1j * l[None, :], 1j * np.conj(l)[None, :], np.zeros((1, mp)), np.zeros((1, 1))],
        ]
    )


def phase_direction(inst: ProblemInstance, pair: EigenPair) -> np.ndarray:
    """Kernel direction that rotates the phase of x; it never carries curvature."""
    mp = inst.m * inst.p
    d = np.concatenate([1j * pair.x, -1j * np.conj(pair.x), np.zeros(mp + 1)])
    return d / np.linalg.norm(d)


def check_second_order(
    inst: ProblemInstance,
    delta: np.ndarray,
    pair: EigenPair,
    J: np.ndarray,
    pd_tol: float = config.PD_TOL,
    rank_tol: float = config.RANK_TOL,
) -> SecondOrderCheck:
    """Positive definiteness of the Lagrangian Hessian on ker J, modulo the phase direction.

    Args:
        inst: The problem
        delta: The sparse candidate
        pair: Eigenpair at the candidate
        J: Constraint Jacobian from build_jacobian
        pd_tol: Relative margin the smallest curvature must clear
        rank_tol: Relative rank tolerance for J and its kernel

    Returns:
        A SecondOrderCheck with the reduced and projected spectra

    Raises:
        RegularityError: If J is rank deficient.
    """
    rows = J.shape[0]
    if rank(J, rank_tol) < rows:
        raise RegularityError("Jacobian is rank deficient; second-order test inconclusive")

    D = build_lagrangian_hessian(inst, pair)
    P = np.eye(J.shape[1]) - pinv(J) @ J
    PDP = P @ D @ P
    projected = scipy.linalg.eigvalsh(0.5 * (PDP + PDP.conj().T))
    scale = max(float(np.max(np.abs(projected))), 1.0)

    V = nullspace(J, rank_tol)
    phase = phase_direction(inst, pair)
    coeffs = V.conj().T @ phase
    V = V @ nullspace(coeffs.conj()[None, :], rank_tol)
    if V.shape[1] == 0:
        return SecondOrderCheck(0, None, [], projected.tolist(), True)

    H = V.conj().T @ D @ V
    spectrum = scipy.linalg.eigvalsh(0.5 * (H + H.conj().T))
    min_eig = float(spectrum[0])
    return SecondOrderCheck(
        kernel_dimension=V.shape[1],
        min_eig=min_eig,
        kernel_spectrum=spectrum.tolist(),
        projected_spectrum=projected.tolist(),
        passed=min_eig > pd_tol * scale,
    )


def certify(
    inst: ProblemInstance,
    delta: np.ndarray,
    omega: float,
    thresholds: Optional[Thresholds] = None,
) -> OptimalityReport:
    """Check every local optimality condition at a sparsified candidate.

    Args:
        inst: The problem
        delta: Candidate perturbation; entries outside S are dropped first
        omega: Frequency of the crossing
        thresholds: Pass/fail tolerances; taken from config when omitted

    Returns:
        An OptimalityReport covering stationarity, realness, regularity,
        second order and the spectral abscissa

    Raises:
        NotBoundaryPointError: If j*omega is not (close to) an eigenvalue of A(S o Delta).
    """
    thresholds = thresholds or Thresholds.from_config()
    sparse, _ = inst.project_sparse(np.asarray(delta, dtype=float))
    pair = extract_eigenpair(inst, sparse, omega, thresholds.eig_tol)
    residuals = check_stationarity(inst, sparse, pair, thresholds.rank_tol)
    J, jacobian_rank = build_jacobian(inst, sparse, pair, thresholds.rank_tol)
    full_rank = jacobian_rank == J.shape[0]
    warnings = list(pair.warnings)

    second: Optional[SecondOrderCheck] = None
    if full_rank:
        second = check_second_order(inst, sparse, pair, J, thresholds.pd_tol, thresholds.rank_tol)
    else:
        warnings.append("regularity failed, second-order test inconclusive")
        logger.warning(warnings[-1])

    alpha = spectral_abscissa(inst.perturbed_matrix(sparse))
    return OptimalityReport(
        residual_stationarity=residuals.stationarity,
        residual_realness=residuals.realness,
        jacobian_rank=jacobian_rank,
        jacobian_shape=J.shape,
        full_rank=full_rank,
        kernel_dimension=second.kernel_dimension if second else J.shape[1] - jacobian_rank,
        projected_hessian_min_eig=second.min_eig if second else None,
        projected_hessian_spectrum=second.kernel_spectrum if second else [],
        second_order_pass=second.passed if second else None,
        alpha_check=alpha,
        outer_rank=residuals.outer_rank,
        eigenvalue_distance=pair.distance,
        stationarity_pass=residuals.stationarity < thresholds.stationarity_tol,
        realness_pass=residuals.realness < thresholds.realness_tol,
        alpha_pass=abs(alpha) <= thresholds.alpha_tol,
        warnings=warnings,
    )


def _unit_directions(k: int, samples: int) -> np.ndarray:
    """Deterministic directions on the unit sphere in R^k, k <= 3."""
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    lat = max(2, int(np.sqrt(samples / 2.0)))
    polar = np.linspace(0.0, np.pi, lat + 1)
    azimuth = np.linspace(0.0, 2.0 * np.pi, 2 * lat, endpoint=False)
    P, Q = np.meshgrid(polar, azimuth, indexing="ij")
    return np.column_stack(
        [(np.sin(P) * np.cos(Q)).ravel(), (np.sin(P) * np.sin(Q)).ravel(), np.cos(P).ravel()]
    )


def _embed(inst: ProblemInstance, coefficients: np.ndarray) -> np.ndarray:
    """Stack of sparse perturbations from per-sample free-entry values, shape (N, m, p)."""
    deltas = np.zeros((coefficients.shape[0], inst.m, inst.p))
    for c, (i, j) in enumerate(inst.pattern.free_entries):
        deltas[:, i, j] = coefficients[:, c]
    return deltas


def sample_spectral_set(
    inst: ProblemInstance,
    eta: float,
    strategy: str = "grid",
    samples: int = config.SPECTRAL_SAMPLES,
    levels: int = config.RADIAL_LEVELS,
    seed: int = config.SEED,
) -> SpectralCloud:
    """Eigenvalues of A + B Delta C over sparse Delta with ||Delta||_F <= eta.

    ``grid`` samples radial shells up to and including eta and needs at most
    three free entries. ``random`` draws uniformly from the ball. ``shell``
    draws uniformly from the sphere ||Delta||_F = eta, where locally
    right-most points live.

    Args:
        inst: The problem
        eta: Norm bound on Delta
        strategy: ``grid``, ``random`` or ``shell``
        samples: Directions per shell, or draws for the random strategies
        levels: Number of radial shells for ``grid``
        seed: Seed for the random strategies

    Returns:
        A SpectralCloud of eigenvalues with the norm of each perturbation

    Raises:
        ValueError: If eta or samples is out of range, the strategy is
            unknown, or ``grid`` meets more than three free entries
    """
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    k = inst.pattern.free_count
    if strategy == "grid":
        if k > GRID_MAX_FREE:
            raise ValueError(
                f"Grid sampling supports at most {GRID_MAX_FREE} free entries, "
                f"pattern has {k}; use the random strategy"
            )
        coefficients = np.zeros((1, k))
        if k and eta > 0:
            radii = np.linspace(0.0, eta, levels + 1)[1:]
            directions = _unit_directions(k, samples)
            coefficients = np.vstack(
                [coefficients, (radii[:, None, None] * directions[None]).reshape(-1, k)]
            )
    elif strategy in ("random", "shell"):
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((samples, k))
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        directions = np.divide(directions, norms, out=np.zeros_like(directions), where=norms > 0)
        if strategy == "random":
            radii = eta * rng.uniform(size=(samples, 1)) ** (1.0 / max(k, 1))
        else:
            radii = np.full((samples, 1), eta)
        coefficients = radii * directions
    else:
        raise ValueError(f"Unknown sampling strategy: {strategy}")

    deltas = _embed(inst, coefficients)
    spectra = np.concatenate(
        [
            batched_spectra(inst.A, inst.B, inst.C, deltas[s : s + CHUNK])
            for s in range(0, len(deltas), CHUNK)
        ]
    )
    fnorms = np.linalg.norm(coefficients, axis=1)
    logger.debug(f"Sampled {len(deltas)} perturbations at eta = {eta:.6g} ({strategy})")
    return SpectralCloud(
        eta=float(eta),
        points=spectra.ravel(),
        norms=np.repeat(fnorms, inst.n),
        strategy=strategy,
        samples=len(deltas),
    )


def _alpha(inst: ProblemInstance, coefficients: np.ndarray) -> np.ndarray:
    return batched_abscissa(inst.A, inst.B, inst.C, _embed(inst, coefficients))


def _radial_scan(inst: ProblemInstance, directions: np.ndarray, bound: float):
    """First scanned radius along each direction where alpha >= 0.

    Radii are geometric between bound * 10^-SCAN_DECADES and bound. Returns
    (lower, upper) per direction, with upper = inf where nothing crossed.
    """
    radii = bound * np.logspace(-SCAN_DECADES, 0.0, SCAN_POINTS)
    d = directions.shape[0]
    coefficients = (radii[None, :, None] * directions[:, None, :]).reshape(-1, directions.shape[1])
    alpha = _alpha(inst, coefficients).reshape(d, SCAN_POINTS)
    unstable = alpha >= 0
    crossed = unstable.any(axis=1)
    first = np.argmax(unstable, axis=1)
    upper = np.where(crossed, radii[first], np.inf)
    lower = np.where(first > 0, radii[np.maximum(first - 1, 0)], 0.0)
    return lower, upper


def _bisect(inst: ProblemInstance, directions: np.ndarray, lower, upper, width: float):
    """Shrink [lower, upper] along every direction until the widest bracket is below width."""
    lower, upper = lower.copy(), upper.copy()
    while np.max(upper - lower) > width:
        mid = 0.5 * (lower + upper)
        unstable = _alpha(inst, mid[:, None] * directions) >= 0
        upper = np.where(unstable, mid, upper)
        lower = np.where(unstable, lower, mid)
    return lower, upper


def _default_bound(inst: ProblemInstance) -> float:
    scale = np.linalg.norm(inst.B, 2) * np.linalg.norm(inst.C, 2)
    return 10.0 * np.linalg.norm(inst.A, 2) / scale


def brute_force_sr(
    inst: ProblemInstance,
    bound: Optional[float] = None,
    width: Optional[float] = None,
    angles: int = config.SPECTRAL_SAMPLES,
) -> SRBracket:
    """Bracket the stability radius by exhaustive search over at most two free entries.

    One free entry: scan both signs, then root-find alpha = 0 to width 1e-6.
    Two free entries: scan a polar grid, bisect along every ray, then refine
    the angle around the best ray until the bracket is narrower than 1e-3.

    Args:
        inst: A stable problem with one or two free entries
        bound: Largest radius scanned; derived from A, B and C when omitted
        width: Final bracket width
        angles: Number of rays for two free entries

    Returns:
        An SRBracket [lower, upper] containing the radius

    Raises:
        ValueError: If the pattern has no or more than two free entries.
        SearchBoundError: If no perturbation up to ``bound`` destabilizes A.
    """
    inst.require_stable()
    k = inst.pattern.free_count
    if k == 0 or k > BRUTE_FORCE_MAX_FREE:
        raise ValueError(
            f"Brute-force oracle needs 1 or {BRUTE_FORCE_MAX_FREE} free entries, pattern has {k}"
        )
    bound = float(bound) if bound is not None else _default_bound(inst)
    if k == 1:
        return _bracket_1d(inst, bound, 1e-6 if width is None else width)
    return _bracket_2d(inst, bound, 1e-3 if width is None else width, angles)


def _bracket_1d(inst: ProblemInstance, bound: float, width: float) -> SRBracket:
    directions = np.array([[1.0], [-1.0]])
    lower, upper = _radial_scan(inst, directions, bound)
    if not np.isfinite(upper).any():
        raise SearchBoundError(f"No instability found up to bound {bound:.6g}")
    best: Optional[Tuple[float, float, float]] = None
    for sign, lo, hi in zip(directions[:, 0], lower, upper):
        if not np.isfinite(hi):
            continue

        def alpha(t: float) -> float:
            return float(_alpha(inst, np.array([[sign * t]]))[0])

        root = scipy.optimize.brentq(alpha, lo, hi, xtol=0.2 * width)
        r_lo, r_hi = max(root - 0.45 * width, 0.0), root + 0.45 * width
        if alpha(r_hi) < 0:
            r_hi = hi
        if best is None or r_hi < best[1]:
            best = (r_lo, r_hi, sign)
    lo, hi, sign = best
    delta = _embed(inst, np.array([[sign * hi]]))[0]
    return SRBracket(lower=lo, upper=hi, delta=delta)


def _bracket_2d(inst: ProblemInstance, bound: float, width: float, angles: int) -> SRBracket:
    theta = np.linspace(0.0, 2.0 * np.pi, angles, endpoint=False)
    directions = np.column_stack([np.cos(theta), np.sin(theta)])
    lower, upper = _radial_scan(inst, directions, bound)
    crossed = np.isfinite(upper)
    if not crossed.any():
        raise SearchBoundError(f"No instability found up to bound {bound:.6g}")
    theta, directions = theta[crossed], directions[crossed]
    lower, upper = _bisect(inst, directions, lower[crossed], upper[crossed], 0.25 * width)

    best = int(np.argmin(upper))
    center, step = theta[best], 2.0 * np.pi / angles
    best_lo, best_hi = lower[best], upper[best]
    while step > 1e-7:
        local = center + step * np.linspace(-1.0, 1.0, 21)
        dirs = np.column_stack([np.cos(local), np.sin(local)])
        lo = np.full(local.size, max(best_lo - 2.0 * width, 0.0))
        hi = np.full(local.size, best_hi + 2.0 * width)
        unstable_hi = _alpha(inst, hi[:, None] * dirs) >= 0
        stable_lo = _alpha(inst, lo[:, None] * dirs) < 0
        ok = unstable_hi & stable_lo
        if ok.any():
            lo, hi = _bisect(inst, dirs[ok], lo[ok], hi[ok], 0.25 * width)
            i = int(np.argmin(hi))
            if hi[i] < best_hi:
                center, best_lo, best_hi = local[ok][i], lo[i], hi[i]
        step /= 10.0

    delta = _embed(inst, best_hi * np.array([[np.cos(center), np.sin(center)]]))[0]
    logger.debug(f"2-D oracle bracket [{best_lo:.8g}, {best_hi:.8g}] at angle {center:.6g}")
    return SRBracket(lower=float(best_lo), upper=float(best_hi), delta=delta)
