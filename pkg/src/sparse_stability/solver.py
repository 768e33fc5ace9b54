"""Penalty-based gradient and damped-Newton descent on (g, omega), plus multistart."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import repeat
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
import scipy.linalg

from .config import config
from .crossing import Crossing, scan_single_column
from .errors import ConvergenceError, RankConditionError, StabilityRadiusError
from .matops import spectral_abscissa, unvec, vec
from .models import (
    DescentMode,
    IterationRecord,
    MultistartResult,
    Parametrization,
    SolveResult,
    StepRule,
    Termination,
    WeightSweepRow,
)
from .objective import GradientWorkspace, build_workspace, cost
from .problem import ProblemInstance, SupportReduction, WeightMatrix
from .sylvester import SearchPoint, SylvesterOperator, evaluate_z

logger = logging.getLogger(__name__)

_ROUNDING = 8 * np.finfo(float).eps


@dataclass
class SolverConfig:
    """Settings for one descent run and for multistart."""
    mode: DescentMode = DescentMode(config.DESCENT_MODE)
    w: float = config.PENALTY_WEIGHT
    eps: float = config.HESSIAN_EPS
    step_rule: StepRule = StepRule(config.STEP_RULE)
    initial_step: float = config.INITIAL_STEP
    shrink: float = config.STEP_SHRINK
    armijo_constant: float = config.ARMIJO_CONSTANT
    max_backtracks: int = config.MAX_BACKTRACKS
    grad_tol: float = config.GRAD_TOL
    max_iters: int = config.MAX_ITERS
    jitter_scale: float = config.JITTER_SCALE
    jitter_attempts: int = config.JITTER_ATTEMPTS
    seed: int = config.SEED
    multistart_count: int = config.MULTISTART_COUNT
    omega_zero_mode: bool = False
    jobs: int = 1
    alpha_tol: float = config.ALPHA_TOL
    rank_tol: float = config.RANK_TOL
    pinv_tol: float = config.PINV_TOL
    ill_conditioning_ratio: float = config.ILL_CONDITIONING_RATIO
    dedup_norm_tol: float = config.DEDUP_NORM_TOL
    dedup_omega_tol: float = config.DEDUP_OMEGA_TOL
    omega_zero_tol: float = config.OMEGA_ZERO_TOL
    cost_resolution: float = 1e-10
    weighted_reconstruction: bool = False
    frequency_points: int = config.FREQUENCY_POINTS
    frequency_span: float = config.FREQUENCY_SPAN

    @classmethod
    def from_config(cls) -> "SolverConfig":
        """Build from the global config, picking up environment overrides."""
        return cls(
            mode=DescentMode(config.DESCENT_MODE),
            w=config.PENALTY_WEIGHT,
            eps=config.HESSIAN_EPS,
            step_rule=StepRule(config.STEP_RULE),
            initial_step=config.INITIAL_STEP,
            shrink=config.STEP_SHRINK,
            armijo_constant=config.ARMIJO_CONSTANT,
            max_backtracks=config.MAX_BACKTRACKS,
            grad_tol=config.GRAD_TOL,
            max_iters=config.MAX_ITERS,
            jitter_scale=config.JITTER_SCALE,
            jitter_attempts=config.JITTER_ATTEMPTS,
            seed=config.SEED,
            multistart_count=config.MULTISTART_COUNT,
            jobs=config.JOBS,
            alpha_tol=config.ALPHA_TOL,
            rank_tol=config.RANK_TOL,
            pinv_tol=config.PINV_TOL,
            ill_conditioning_ratio=config.ILL_CONDITIONING_RATIO,
            dedup_norm_tol=config.DEDUP_NORM_TOL,
            dedup_omega_tol=config.DEDUP_OMEGA_TOL,
            omega_zero_tol=config.OMEGA_ZERO_TOL,
            frequency_points=config.FREQUENCY_POINTS,
            frequency_span=config.FREQUENCY_SPAN,
        )

    def validate(self) -> None:
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie strictly between 0 and 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.w < 1:
            raise ValueError("penalty weight w must be at least 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.multistart_count < 1:
            raise ValueError("multistart_count must be at least 1")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.frequency_points < 3:
            raise ValueError("frequency_points must be at least 3")
        if self.frequency_span <= 1:
            raise ValueError("frequency_span must exceed 1")


@dataclass
class _Outcome:
    point: SearchPoint
    trace: List[IterationRecord]
    termination: Termination
    grad_norm: float


@dataclass
class StartTask:
    """One multistart initializer with its own jitter stream."""
    parametrization: Parametrization
    g0: np.ndarray
    omega0: float
    seed: np.random.SeedSequence = field(repr=False)


def _weights_for(inst: ProblemInstance, cfg: SolverConfig) -> WeightMatrix:
    return WeightMatrix(cfg.w, inst.pattern)


def _evaluate(
    inst: ProblemInstance,
    z: np.ndarray,
    operator: SylvesterOperator,
    cfg: SolverConfig,
    weights: WeightMatrix,
) -> SearchPoint:
    return evaluate_z(
        inst,
        z,
        operator,
        cfg.rank_tol,
        cfg.pinv_tol,
        weights if cfg.weighted_reconstruction else None,
    )


def _well_conditioned(point: SearchPoint, cfg: SolverConfig) -> bool:
    return point.a3 and point.conditioning >= cfg.ill_conditioning_ratio


def _initial_point(
    inst: ProblemInstance,
    z: np.ndarray,
    operator: SylvesterOperator,
    cfg: SolverConfig,
    weights: WeightMatrix,
    rng: np.random.Generator,
) -> SearchPoint:
    """Evaluate z, nudging g until CX is comfortably full rank."""
    g_size = inst.m * operator.columns
    point = _evaluate(inst, z, operator, cfg, weights)
    attempts = 0
    while not _well_conditioned(point, cfg):
        if attempts >= cfg.jitter_attempts:
            raise RankConditionError(
                f"CX stayed rank deficient after {attempts} jitter attempts "
                f"(conditioning {point.conditioning:.3g})"
            )
        z = np.array(z, dtype=float)
        scale = cfg.jitter_scale * (1.0 + np.linalg.norm(z[:g_size]))
        z[:g_size] += rng.uniform(-scale, scale, g_size)
        attempts += 1
        logger.debug(f"Jitter attempt {attempts}: conditioning {point.conditioning:.3g}")
        point = _evaluate(inst, z, operator, cfg, weights)
    return point


def _newton_direction(
    workspace: GradientWorkspace, weights: WeightMatrix, eps: float, grad: np.ndarray
) -> np.ndarray:
    """Solve (Z W-bar Z^T + eps I) d = grad; fall back to the gradient."""
    H = workspace.gauss_newton(weights) + eps * np.eye(grad.size)
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), grad)
    except np.linalg.LinAlgError as e:
        logger.debug(f"Cholesky failed, using gradient direction: {e}")
        return grad


def _line_search(
    inst: ProblemInstance,
    cfg: SolverConfig,
    weights: WeightMatrix,
    operator: SylvesterOperator,
    point: SearchPoint,
    J: float,
    direction: np.ndarray,
    slope: float,
) -> Optional[Tuple[SearchPoint, float, float]]:
    """Backtrack from the initial step; return (point, cost, beta) or None."""
    beta = cfg.initial_step
    z = point.z
    for _ in range(cfg.max_backtracks):
        trial = _evaluate(inst, z - beta * direction, operator, cfg, weights)
        if _well_conditioned(trial, cfg):
            J_trial = cost(trial, weights)
            if np.isfinite(J_trial):
                if cfg.step_rule is StepRule.ARMIJO:
                    accepted = J_trial <= J - cfg.armijo_constant * beta * slope
                else:
                    accepted = J_trial < J
                if accepted:
                    return trial, J_trial, beta
        beta *= cfg.shrink
    return None


def _resolution_step(
    inst: ProblemInstance,
    cfg: SolverConfig,
    weights: WeightMatrix,
    operator: SylvesterOperator,
    point: SearchPoint,
    J: float,
    direction: np.ndarray,
    grad_norm: float,
) -> Optional[Tuple[SearchPoint, float, float]]:
    """Full step for when cost changes are below rounding.

    The step is taken if the cost stays within rounding of J and the gradient
    norm drops.
    """
    trial = _evaluate(inst, point.z - cfg.initial_step * direction, operator, cfg, weights)
    if not _well_conditioned(trial, cfg):
        return None
    J_trial = cost(trial, weights)
    if not J_trial <= J + _ROUNDING * (1.0 + abs(J)):
        return None
    trial_grad = build_workspace(inst, trial, operator).gradient(weights)
    if np.linalg.norm(trial_grad) >= grad_norm:
        return None
    return trial, J_trial, cfg.initial_step


def _descend(
    inst: ProblemInstance,
    cfg: SolverConfig,
    z0: np.ndarray,
    operator: SylvesterOperator,
    rng: np.random.Generator,
) -> _Outcome:
    weights = _weights_for(inst, cfg)
    point = _initial_point(inst, z0, operator, cfg, weights, rng)
    trace: List[IterationRecord] = []
    beta = 0.0
    termination = Termination.MAX_ITERATIONS
    grad_norm = float("inf")

    for iteration in range(cfg.max_iters + 1):
        J = cost(point, weights)
        if not np.isfinite(J):
            raise ConvergenceError(f"Non-finite cost at iteration {iteration}", trace)
        workspace = build_workspace(inst, point, operator)
        grad = workspace.gradient(weights)
        grad_norm = float(np.linalg.norm(grad))
        trace.append(
            IterationRecord(
                iteration=iteration,
                cost=J,
                grad_norm=grad_norm,
                omega=point.omega,
                alpha=spectral_abscissa(inst.perturbed_matrix(point.delta)),
                beta=beta,
                delta_fnorm=float(np.linalg.norm(point.delta)),
            )
        )
        if grad_norm <= cfg.grad_tol * (1.0 + abs(J)):
            termination = Termination.GRADIENT_TOLERANCE
            break
        if iteration == cfg.max_iters:
            termination = Termination.MAX_ITERATIONS
            break

        if cfg.mode is DescentMode.NEWTON:
            direction = _newton_direction(workspace, weights, cfg.eps, grad)
        else:
            direction = grad
        slope = float(grad @ direction)
        if slope <= 0:
            direction, slope = grad, grad_norm**2

        step = _line_search(inst, cfg, weights, operator, point, J, direction, slope)
        if step is None:
            if slope > cfg.cost_resolution * (1.0 + abs(J)):
                termination = Termination.LINE_SEARCH_FAILED
                break
            step = _resolution_step(
                inst, cfg, weights, operator, point, J, direction, grad_norm
            )
            if step is None:
                termination = Termination.COST_RESOLUTION
                break
        point, _, beta = step

    logger.debug(
        f"Descent stopped after {len(trace) - 1} iterations: {termination.value}, "
        f"|grad| = {grad_norm:.3e}"
    )
    return _Outcome(point, trace, termination, grad_norm)


def _finalize(
    inst: ProblemInstance,
    reduction: SupportReduction,
    outcome: _Outcome,
    cfg: SolverConfig,
    parametrization: Parametrization,
) -> SolveResult:
    point = outcome.point
    delta = reduction.expand_delta(point.delta)
    sparse, error = inst.project_sparse(delta)
    perturbed = inst.perturbed_matrix(delta)
    alpha = spectral_abscissa(perturbed)
    alpha_sparse = spectral_abscissa(inst.perturbed_matrix(sparse))
    x = point.eigenvector
    x = x / np.linalg.norm(x)
    eigen_residual = float(np.linalg.norm(perturbed @ x - point.eigenvalue * x))
    converged = outcome.termination.converged
    return SolveResult(
        delta=delta,
        omega=point.omega,
        X=point.X,
        g=vec(reduction.expand_g(point.G)),
        trace=outcome.trace,
        termination=outcome.termination,
        parametrization=parametrization,
        sparse_delta=sparse,
        sparsity_error=error,
        alpha=alpha,
        alpha_sparse=alpha_sparse,
        valid_local_min=converged and abs(alpha) <= cfg.alpha_tol,
        valid_sparse=converged and abs(alpha_sparse) <= cfg.alpha_tol,
        eigen_residual=eigen_residual,
        grad_norm=outcome.grad_norm,
    )


def _mirror(
    inst: ProblemInstance,
    point: SearchPoint,
    operator: SylvesterOperator,
    cfg: SolverConfig,
) -> SearchPoint:
    """Same Delta with omega >= 0: (G diag(1, -1), -omega)."""
    G = point.G * np.array([1.0, -1.0])
    z = np.append(vec(G), -point.omega)
    return _evaluate(inst, z, operator, cfg, _weights_for(inst, cfg))


def solve(
    inst: ProblemInstance,
    cfg: SolverConfig,
    g0: np.ndarray,
    omega0: float,
    rng: Optional[np.random.Generator] = None,
) -> SolveResult:
    """Descend from (g0, omega0) to a stationary point of the penalized cost.

    The descent runs on the problem restricted to the pattern's support; the
    reported Delta has the full m x p shape. When the restricted problem has
    fewer than two outputs, CX can never have two independent columns. The
    real variant then runs from the first column of g0, complex-pair
    crossings are found by a frequency scan, and the smallest valid result
    wins.

    Args:
        inst: The problem.
        cfg: Solver settings.
        g0: Initial vec(G), length 2 m.
        omega0: Initial frequency.
        rng: Jitter stream; seeded from cfg.seed when omitted.

    Returns:
        The final point with its trace and validity flags.

    Raises:
        UnstableSystemError: If A is not stable.
        RankConditionError: If jitter cannot make CX full rank.
        ConvergenceError: If the cost becomes non-finite.
    """
    cfg.validate()
    inst.require_stable()
    rng = rng or np.random.default_rng(cfg.seed)
    G0 = unvec(np.asarray(g0, dtype=float), inst.m, 2)
    reduction = inst.restrict_to_support()
    reduced = reduction.reduced
    if reduced.p < 2:
        logger.info("Pattern support has a single column; scanning frequencies")
        real = solve_omega_zero(inst, cfg, G0[:, 0], rng)
        valid = [r for r in solve_single_column(inst, cfg) if r.valid_local_min]
        if real.valid_local_min:
            valid.append(real)
        return min(valid, key=lambda r: r.fnorm) if valid else real

    operator = SylvesterOperator(reduced.A, columns=2)
    z0 = np.append(vec(reduction.restrict_g(G0)), float(omega0))
    outcome = _descend(reduced, cfg, z0, operator, rng)
    if outcome.point.omega < 0:
        outcome.point = _mirror(reduced, outcome.point, operator, cfg)
    return _finalize(inst, reduction, outcome, cfg, Parametrization.COMPLEX_PAIR)


def solve_omega_zero(
    inst: ProblemInstance,
    cfg: SolverConfig,
    g0: np.ndarray,
    rng: Optional[np.random.Generator] = None,
) -> SolveResult:
    """Descent with a real eigenvector at eigenvalue zero: A X = -B G, one column.

    Args:
        inst: A stable problem
        cfg: Solver settings
        g0: Initial G, length m
        rng: Generator for rank-failure jitter; seeded from cfg when omitted

    Returns:
        The SolveResult, with omega fixed at zero

    Raises:
        ValueError: If g0 does not have length m
        UnstableSystemError: If A is not stable
    """
    cfg.validate()
    inst.require_stable()
    rng = rng or np.random.default_rng(cfg.seed)
    g0 = np.asarray(g0, dtype=float).ravel()
    if g0.size != inst.m:
        raise ValueError(f"g0 must have length {inst.m}, got {g0.size}")
    reduction = inst.restrict_to_support()
    reduced = reduction.reduced
    operator = SylvesterOperator(reduced.A, columns=1)
    outcome = _descend(reduced, cfg, reduction.restrict_g(g0), operator, rng)
    return _finalize(inst, reduction, outcome, cfg, Parametrization.OMEGA_ZERO)


def _omega_range(A: np.ndarray) -> np.ndarray:
    eigenvalues = scipy.linalg.eigvals(A)
    scales = np.abs(eigenvalues.imag)
    scales = scales[scales > 0]
    if scales.size == 0:
        scales = np.abs(eigenvalues)
    return np.unique(np.round(scales, 12))


def _crossing_result(
    inst: ProblemInstance,
    reduction: SupportReduction,
    crossing: Crossing,
    cfg: SolverConfig,
) -> SolveResult:
    reduced = reduction.reduced
    delta = reduction.expand_delta(crossing.delta)
    sparse, error = inst.project_sparse(delta)
    perturbed = inst.perturbed_matrix(delta)
    alpha = spectral_abscissa(perturbed)
    alpha_sparse = spectral_abscissa(inst.perturbed_matrix(sparse))
    x = crossing.x / np.linalg.norm(crossing.x)
    X = np.column_stack([x.real, x.imag])
    G = crossing.delta @ (reduced.C @ X)
    J = 0.5 * crossing.fnorm**2
    slope = abs(crossing.slope)
    if slope <= cfg.grad_tol * (1.0 + J):
        termination = Termination.GRADIENT_TOLERANCE
    else:
        termination = Termination.COST_RESOLUTION
    converged = termination.converged
    record = IterationRecord(
        iteration=0,
        cost=J,
        grad_norm=slope,
        omega=crossing.omega,
        alpha=alpha,
        beta=0.0,
        delta_fnorm=crossing.fnorm,
    )
    return SolveResult(
        delta=delta,
        omega=crossing.omega,
        X=X,
        g=vec(reduction.expand_g(G)),
        trace=[record],
        termination=termination,
        parametrization=Parametrization.COMPLEX_PAIR,
        sparse_delta=sparse,
        sparsity_error=error,
        alpha=alpha,
        alpha_sparse=alpha_sparse,
        valid_local_min=converged and abs(alpha) <= cfg.alpha_tol,
        valid_sparse=converged and abs(alpha_sparse) <= cfg.alpha_tol,
        eigen_residual=float(np.linalg.norm(perturbed @ x - 1j * crossing.omega * x)),
        grad_norm=slope,
    )


def solve_single_column(inst: ProblemInstance, cfg: SolverConfig) -> List[SolveResult]:
    """Complex-pair crossings of a pattern whose support is one column of Delta.

    Scans cfg.frequency_points log-spaced frequencies spanning a factor
    cfg.frequency_span below and above the imaginary parts of A's eigenvalues.

    Args:
        inst: The problem; its pattern support must have a single column.
        cfg: Solver settings.

    Returns:
        One result per crossing found, smallest norm first. Empty when the
        pattern admits no complex-pair crossing.

    Raises:
        ValueError: If the support has more than one column.
    """
    cfg.validate()
    inst.require_stable()
    reduction = inst.restrict_to_support()
    reduced = reduction.reduced
    if reduced.p != 1:
        raise ValueError(f"Pattern support has {reduced.p} columns, expected 1")
    anchors = _omega_range(reduced.A)
    omegas = np.geomspace(
        anchors.min() / cfg.frequency_span,
        anchors.max() * cfg.frequency_span,
        cfg.frequency_points,
    )
    crossings = scan_single_column(reduced, omegas)
    return [_crossing_result(inst, reduction, c, cfg) for c in crossings]


def sample_initializers(
    inst: ProblemInstance,
    cfg: SolverConfig,
    complex_pair: bool = True,
    omega_zero: bool = False,
) -> List[StartTask]:
    """Draw every multistart initializer up front from the configured seed.

    g entries are standard normal over ||B||_F. omega starts at each distinct
    |Im(lambda)| of A, then log-uniform over [0.1 min, 10 max] of those values.

    Args:
        inst: The problem
        cfg: Supplies the seed and the number of starts
        complex_pair: Draw starts for the complex-pair search
        omega_zero: Draw starts for the real variant

    Returns:
        One StartTask per start, each with its own child seed
    """
    root = np.random.SeedSequence(cfg.seed)
    draw_seed, *child_seeds = root.spawn(1 + 2 * cfg.multistart_count)
    rng = np.random.default_rng(draw_seed)
    scale = 1.0 / max(np.linalg.norm(inst.B), np.finfo(float).tiny)
    anchors = _omega_range(inst.A)
    lo, hi = 0.1 * anchors.min(), 10.0 * anchors.max()

    tasks: List[StartTask] = []
    for i in range(cfg.multistart_count):
        g = rng.standard_normal(2 * inst.m) * scale
        if i < anchors.size:
            omega = float(anchors[i])
        else:
            omega = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        if complex_pair:
            tasks.append(StartTask(Parametrization.COMPLEX_PAIR, g, omega, child_seeds[2 * i]))
        if omega_zero:
            tasks.append(
                StartTask(Parametrization.OMEGA_ZERO, g[: inst.m], 0.0, child_seeds[2 * i + 1])
            )
    return tasks


def run_start(
    inst: ProblemInstance, cfg: SolverConfig, task: StartTask
) -> Tuple[Optional[SolveResult], Optional[str]]:
    """Run one initializer; errors are returned as messages, not raised."""
    rng = np.random.default_rng(task.seed)
    try:
        if task.parametrization is Parametrization.OMEGA_ZERO:
            return solve_omega_zero(inst, cfg, task.g0, rng), None
        result = solve(inst, cfg, task.g0, task.omega0, rng)
        if result.converged and abs(result.omega) < cfg.omega_zero_tol:
            G = unvec(result.g, inst.m, result.X.shape[1])
            logger.debug(f"omega = {result.omega:.3g} is near zero; rerunning the real variant")
            rerun = solve_omega_zero(inst, cfg, G[:, 0], rng)
            if rerun.valid_local_min and (
                not result.valid_local_min or rerun.fnorm < result.fnorm
            ):
                return rerun, None
        return result, None
    except (StabilityRadiusError, np.linalg.LinAlgError) as e:
        return None, f"{task.parametrization.value} start (omega0={task.omega0:.4g}): {e}"


def _scan_outcomes(
    inst: ProblemInstance, cfg: SolverConfig
) -> List[Tuple[Optional[SolveResult], Optional[str]]]:
    try:
        results = solve_single_column(inst, cfg)
    except (StabilityRadiusError, np.linalg.LinAlgError) as e:
        return [(None, f"frequency scan: {e}")]
    if not results:
        return [(None, "frequency scan: no complex-pair crossing")]
    return [(result, None) for result in results]


def _deduplicate(results: Sequence[SolveResult], cfg: SolverConfig) -> List[SolveResult]:
    distinct: List[SolveResult] = []
    for result in sorted(results, key=lambda r: r.fnorm):
        duplicate = any(
            abs(result.fnorm - kept.fnorm) < cfg.dedup_norm_tol
            and abs(result.omega - kept.omega) < cfg.dedup_omega_tol
            for kept in distinct
        )
        if not duplicate:
            distinct.append(result)
    return distinct


def multistart(
    inst: ProblemInstance,
    cfg: SolverConfig,
    warm_start: Optional[Tuple[np.ndarray, float, Parametrization]] = None,
) -> MultistartResult:
    """Run descents from many initializers and keep the distinct stationary points.

    The reported radius is the smallest norm among valid minima, an upper
    bound on the true stability radius. With no valid minimum the result
    carries no certificate. Patterns whose support is a single column run the
    real variant from every initializer plus one frequency scan for
    complex-pair crossings.

    Args:
        inst: The problem.
        cfg: Solver settings; cfg.jobs > 1 spreads starts over processes.
        warm_start: Optional (g, omega, parametrization) run before the
            seeded starts.

    Returns:
        Distinct converged points sorted by norm, the best valid one, and the
        failure messages of the other starts.

    Raises:
        UnstableSystemError: If A is not stable.
    """
    cfg.validate()
    inst.require_stable()
    reduction = inst.restrict_to_support()
    complex_pair = reduction.reduced.p >= 2
    omega_zero = cfg.omega_zero_mode or not complex_pair
    tasks = sample_initializers(inst, cfg, complex_pair, omega_zero)
    if warm_start is not None:
        g, omega, parametrization = warm_start
        if parametrization is Parametrization.COMPLEX_PAIR and not complex_pair:
            parametrization, g = Parametrization.OMEGA_ZERO, np.asarray(g)[: inst.m]
        seed = np.random.SeedSequence(cfg.seed).spawn(2 + 2 * cfg.multistart_count)[-1]
        tasks.insert(0, StartTask(parametrization, np.asarray(g), omega, seed))

    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as executor:
            outcomes = list(executor.map(run_start, repeat(inst), repeat(cfg), tasks))
    else:
        outcomes = [run_start(inst, cfg, task) for task in tasks]
    runs = len(tasks)
    if not complex_pair:
        outcomes.extend(_scan_outcomes(inst, cfg))
        runs += 1

    converged: List[SolveResult] = []
    failures: List[str] = []
    for result, error in outcomes:
        if error is not None:
            logger.debug(f"Start failed: {error}")
            failures.append(error)
        elif not result.converged:
            failures.append(
                f"{result.parametrization.value} start stopped: {result.termination.value}"
            )
        else:
            converged.append(result)

    points = _deduplicate(converged, cfg)
    valid = [r for r in points if r.valid_local_min]
    best = min(valid, key=lambda r: r.fnorm) if valid else None
    logger.info(
        f"Multistart: {runs} runs, {len(converged)} converged, "
        f"{len(points)} distinct, {len(valid)} valid"
    )
    if best is None:
        logger.warning(
            "No valid local minimum found; no certificate "
            "(the pattern may admit no destabilizing perturbation)"
        )
    return MultistartResult(points=points, best=best, runs=runs, failures=failures)


def weight_sweep(
    inst: ProblemInstance, cfg: SolverConfig, weights: Sequence[float]
) -> List[WeightSweepRow]:
    """Multistart for each penalty weight, warm-starting from the previous best.

    Args:
        inst: The problem
        cfg: Base settings; only w changes between rows
        weights: Penalty weights in the order they are run

    Returns:
        One WeightSweepRow per weight; failed weights carry the error message

    Raises:
        ValueError: If weights is empty
    """
    if not weights:
        raise ValueError("weights must be nonempty")
    rows: List[WeightSweepRow] = []
    warm: Optional[Tuple[np.ndarray, float, Parametrization]] = None
    for w in weights:
        try:
            result = multistart(inst, replace(cfg, w=float(w)), warm)
        except StabilityRadiusError as e:
            logger.error(f"Weight {w} failed: {e}")
            rows.append(WeightSweepRow(float(w), None, None, None, None, False, str(e)))
            continue
        best = result.best
        if best is None:
            rows.append(
                WeightSweepRow(float(w), None, None, None, None, False, "no valid minimum")
            )
            continue
        rows.append(
            WeightSweepRow(
                w=float(w),
                delta=best.delta,
                fnorm=best.fnorm,
                omega=best.omega,
                sparsity_error=best.sparsity_error,
                valid=True,
            )
        )
        warm = (best.g, best.omega, best.parametrization)
    return rows
