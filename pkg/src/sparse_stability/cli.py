"""Command-line interface for the stability radius solver."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .config import config
from .errors import (
    NotBoundaryPointError,
    ProblemFormatError,
    StabilityRadiusError,
    UnstableSystemError,
)
from .models import DescentMode, MultistartResult, RunManifest, StepRule
from .networks import EdgePatternQuery, EntryClass, NetworkSpec, Topology, rank_critical_edges
from .problem_file import load_delta, load_problem
from .reports import (
    read_manifest,
    write_cloud,
    write_manifest,
    write_optimality,
    write_ranking,
    write_stationary_points,
    write_summary,
    write_sweep,
    write_trace,
)
from .solver import SolverConfig, multistart, solve, solve_omega_zero, weight_sweep
from .verify import Thresholds, certify, sample_spectral_set

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3
EXIT_FORMAT = 64
EXIT_UNSTABLE = 65

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False) -> None:
    """Setup logging configuration."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {e}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--out', type=Path, default=config.OUTPUT_DIR,
                        help=f'Output directory (default: {config.OUTPUT_DIR})')
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable verbose logging')


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--mode', choices=[m.value for m in DescentMode], default=None,
                        help=f'Descent direction (default: {config.DESCENT_MODE})')
    parser.add_argument('--step-rule', choices=[r.value for r in StepRule], default=None,
                        help=f'Line search acceptance rule (default: {config.STEP_RULE})')
    parser.add_argument('--w', type=float, default=None,
                        help=f'Penalty weight on forced zeros (default: {config.PENALTY_WEIGHT})')
    parser.add_argument('--eps', type=float, default=None,
                        help=f'Newton regularization (default: {config.HESSIAN_EPS})')
    parser.add_argument('--starts', type=int, default=None,
                        help=f'Number of multistart initializers (default: {config.MULTISTART_COUNT})')
    parser.add_argument('--seed', type=int, default=None,
                        help=f'Random seed (default: {config.SEED})')
    parser.add_argument('--max-iters', type=int, default=None,
                        help=f'Iteration budget per descent (default: {config.MAX_ITERS})')
    parser.add_argument('--grad-tol', type=float, default=None,
                        help=f'Relative gradient tolerance (default: {config.GRAD_TOL})')
    parser.add_argument('--jobs', type=int, default=None,
                        help=f'Worker processes (default: CPU count, {config.JOBS})')
    parser.add_argument('--omega-zero', action='store_true',
                        help='Also run the real-eigenvector variant at omega = 0')
    parser.add_argument('--reconstruction', choices=['minnorm', 'weighted'], default='minnorm',
                        help='Delta from G: plain minimum norm or weighted by the penalty')


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    cfg = SolverConfig.from_config()
    overrides: Dict[str, Any] = {
        'mode': DescentMode(args.mode) if args.mode else None,
        'step_rule': StepRule(args.step_rule) if args.step_rule else None,
        'w': args.w,
        'eps': args.eps,
        'multistart_count': args.starts,
        'seed': args.seed,
        'max_iters': args.max_iters,
        'grad_tol': args.grad_tol,
        'jobs': args.jobs,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    cfg = replace(
        cfg,
        omega_zero_mode=args.omega_zero,
        weighted_reconstruction=args.reconstruction == 'weighted',
    )
    cfg.validate()
    return cfg


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    skip = {'func', 'command', 'out', 'verbose', 'problem', 'delta', 'manifest'}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None or value is False:
            continue
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _prepare_output(args: argparse.Namespace, argv: List[str], inputs: Dict[str, Optional[str]]) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        subcommand=args.command,
        inputs=inputs,
        overrides=_overrides(args),
        seed=getattr(args, 'seed', None),
        output_dir=str(out),
        tool_version=__version__,
        argv=list(argv),
    )
    write_manifest(out / 'manifest.json', manifest)
    return out


def _single_start(inst, cfg: SolverConfig, args: argparse.Namespace) -> MultistartResult:
    """Run one descent from --g0/--omega0 and wrap it like a multistart result."""
    rng = np.random.default_rng(cfg.seed)
    g0 = np.asarray(args.g0 if args.g0 is not None else np.ones(2 * inst.m), dtype=float)
    if args.omega0 is None and g0.size == inst.m:
        result = solve_omega_zero(inst, cfg, g0, rng)
    else:
        omega0 = args.omega0 if args.omega0 is not None else 1.0
        result = solve(inst, cfg, g0, omega0, rng)
    points = [result] if result.converged else []
    failures = [] if result.converged else [f"stopped: {result.termination.value}"]
    best = result if result.valid_local_min else None
    return MultistartResult(points=points, best=best, runs=1, failures=failures)


def solve_command(args: argparse.Namespace, argv: List[str]) -> int:
    """Search for the stability radius and write summary, trace and optimality report."""
    inst = load_problem(args.problem)
    cfg = _solver_config(args)
    inst.require_stable()
    out = _prepare_output(args, argv, {'problem': str(args.problem)})

    if args.g0 is not None or args.omega0 is not None:
        result = _single_start(inst, cfg, args)
    else:
        result = multistart(inst, cfg)

    write_stationary_points(out / 'stationary_points.csv', result.points)
    write_summary(out / 'summary.txt', result)
    shown = result.best or (result.points[0] if result.points else None)
    write_trace(out / 'trace.csv', shown.trace if shown else [])

    if result.best is None:
        if result.points:
            logger.error("Stationary points found, but none is a valid minimum (alpha != 0)")
            return EXIT_INVALID
        logger.error("No valid minimum: no start converged")
        return EXIT_NO_CONVERGENCE

    best = result.best
    try:
        report = certify(inst, best.delta, best.omega)
        write_optimality(out / 'optimality.txt', report)
    except NotBoundaryPointError as e:
        logger.warning(f"Sparsified minimum could not be certified: {e}")
    logger.info(f"Stability radius <= {best.fnorm:.6g} at omega = {best.omega:.6g}")
    return EXIT_OK


def verify_command(args: argparse.Namespace, argv: List[str]) -> int:
    """Certify a given perturbation against the local optimality conditions."""
    inst = load_problem(args.problem)
    delta = load_delta(args.delta, inst.m, inst.p)
    thresholds = replace(
        Thresholds.from_config(),
        **{
            k: v
            for k, v in {
                'eig_tol': args.eig_tol,
                'stationarity_tol': args.stationarity_tol,
                'realness_tol': args.realness_tol,
                'alpha_tol': args.alpha_tol,
            }.items()
            if v is not None
        },
    )
    out = _prepare_output(args, argv, {'problem': str(args.problem), 'delta': str(args.delta)})
    report = certify(inst, delta, args.omega, thresholds)
    write_optimality(out / 'optimality.txt', report)
    if not report.passed:
        logger.error("Optimality checks failed; see optimality.txt")
        return EXIT_FAILED_CHECKS
    logger.info("All optimality checks passed")
    return EXIT_OK


def sweep_command(args: argparse.Namespace, argv: List[str]) -> int:
    """Multistart for each penalty weight; writes sweep.csv."""
    inst = load_problem(args.problem)
    cfg = _solver_config(args)
    inst.require_stable()
    out = _prepare_output(args, argv, {'problem': str(args.problem)})
    rows = weight_sweep(inst, cfg, args.weights)
    write_sweep(out / 'sweep.csv', rows)
    if not all(r.valid for r in rows):
        logger.error(f"{sum(not r.valid for r in rows)} of {len(rows)} weights found no valid minimum")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def spectral_set_command(args: argparse.Namespace, argv: List[str]) -> int:
    """Sample the spectral value set at radius eta; writes cloud.csv."""
    inst = load_problem(args.problem)
    out = _prepare_output(args, argv, {'problem': str(args.problem)})
    cloud = sample_spectral_set(
        inst, args.eta, args.strategy, args.samples, args.levels,
        args.seed if args.seed is not None else config.SEED,
    )
    write_cloud(out / 'cloud.csv', cloud)
    logger.info(f"{cloud.samples} samples; max real part {cloud.max_real:.6g}")
    return EXIT_OK


def network_command(args: argparse.Namespace, argv: List[str]) -> int:
    """Rank the perturbation patterns of a line or circle network; writes ranking.csv."""
    spec = NetworkSpec(Topology(args.topology), args.n, args.self_weight, args.edge_weight)
    query = EdgePatternQuery(args.budget, EntryClass(args.entry_class))
    cfg = _solver_config(args)
    if args.starts is None:
        cfg = replace(cfg, multistart_count=config.NETWORK_STARTS)
    out = _prepare_output(args, argv, {})
    ranking = rank_critical_edges(spec, query, cfg, jobs=cfg.jobs, tie_tol=args.tie_tol)
    write_ranking(out / 'ranking.csv', ranking)
    if not ranking.results:
        logger.error("No pattern produced a valid minimum")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def rerun_command(args: argparse.Namespace, argv: List[str]) -> int:
    """Re-execute the invocation recorded in a manifest."""
    manifest = read_manifest(args.manifest)
    recorded = list(manifest.argv)
    if args.out is not None:
        recorded += ['--out', str(args.out)]
    logger.info(f"Re-running: {' '.join(recorded)}")
    return main(recorded)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='sparse-sr', description='Stability radius of sparse LTI systems'
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve', help='Search for the stability radius')
    p.add_argument('problem', type=Path, help='JSON problem file with A, B, C, S')
    _add_solver_flags(p)
    p.add_argument('--omega0', type=float, default=None,
                   help='Initial omega for a single descent instead of multistart')
    p.add_argument('--g0', type=_float_list, default=None,
                   help='Initial vec(G) as a comma list (length 2m, or m for omega = 0)')
    _add_common(p)
    p.set_defaults(func=solve_command)

    p = sub.add_parser('verify', help='Certify a perturbation')
    p.add_argument('problem', type=Path)
    p.add_argument('--delta', type=Path, required=True, help='JSON file with key "Delta"')
    p.add_argument('--omega', type=float, required=True)
    p.add_argument('--eig-tol', type=float, default=None)
    p.add_argument('--stationarity-tol', type=float, default=None)
    p.add_argument('--realness-tol', type=float, default=None)
    p.add_argument('--alpha-tol', type=float, default=None)
    _add_common(p)
    p.set_defaults(func=verify_command)

    p = sub.add_parser('sweep', help='Solve for several penalty weights')
    p.add_argument('problem', type=Path)
    p.add_argument('--weights', type=_float_list, required=True, help='Comma list, e.g. 5,10,20')
    _add_solver_flags(p)
    _add_common(p)
    p.set_defaults(func=sweep_command)

    p = sub.add_parser('spectral-set', help='Sample the spectral value set')
    p.add_argument('problem', type=Path)
    p.add_argument('--eta', type=float, required=True)
    p.add_argument('--strategy', choices=['grid', 'random', 'shell'], default='grid')
    p.add_argument('--samples', type=int, default=config.SPECTRAL_SAMPLES)
    p.add_argument('--levels', type=int, default=config.RADIAL_LEVELS)
    p.add_argument('--seed', type=int, default=None)
    _add_common(p)
    p.set_defaults(func=spectral_set_command)

    p = sub.add_parser('network', help='Rank critical edges of a line or circle network')
    p.add_argument('topology', choices=[t.value for t in Topology])
    p.add_argument('--n', type=int, required=True, help='Number of nodes')
    p.add_argument('--budget', type=int, default=1, help='Entries perturbed at once')
    p.add_argument('--class', dest='entry_class', choices=[c.value for c in EntryClass],
                   default=EntryClass.ANY.value)
    p.add_argument('--self-weight', type=float, default=-2.5)
    p.add_argument('--edge-weight', type=float, default=1.0)
    p.add_argument('--tie-tol', type=float, default=config.TIE_TOL)
    _add_solver_flags(p)
    _add_common(p)
    p.set_defaults(func=network_command)

    p = sub.add_parser('rerun', help='Reproduce a run from its manifest.json')
    p.add_argument('manifest', type=Path)
    p.add_argument('--out', type=Path, default=None)
    p.add_argument('--verbose', '-v', action='store_true')
    p.set_defaults(func=rerun_command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    try:
        config.validate()
        return args.func(args, argv)
    except ProblemFormatError as e:
        logging.error(f"Problem file error: {e}")
        return EXIT_FORMAT
    except UnstableSystemError as e:
        logging.error(f"Assumption violated: {e}")
        return EXIT_UNSTABLE
    except NotBoundaryPointError as e:
        logging.error(f"Not a boundary point: {e}")
        return EXIT_INVALID
    except StabilityRadiusError as e:
        logging.error(f"No valid minimum: {e}")
        return EXIT_NO_CONVERGENCE
    except ValueError as e:
        logging.error(f"Invalid argument: {e}")
        return EXIT_FORMAT


def run() -> None:
    sys.exit(main())


if __name__ == '__main__':
    run()
