"""CSV and plain-text writers for run artifacts."""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence
import logging

import numpy as np

from .matops import vec
from .models import (
    EdgeRanking,
    IterationRecord,
    MultistartResult,
    OptimalityReport,
    RunManifest,
    SolveResult,
    SpectralCloud,
    WeightSweepRow,
)

logger = logging.getLogger(__name__)


def fmt(value: Any) -> str:
    """Locale-independent text for one cell: floats use 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        return f"{format(value.real, '.17g')}{format(value.imag, '+.17g')}j"
    return str(value)


def fmt_matrix(M: Optional[np.ndarray]) -> str:
    """Column-major entries joined by ';'."""
    if M is None:
        return ""
    return ";".join(fmt(v) for v in vec(np.asarray(M)))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    logger.debug(f"Wrote {path}")


def _write_pairs(path: Path, pairs: Dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for key, value in pairs.items():
            f.write(f"{key}: {fmt(value)}\n")
    logger.debug(f"Wrote {path}")


TRACE_COLUMNS = ["iter", "cost", "grad_norm", "omega", "alpha", "beta", "delta_fnorm"]


def write_trace(path: Path, trace: List[IterationRecord]) -> None:
    _write_csv(path, TRACE_COLUMNS, ([r.to_dict()[c] for c in TRACE_COLUMNS] for r in trace))


def write_stationary_points(path: Path, points: List[SolveResult]) -> None:
    header = [
        "rank", "fnorm", "sparse_fnorm", "omega", "alpha", "alpha_sparse",
        "valid_local_min", "valid_sparse", "sparsity_error", "termination",
        "parametrization", "iterations", "delta",
    ]
    rows = (
        [
            i + 1, r.fnorm, r.sparse_fnorm, r.omega, r.alpha, r.alpha_sparse,
            r.valid_local_min, r.valid_sparse, r.sparsity_error, r.termination.value,
            r.parametrization.value, r.iterations, fmt_matrix(r.delta),
        ]
        for i, r in enumerate(points)
    )
    _write_csv(path, header, rows)


def write_summary(path: Path, result: MultistartResult) -> None:
    """Flat key: value summary of the best valid minimum."""
    best = result.best
    pairs: Dict[str, Any] = {
        "certificate": result.has_certificate,
        "radius": result.radius,
        "runs": result.runs,
        "stationary_points": len(result.points),
        "valid_points": len(result.valid_points),
        "failures": len(result.failures),
    }
    if best is not None:
        pairs.update(
            {
                "omega": best.omega,
                "fnorm": best.fnorm,
                "sparse_fnorm": best.sparse_fnorm,
                "sparsity_error": best.sparsity_error,
                "alpha": best.alpha,
                "alpha_sparse": best.alpha_sparse,
                "valid_local_min": best.valid_local_min,
                "valid_sparse": best.valid_sparse,
                "eigen_residual": best.eigen_residual,
                "termination": best.termination.value,
                "parametrization": best.parametrization.value,
                "delta": fmt_matrix(best.delta),
                "sparse_delta": fmt_matrix(best.sparse_delta),
                "eigenvector": ";".join(fmt(v) for v in best.eigenvector),
            }
        )
    _write_pairs(path, pairs)


def write_optimality(path: Path, report: OptimalityReport) -> None:
    pairs = report.to_dict()
    pairs["projected_hessian_spectrum"] = ";".join(
        fmt(v) for v in report.projected_hessian_spectrum
    )
    for i, warning in enumerate(report.warnings):
        pairs[f"warning_{i + 1}"] = warning
    _write_pairs(path, pairs)


def write_sweep(path: Path, rows: List[WeightSweepRow]) -> None:
    header = ["w", "fnorm", "omega", "E", "valid", "delta", "error"]
    _write_csv(
        path,
        header,
        (
            [r.w, r.fnorm, r.omega, r.sparsity_error, r.valid, fmt_matrix(r.delta), r.error]
            for r in rows
        ),
    )


def write_cloud(path: Path, cloud: SpectralCloud) -> None:
    _write_csv(
        path,
        ["re", "im", "delta_fnorm"],
        zip(cloud.points.real, cloud.points.imag, cloud.norms),
    )


def _entries(entries) -> str:
    return ";".join(f"({i + 1},{j + 1})" for i, j in entries)


def write_ranking(path: Path, ranking: EdgeRanking) -> None:
    """Entries are written 1-based."""
    group_of = {
        id(result): g + 1 for g, group in enumerate(ranking.tie_groups) for result in group
    }
    rows = (
        [
            _entries(r.entries),
            r.sr,
            r.omega,
            ";".join(fmt(v) for v in r.perturbation_values),
            group_of[id(r)],
        ]
        for r in ranking.results
    )
    _write_csv(
        path, ["pattern_entries", "sr", "omega_hat", "perturbation_entries", "tie_group"], rows
    )


def write_manifest(path: Path, manifest: RunManifest) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_manifest(path: Path) -> RunManifest:
    return RunManifest.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
