"""JSON problem and perturbation files."""

import json
from pathlib import Path
from typing import Any, List, Optional, Tuple
import logging

import numpy as np

from .errors import ProblemFormatError
from .problem import ProblemInstance, SparsityPattern

logger = logging.getLogger(__name__)

MATRIX_KEYS = ("A", "B", "C")


def _position(text: str, offset: int) -> Tuple[int, int]:
    """1-based line and column of a character offset."""
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def _row_offset(text: str, key: str, row: int) -> Optional[int]:
    """Offset of the opening bracket of row ``row`` in the matrix stored under ``key``."""
    start = text.find(f'"{key}"')
    if start < 0:
        return None
    outer = text.find("[", start)
    if outer < 0:
        return None
    depth, seen = 0, -1
    for offset in range(outer, len(text)):
        ch = text[offset]
        if ch == "[":
            depth += 1
            if depth == 2:
                seen += 1
                if seen == row:
                    return offset
        elif ch == "]":
            depth -= 1
            if depth == 0:
                return None
    return None


def _error_at(text: str, key: str, row: Optional[int], message: str) -> ProblemFormatError:
    offset = _row_offset(text, key, row) if row is not None else text.find(f'"{key}"')
    if offset is None or offset < 0:
        return ProblemFormatError(message)
    line, column = _position(text, offset)
    return ProblemFormatError(message, line, column)


def _matrix(text: str, data: dict, key: str) -> np.ndarray:
    if key not in data:
        raise ProblemFormatError(f"Missing matrix '{key}'")
    rows = data[key]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise _error_at(text, key, None, f"'{key}' must be a nonempty list of rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise _error_at(
                text, key, i, f"Row {i + 1} of '{key}' has {len(row)} entries, expected {width}"
            )
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
            raise _error_at(text, key, i, f"Row {i + 1} of '{key}' has a non-numeric entry")
    return np.array(rows, dtype=float)


def _load(path: Path) -> Tuple[str, dict]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ProblemFormatError(f"Cannot read {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(f"Invalid JSON in {path}: {e.msg}", e.lineno, e.colno) from e
    if not isinstance(data, dict):
        raise ProblemFormatError(f"{path} must contain a JSON object")
    return text, data


def parse_problem(text: str) -> ProblemInstance:
    """Problem from JSON text with keys A, B, C and optionally S (default: all free).

    Args:
        text: The JSON document

    Returns:
        The parsed ProblemInstance

    Raises:
        ProblemFormatError: If the text is not a valid problem
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(f"Invalid JSON: {e.msg}", e.lineno, e.colno) from e
    if not isinstance(data, dict):
        raise ProblemFormatError("Problem file must contain a JSON object")
    A, B, C = (_matrix(text, data, key) for key in MATRIX_KEYS)
    S = _matrix(text, data, "S") if "S" in data else np.ones((B.shape[1], C.shape[0]))
    try:
        return ProblemInstance(A, B, C, SparsityPattern(S))
    except ValueError as e:
        raise ProblemFormatError(str(e)) from e


def load_problem(path: Path) -> ProblemInstance:
    """Read a problem file.

    Raises:
        ProblemFormatError: On unreadable files, invalid JSON, ragged rows or
            inconsistent shapes. Carries the line and column when known.
    """
    text, _ = _load(path)
    inst = parse_problem(text)
    logger.info(f"Loaded problem {path}: n={inst.n}, m={inst.m}, p={inst.p}")
    return inst


def load_delta(path: Path, m: int, p: int) -> np.ndarray:
    """Read the perturbation stored under "Delta" and check it is m x p.

    Args:
        path: JSON file with a single "Delta" key
        m: Expected number of rows
        p: Expected number of columns

    Returns:
        The m x p perturbation

    Raises:
        ProblemFormatError: If the file is unreadable or Delta has the wrong shape
    """
    text, data = _load(path)
    delta = _matrix(text, data, "Delta")
    if delta.shape != (m, p):
        raise _error_at(text, "Delta", None, f"Delta must be {m}x{p}, got {delta.shape}")
    return delta


def _rows(M: np.ndarray) -> List[List[Any]]:
    return np.asarray(M, dtype=float).tolist()


def dump_problem(inst: ProblemInstance, path: Path) -> None:
    """Write inst as a problem file that load_problem reads back."""
    payload = {
        "A": _rows(inst.A),
        "B": _rows(inst.B),
        "C": _rows(inst.C),
        "S": _rows(inst.pattern.S),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def dump_delta(delta: np.ndarray, path: Path) -> None:
    Path(path).write_text(json.dumps({"Delta": _rows(delta)}, indent=2) + "\n", encoding="utf-8")
