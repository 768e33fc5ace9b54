"""Problem definition: system matrices, sparsity pattern, weights and assumption checks."""

from dataclasses import dataclass, field
from typing import Iterable, List, Tuple

import numpy as np

from .config import config
from .errors import UnstableSystemError
from .matops import hadamard, singular_values, spectral_abscissa, vec


@dataclass(eq=False)
class SparsityPattern:
    """Binary mask of the perturbation entries that may be nonzero."""
    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] < 1 or S.shape[1] < 1:
            raise ValueError(f"Sparsity pattern must be a nonempty matrix, got shape {S.shape}")
        if not np.all((S == 0) | (S == 1)):
            raise ValueError("Sparsity pattern entries must be 0 or 1")
        self.S = S

    @classmethod
    def full(cls, m: int, p: int) -> "SparsityPattern":
        """Pattern with every entry free.

        Args:
            m: Number of rows of Delta (inputs)
            p: Number of columns of Delta (outputs)

        Returns:
            An m x p all-ones pattern
        """
        return cls(np.ones((m, p)))

    @classmethod
    def zeros(cls, m: int, p: int) -> "SparsityPattern":
        """Pattern with no free entry; solvers reject it."""
        return cls(np.zeros((m, p)))

    @classmethod
    def diagonal(cls, m: int, p: int) -> "SparsityPattern":
        """Pattern whose free entries are the main diagonal.

        Args:
            m: Number of rows of Delta
            p: Number of columns of Delta

        Returns:
            An m x p pattern with ones at (i, i) for i < min(m, p)
        """
        return cls(np.eye(m, p))

    @classmethod
    def from_entries(
        cls, m: int, p: int, entries: Iterable[Tuple[int, int]]
    ) -> "SparsityPattern":
        """Pattern with ones at the given 0-based (row, column) positions.

        Args:
            m: Number of rows of Delta
            p: Number of columns of Delta
            entries: Free positions; repeats are allowed

        Returns:
            The pattern

        Raises:
            ValueError: If an entry lies outside the m x p shape
        """
        S = np.zeros((m, p))
        for i, j in entries:
            if not (0 <= i < m and 0 <= j < p):
                raise ValueError(f"Entry ({i}, {j}) lies outside a {m}x{p} pattern")
            S[i, j] = 1.0
        return cls(S)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.S.shape

    @property
    def complement(self) -> np.ndarray:
        """S^c = 1 - S."""
        return 1.0 - self.S

    @property
    def forced_zero_count(self) -> int:
        """n_s, the number of entries forced to zero."""
        return int(np.sum(self.S == 0))

    @property
    def free_count(self) -> int:
        return int(np.sum(self.S == 1))

    @property
    def free_entries(self) -> List[Tuple[int, int]]:
        """Free (row, column) positions in column-major order."""
        cols, rows = np.nonzero(self.S.T)
        return [(int(i), int(j)) for i, j in zip(rows, cols)]

    @property
    def selector(self) -> np.ndarray:
        """n_s x mp matrix picking the forced-zero entries out of vec(Delta)."""
        m, p = self.shape
        forced = np.flatnonzero(vec(self.complement))
        return np.eye(m * p)[forced]

    def project(self, delta: np.ndarray) -> Tuple[np.ndarray, float]:
        """Return S o Delta and the sparsity error ||Delta - S o Delta||_F."""
        sparse = hadamard(self.S, np.asarray(delta, dtype=float))
        return sparse, float(np.linalg.norm(delta - sparse))


@dataclass(eq=False)
class WeightMatrix:
    """Entrywise penalty weights: 1 on free entries, w on forced zeros."""
    w: float
    pattern: SparsityPattern

    def __post_init__(self):
        if self.w < 1:
            raise ValueError(f"Penalty weight must be at least 1, got {self.w}")

    @property
    def W(self) -> np.ndarray:
        return 1.0 + (self.w - 1.0) * self.pattern.complement

    @property
    def squared(self) -> np.ndarray:
        """W o W as an m x p matrix."""
        W = self.W
        return W * W

    @property
    def diagonal(self) -> np.ndarray:
        """Diagonal of W-bar, i.e. vec(W o W)."""
        return vec(self.squared)

    @property
    def W_bar(self) -> np.ndarray:
        return np.diag(self.diagonal)


@dataclass
class AssumptionCheck:
    """Outcome of an assumption test."""
    passed: bool
    value: float
    detail: str = ""

    def __bool__(self) -> bool:
        return bool(self.passed)


@dataclass(eq=False)
class ProblemInstance:
    """The quadruple (A, B, C, S) defining A(Delta) = A + B Delta C."""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    pattern: SparsityPattern

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got shape {self.A.shape}")
        if self.B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got shape {self.B.shape}")
        if self.C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got shape {self.C.shape}")
        if self.pattern.shape != (self.m, self.p):
            raise ValueError(
                f"Sparsity pattern must be {self.m}x{self.p}, got {self.pattern.shape}"
            )
        for name, M in (("A", self.A), ("B", self.B), ("C", self.C)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def with_pattern(self, pattern: SparsityPattern) -> "ProblemInstance":
        """Same system matrices under another sparsity pattern.

        Args:
            pattern: The new m x p pattern

        Returns:
            A new ProblemInstance

        Raises:
            ValueError: If the pattern shape does not match m x p
        """
        return ProblemInstance(self.A, self.B, self.C, pattern)

    def perturbed_matrix(self, delta: np.ndarray) -> np.ndarray:
        """A + B Delta C.

        Args:
            delta: The m x p perturbation

        Returns:
            The n x n perturbed matrix

        Raises:
            ValueError: If delta is not m x p
        """
        delta = np.atleast_2d(np.asarray(delta, dtype=float))
        if delta.shape != (self.m, self.p):
            raise ValueError(f"Delta must be {self.m}x{self.p}, got shape {delta.shape}")
        return self.A + self.B @ delta @ self.C

    def check_a1(self) -> AssumptionCheck:
        """Stability of A: passes iff alpha(A) < 0."""
        alpha = spectral_abscissa(self.A)
        return AssumptionCheck(alpha < 0, alpha, f"alpha(A) = {alpha:.6g}")

    def require_stable(self) -> None:
        """Raise UnstableSystemError unless alpha(A) < 0."""
        check = self.check_a1()
        if not check:
            raise UnstableSystemError(f"A is not stable: {check.detail}")

    def check_a3(self, X: np.ndarray, rank_tol: float = config.RANK_TOL) -> AssumptionCheck:
        """Full column rank of CX.

        With two columns the test is sigma_2(CX) > rank_tol * sigma_1(CX). With
        one column (the real-eigenvector variant) it is
        sigma_1(CX) > rank_tol * ||C||_2 ||X||_2. The value is the ratio
        sigma_min / sigma_max of CX (or its scaled norm for one column).
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        CX = self.C @ X
        if X.shape[1] == 1:
            scale = float(np.linalg.norm(self.C, 2) * np.linalg.norm(X))
            ratio = float(np.linalg.norm(CX)) / scale if scale > 0 else 0.0
            return AssumptionCheck(ratio > rank_tol, ratio, f"||CX|| ratio = {ratio:.3g}")
        if X.shape[1] != 2:
            raise ValueError(f"X must have one or two columns, got {X.shape[1]}")
        if self.p < 2:
            return AssumptionCheck(False, 0.0, "p < 2: CX cannot have full column rank")
        s = singular_values(CX)
        if s[0] <= 0:
            return AssumptionCheck(False, 0.0, "CX = 0")
        ratio = float(s[1] / s[0])
        return AssumptionCheck(ratio > rank_tol, ratio, f"sigma_2/sigma_1 = {ratio:.3g}")

    def project_sparse(self, delta: np.ndarray) -> Tuple[np.ndarray, float]:
        """Return S o Delta and E = ||Delta - S o Delta||_F."""
        return self.pattern.project(delta)

    def restrict_to_support(self) -> "SupportReduction":
        """Drop perturbation rows and columns that the pattern forces to zero.

        Returns:
            The reduction holding both problems and the kept row and column
            indices

        Raises:
            ValueError: If the pattern has no free entries
        """
        S = self.pattern.S
        rows = np.flatnonzero(S.any(axis=1))
        cols = np.flatnonzero(S.any(axis=0))
        if rows.size == 0:
            raise ValueError("Sparsity pattern has no free entries")
        reduced = ProblemInstance(
            self.A,
            self.B[:, rows],
            self.C[cols, :],
            SparsityPattern(S[np.ix_(rows, cols)]),
        )
        return SupportReduction(self, reduced, rows, cols)


@dataclass(eq=False)
class SupportReduction:
    """Map between a problem and its copy restricted to the pattern's support.

    Both problems have the same feasible perturbations and the same radius.
    """
    full: ProblemInstance
    reduced: ProblemInstance
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)

    @property
    def is_identity(self) -> bool:
        return self.rows.size == self.full.m and self.cols.size == self.full.p

    def expand_delta(self, delta: np.ndarray) -> np.ndarray:
        full = np.zeros((self.full.m, self.full.p))
        full[np.ix_(self.rows, self.cols)] = delta
        return full

    def restrict_delta(self, delta: np.ndarray) -> np.ndarray:
        return np.asarray(delta)[np.ix_(self.rows, self.cols)]

    def restrict_g(self, G: np.ndarray) -> np.ndarray:
        """Rows of G = Delta C X that survive the reduction."""
        return np.asarray(G)[self.rows]

    def expand_g(self, G: np.ndarray) -> np.ndarray:
        G = np.asarray(G)
        full = np.zeros((self.full.m,) + G.shape[1:])
        full[self.rows] = G
        return full
