"""Configuration settings for the stability radius solver."""

import os
from pathlib import Path

_PREFIX = "SPARSE_SR_"


def _env(name: str, default: str) -> str:
    return os.getenv(_PREFIX + name, default)


class Config:
    """Configuration class for the stability radius solver."""

    # Penalty and Newton settings
    PENALTY_WEIGHT: float = float(_env("PENALTY_WEIGHT", "100"))
    HESSIAN_EPS: float = float(_env("HESSIAN_EPS", "1e-6"))
    DESCENT_MODE: str = _env("DESCENT_MODE", "newton")
    STEP_RULE: str = _env("STEP_RULE", "armijo")

    # Convergence settings
    GRAD_TOL: float = float(_env("GRAD_TOL", "1e-9"))
    MAX_ITERS: int = int(_env("MAX_ITERS", "500"))

    # Line search settings
    INITIAL_STEP: float = float(_env("INITIAL_STEP", "1.0"))
    STEP_SHRINK: float = float(_env("STEP_SHRINK", "0.5"))
    ARMIJO_CONSTANT: float = float(_env("ARMIJO_CONSTANT", "1e-4"))
    MAX_BACKTRACKS: int = int(_env("MAX_BACKTRACKS", "60"))

    # Rank-condition recovery
    JITTER_SCALE: float = float(_env("JITTER_SCALE", "1e-6"))
    JITTER_ATTEMPTS: int = int(_env("JITTER_ATTEMPTS", "10"))

    # Multistart settings
    MULTISTART_COUNT: int = int(_env("MULTISTART_COUNT", "50"))
    SEED: int = int(_env("SEED", "0"))
    JOBS: int = int(_env("JOBS", str(os.cpu_count() or 1)))

    # Validity and rank tolerances
    ALPHA_TOL: float = float(_env("ALPHA_TOL", "1e-4"))
    PINV_TOL: float = float(_env("PINV_TOL", "1e-12"))
    RANK_TOL: float = float(_env("RANK_TOL", "1e-9"))
    ILL_CONDITIONING_RATIO: float = float(_env("ILL_CONDITIONING_RATIO", "1e-6"))
    DEDUP_NORM_TOL: float = float(_env("DEDUP_NORM_TOL", "1e-3"))
    DEDUP_OMEGA_TOL: float = float(_env("DEDUP_OMEGA_TOL", "1e-2"))
    OMEGA_ZERO_TOL: float = float(_env("OMEGA_ZERO_TOL", "1e-3"))

    # Frequency scan for single-column patterns
    FREQUENCY_POINTS: int = int(_env("FREQUENCY_POINTS", "1000"))
    FREQUENCY_SPAN: float = float(_env("FREQUENCY_SPAN", "100"))

    # Certification thresholds
    STATIONARITY_TOL: float = float(_env("STATIONARITY_TOL", "1e-4"))
    REALNESS_TOL: float = float(_env("REALNESS_TOL", "1e-6"))
    PD_TOL: float = float(_env("PD_TOL", "1e-8"))
    EIG_TOL: float = float(_env("EIG_TOL", "1e-6"))

    # Spectral sampling
    SPECTRAL_SAMPLES: int = int(_env("SPECTRAL_SAMPLES", "720"))
    RADIAL_LEVELS: int = int(_env("RADIAL_LEVELS", "40"))

    # Network study
    NETWORK_STARTS: int = int(_env("NETWORK_STARTS", "6"))
    TIE_TOL: float = float(_env("TIE_TOL", "1e-4"))

    # File paths
    OUTPUT_DIR: Path = Path(_env("OUTPUT_DIR", "./sr_output"))

    @classmethod
    def validate(cls) -> None:
        """Validate configuration settings."""
        if cls.PENALTY_WEIGHT < 1:
            raise ValueError("PENALTY_WEIGHT must be at least 1")

        if cls.HESSIAN_EPS <= 0:
            raise ValueError("HESSIAN_EPS must be positive")

        if not 0 < cls.STEP_SHRINK < 1:
            raise ValueError("STEP_SHRINK must lie strictly between 0 and 1")

        if cls.GRAD_TOL <= 0:
            raise ValueError("GRAD_TOL must be positive")

        if cls.MAX_ITERS < 1:
            raise ValueError("MAX_ITERS must be at least 1")

        if cls.MULTISTART_COUNT < 1:
            raise ValueError("MULTISTART_COUNT must be at least 1")

        if cls.JOBS < 1:
            raise ValueError("JOBS must be at least 1")

        if cls.FREQUENCY_POINTS < 3:
            raise ValueError("FREQUENCY_POINTS must be at least 3")

        if cls.FREQUENCY_SPAN <= 1:
            raise ValueError("FREQUENCY_SPAN must exceed 1")

        if cls.DESCENT_MODE not in ("gradient", "newton"):
            raise ValueError(f"Unknown DESCENT_MODE: {cls.DESCENT_MODE}")

        if cls.STEP_RULE not in ("armijo", "backtracking"):
            raise ValueError(f"Unknown STEP_RULE: {cls.STEP_RULE}")


# Global config instance
config = Config()
