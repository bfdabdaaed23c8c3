"""
Configuration utilities for the simulation library and its command line.
"""

from functools import lru_cache
import os

from pydantic import BaseModel, Field


class Settings(BaseModel):
    """
    Numerical settings loaded from environment variables.

    Attributes:
        concurrence_zero_tol: Concurrence below this value counts as zero (``ENATP_TOL``).
        ppt_tol: Partial-transpose eigenvalues above ``-ppt_tol`` count as nonnegative.
        prune_tol: Known-outcome branches below this probability are dropped.
        weakness_threshold: ‖ε̂‖ below which a measurement outcome is reported as weak.
        max_branches: Upper bound on the number of explicitly enumerated branches.
        workers: Thread count for sweeps and branch expansion.
    """

    concurrence_zero_tol: float = Field(
        default_factory=lambda: float(os.getenv("ENATP_TOL", "1e-9")), gt=0
    )
    ppt_tol: float = Field(
        default_factory=lambda: float(os.getenv("ENATP_PPT_TOL", "1e-9")), gt=0
    )
    prune_tol: float = Field(
        default_factory=lambda: float(os.getenv("ENATP_PRUNE_TOL", "1e-14")), gt=0
    )
    weakness_threshold: float = Field(
        default_factory=lambda: float(os.getenv("ENATP_WEAK_THRESHOLD", "0.25")), gt=0
    )
    max_branches: int = Field(
        default_factory=lambda: int(os.getenv("ENATP_MAX_BRANCHES", str(2**20))), ge=1
    )
    workers: int = Field(default_factory=lambda: int(os.getenv("ENATP_WORKERS", "1")), ge=1)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Return cached settings.

    Uses LRU cache so the environment is only read once per process.

    Returns:
        Settings: Settings instance.
    """
    return Settings()
