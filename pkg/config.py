"""
Lab Configuration
Default tunables for the theta laboratory, overridable from the environment
"""

import os
from dataclasses import dataclass, field
from typing import Tuple

__version__ = "0.4.0"


@dataclass
class LabConfig:
    """
    Runtime configuration shared by the engines and the command line.
    Class-level constants are the defaults; from_env() applies THML_* overrides.
    """

    # Numerical defaults
    DEFAULT_X = 1.0
    TRUNCATION_TOLERANCE = 1e-18
    PRECISION_LADDER = (53, 128, 256)

    # Memory / work budgets
    DLOG_MEMORY_BUDGET = 4 * 1024 ** 3  # bytes, dlog + powers + roots of one group
    ORACLE_CAP = 4000
    ENERGY_PAIR_BUDGET = 50_000_000
    SEGMENT_SIZE = 1 << 20

    # Housekeeping
    CACHE_DIR = os.path.join(os.path.expanduser("~"), ".cache", "thetalab")
    LOG_LEVEL = "WARNING"
    CODE_VERSION = __version__

    cache_dir: str = CACHE_DIR
    log_level: str = LOG_LEVEL
    dlog_memory_budget: int = DLOG_MEMORY_BUDGET
    precision_ladder: Tuple[int, ...] = field(default=PRECISION_LADDER)

    @classmethod
    def from_env(cls, environ=None) -> "LabConfig":
        """
        Build a config from THML_* environment variables.

        Args:
            environ: Mapping to read from (default: os.environ)

        Returns:
            LabConfig with overrides applied
        """
        env = os.environ if environ is None else environ
        budget = env.get("THML_DLOG_BUDGET")
        return cls(
            cache_dir=env.get("THML_CACHE_DIR", cls.CACHE_DIR),
            log_level=env.get("THML_LOG_LEVEL", cls.LOG_LEVEL).upper(),
            dlog_memory_budget=int(budget) if budget else cls.DLOG_MEMORY_BUDGET,
        )
