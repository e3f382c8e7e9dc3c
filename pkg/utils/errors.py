"""
Error types for the theta laboratory
"""


class ThetaLabError(Exception):
    """Base class for every failure raised by the engines."""

    exit_code = 1


class InputError(ThetaLabError, ValueError):
    """Invalid parameters: non-prime modulus, parity mismatch, x <= 0, ..."""

    exit_code = 2


class MemoryBudgetError(ThetaLabError, MemoryError):
    """A table would exceed its configured memory budget."""

    def __init__(self, what: str, required: int, budget: int):
        self.what = what
        self.required = int(required)
        self.budget = int(budget)
        super().__init__(
            f"{what} needs {self.required} bytes, budget is {self.budget} bytes"
        )


class OracleCapError(ThetaLabError):
    """Brute-force oracle refused an instance above its cap."""


class UndecidedError(ThetaLabError):
    """A value could not be separated from zero by its error radius."""


class CacheFormatError(ThetaLabError):
    """A cache file has the wrong magic bytes, version or size."""
