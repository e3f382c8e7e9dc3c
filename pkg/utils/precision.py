"""
Precision Ladder
Re-evaluate a quantity at increasing mpmath precision until it is decided
"""

import logging
from typing import Callable, Iterable, Optional, Tuple, TypeVar

import mpmath

logger = logging.getLogger(__name__)

T = TypeVar("T")

DOUBLE_BITS = 53


def escalate(evaluate: Callable[[int], T],
             decided: Callable[[T], bool],
             ladder: Iterable[int]) -> Tuple[T, Optional[int]]:
    """
    Walk a precision ladder.

    Args:
        evaluate: Callable taking a mantissa width in bits and returning a result
        decided: Predicate telling whether a result is conclusive
        ladder: Increasing mantissa widths, e.g. (53, 128, 256)

    Returns:
        (last result, bits at which it was decided or None if never decided)
    """
    result = None
    for bits in ladder:
        result = evaluate(bits)
        if decided(result):
            return result, bits
        logger.info("still undecided at %d bits", bits)
    return result, None


def ulp_bound(bits: int) -> float:
    """Unit roundoff 2^(1-bits) of a binary mantissa of the given width."""
    return float(mpmath.ldexp(1, 1 - int(bits)))
