"""
Sieve Sets Module
Integer-set families (all, primes, y-rough, custom) and the sieve quantities
Phi(x, y) and zeta(1, y)
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
import sympy

from config import LabConfig
from utils.errors import InputError

logger = logging.getLogger(__name__)

ALL = "all"
PRIMES = "primes"
ROUGH = "rough"
CUSTOM = "custom"
FAMILIES = (ALL, PRIMES, ROUGH, CUSTOM)


@dataclass
class IntegerSet:
    """
    A finite subset of [1, N], stored as a strictly increasing int64 array.
    For the rough family, y is the sieve parameter: every element has P^-(m) > y,
    with P^-(1) = +infinity.
    """

    N: int
    elements: np.ndarray = field(repr=False)
    family: str = CUSTOM
    y: Optional[float] = None

    def __post_init__(self):
        self.N = int(self.N)
        self.elements = np.asarray(self.elements, dtype=np.int64).reshape(-1)
        if self.family not in FAMILIES:
            raise InputError(f"unknown set family {self.family!r}")
        if self.N < 0:
            raise InputError(f"upper bound N must be non-negative, got {self.N}")
        if self.elements.size:
            if np.any(np.diff(self.elements) <= 0):
                raise InputError("set elements must be strictly increasing")
            if self.elements[0] < 1 or self.elements[-1] > self.N:
                raise InputError(f"set elements must lie in [1, {self.N}]")

    def __len__(self) -> int:
        return int(self.elements.size)

    def __iter__(self):
        return iter(self.elements.tolist())

    def __contains__(self, m) -> bool:
        i = np.searchsorted(self.elements, m)
        return bool(i < self.elements.size and self.elements[i] == m)

    @property
    def density(self) -> float:
        return len(self) / self.N if self.N else 0.0

    def mask(self, upto: int = None) -> np.ndarray:
        """Boolean membership array indexed 0..upto (default N)."""
        upto = self.N if upto is None else upto
        flags = np.zeros(upto + 1, dtype=bool)
        flags[self.elements[self.elements <= upto]] = True
        return flags

    def restrict(self, upto: int) -> "IntegerSet":
        """Elements <= upto, keeping the family tag."""
        upto = int(upto)
        return IntegerSet(N=upto, elements=self.elements[self.elements <= upto],
                          family=self.family, y=self.y)

    def describe(self) -> str:
        if self.family == ROUGH:
            return f"rough(y={self.y:.6g}) <= {self.N}"
        return f"{self.family} <= {self.N}"

    def summary(self) -> dict:
        return {
            'family': self.family,
            'y': self.y,
            'N': self.N,
            'size': len(self),
            'density': self.density,
        }


# ============================================================================
# Prime tables
# ============================================================================

def small_primes(limit: int) -> np.ndarray:
    """All primes <= limit by a plain sieve of Eratosthenes."""
    limit = int(limit)
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for q in range(2, math.isqrt(limit) + 1):
        if is_prime[q]:
            is_prime[q * q::q] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def _sieve_primes(N: int, y: float) -> np.ndarray:
    """Primes used to sieve a y-rough set below N: those <= min(floor(y), N)."""
    if y < 2:
        return np.array([], dtype=np.int64)
    return small_primes(min(math.floor(y), N))


def _segments(N: int, segment_size: int):
    lo = 1
    while lo <= N:
        hi = min(lo + segment_size, N + 1)
        yield lo, hi
        lo = hi


def _segment_mask(lo: int, hi: int, primes: np.ndarray) -> np.ndarray:
    """mask[i] is True iff lo + i has no prime factor in primes."""
    mask = np.ones(hi - lo, dtype=bool)
    for q in primes.tolist():
        start = ((lo + q - 1) // q) * q  # first multiple of q in [lo, hi)
        if start >= hi:
            continue
        mask[start - lo::q] = False
    return mask


# ============================================================================
# Set families
# ============================================================================

def rough_set(N: int, y: float, segment_size: int = None) -> IntegerSet:
    """
    Integers n <= N with every prime factor > y (1 included), by segmented sieve.

    Args:
        N: Inclusive upper bound (>= 1)
        y: Real sieve parameter (>= 1); primes <= floor(y) are sieved out
        segment_size: Segment length (default LabConfig.SEGMENT_SIZE)

    Returns:
        IntegerSet with family 'rough'
    """
    N, y = int(N), float(y)
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")
    if y < 1:
        raise InputError(f"y must be >= 1, got {y}")
    segment_size = segment_size or LabConfig.SEGMENT_SIZE
    primes = _sieve_primes(N, y)

    # segments are concatenated in ascending order
    pieces = [lo + np.flatnonzero(_segment_mask(lo, hi, primes))
              for lo, hi in _segments(N, segment_size)]
    elements = np.concatenate(pieces).astype(np.int64) if pieces else np.array([], dtype=np.int64)
    return IntegerSet(N=N, elements=elements, family=ROUGH, y=y)


def phi_count(x: int, y: float, segment_size: int = None) -> int:
    """
    Phi(x, y) = #{n <= x : P^-(n) > y}, counted segment by segment without materialising.
    """
    x, y = int(x), float(y)
    if x < 1:
        raise InputError(f"x must be >= 1, got {x}")
    segment_size = segment_size or LabConfig.SEGMENT_SIZE
    primes = _sieve_primes(x, y)
    return int(sum(int(np.count_nonzero(_segment_mask(lo, hi, primes)))
                   for lo, hi in _segments(x, segment_size)))


def rough_set_brute(N: int, y: float) -> List[int]:
    """Trial factorisation of every n <= N; small N only."""
    return [n for n in range(1, int(N) + 1)
            if n == 1 or min(sympy.primefactors(n)) > float(y)]


def primes_up_to(N: int) -> IntegerSet:
    return IntegerSet(N=int(N), elements=small_primes(N), family=PRIMES)


def all_integers(N: int) -> IntegerSet:
    return IntegerSet(N=int(N), elements=np.arange(1, int(N) + 1, dtype=np.int64), family=ALL)


def custom_set(elements: Iterable[int], N: int = None) -> IntegerSet:
    """
    Build a custom set; elements are sorted, and N defaults to the largest element.
    Duplicates are rejected.
    """
    arr = np.asarray(sorted(int(e) for e in elements), dtype=np.int64)
    if arr.size and np.any(np.diff(arr) == 0):
        raise InputError("custom set contains duplicate elements")
    if N is None:
        N = int(arr[-1]) if arr.size else 0
    return IntegerSet(N=N, elements=arr, family=CUSTOM)


def make_family(family: str, N: int, y: float = None, path: str = None) -> IntegerSet:
    """Dispatch on a family name as used on the command line."""
    if family == ALL:
        return all_integers(N)
    if family == PRIMES:
        return primes_up_to(N)
    if family == ROUGH:
        if y is None:
            y = math.exp(math.sqrt(math.log(N))) if N > 1 else 1.0
        return rough_set(N, y)
    if family == CUSTOM:
        if not path:
            raise InputError("custom family requires a set file path")
        return read_set(path, N)
    raise InputError(f"unknown set family {family!r}")


# ============================================================================
# Import / export
# ============================================================================

def write_set(integer_set: IntegerSet, path: str) -> str:
    """Newline-delimited decimal integers."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w") as handle:
        for m in integer_set.elements.tolist():
            handle.write(f"{m}\n")
    return path


def read_set(path: str, N: int = None) -> IntegerSet:
    """
    Read a newline-delimited set, validating it as an IntegerSet.

    Args:
        path: File of decimal integers, one per line, strictly increasing
        N: Upper bound (default: the largest element)

    Returns:
        IntegerSet with family 'custom'
    """
    values = []
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                value = int(text)
            except ValueError:
                raise InputError(f"{path}:{lineno}: not an integer: {text!r}") from None
            if values and value <= values[-1]:
                raise InputError(f"{path}:{lineno}: elements must be strictly increasing")
            values.append(value)
    if N is None:
        N = values[-1] if values else 0
    return IntegerSet(N=N, elements=np.asarray(values, dtype=np.int64), family=CUSTOM)


# ============================================================================
# Sieve quantities
# ============================================================================

def mertens_product(y: float) -> float:
    """zeta(1, y) = prod_{p <= y} (1 - 1/p)^{-1}; the empty product is 1."""
    if y < 0:
        raise InputError(f"y must be >= 0, got {y}")
    primes = small_primes(math.floor(y)) if y >= 2 else np.array([], dtype=np.int64)
    return float(np.prod(primes / (primes - 1.0))) if primes.size else 1.0


def brun_regime_limit(N: int) -> float:
    """Upper end N^{1/(10 log log N)} of the y-range where the Brun asymptotic is asserted."""
    if N <= math.e:
        return 0.0
    loglog = math.log(math.log(N))
    if loglog <= 0:
        return 0.0
    return N ** (1.0 / (10.0 * loglog))


def brun_ratio_scan(N: int, y_grid: Iterable[float]) -> pd.DataFrame:
    """
    Phi(N, y) * zeta(1, y) / N along a grid of y.

    Rows outside 2 <= y <= N^{1/(10 log log N)} are still computed and carry
    in_regime = False.
    """
    N = int(N)
    limit = brun_regime_limit(N)
    rows = []
    for y in y_grid:
        y = float(y)
        phi = phi_count(N, y)
        zeta = mertens_product(y)
        in_regime = 2 <= y <= limit
        if not in_regime:
            logger.warning("brun scan: y=%g outside regime [2, %.4g] for N=%d", y, limit, N)
        rows.append({'N': N, 'y': y, 'phi': phi, 'zeta_1_y': zeta,
                     'ratio': phi * zeta / N, 'in_regime': in_regime})
    return pd.DataFrame(rows, columns=['N', 'y', 'phi', 'zeta_1_y', 'ratio', 'in_regime'])


def harmonic_rough_sum(N: int, y: float) -> float:
    """sum of 1/n over n <= N with P^-(n) > y, summed exactly rounded."""
    elements = rough_set(N, max(1.0, float(y))).elements
    return math.fsum((1.0 / elements).tolist())


def harmonic_bound_scan(N_grid: Iterable[int], y_grid: Iterable[float]) -> pd.DataFrame:
    """
    Compare sum_{rough n} 1/n with log N * prod_{p <= y}(1 - 1/p) and its Mertens limit.
    The observed ratio is the empirical constant of the log-weight sieve bound.
    """
    rows = []
    for N in N_grid:
        for y in y_grid:
            if y > N:
                continue
            value = harmonic_rough_sum(N, y)
            reference = math.log(N) / mertens_product(y)
            rows.append({'N': int(N), 'y': float(y), 'harmonic_sum': value,
                         'log_N_prod': reference, 'ratio': value / reference,
                         'mertens_bound': math.exp(np.euler_gamma) * reference})
    return pd.DataFrame(rows, columns=['N', 'y', 'harmonic_sum', 'log_N_prod', 'ratio',
                                       'mertens_bound'])


def sieve_constant_scan(N_grid: Iterable[int], y_grid: Iterable[float]) -> pd.DataFrame:
    """Phi(N, y) / (N prod_{p <= y}(1 - 1/p)): the upper-bound sieve constant, observed."""
    rows = []
    for N in N_grid:
        for y in y_grid:
            if y > N:
                continue
            phi = phi_count(N, y)
            expected = N / mertens_product(y)
            rows.append({'N': int(N), 'y': float(y), 'phi': phi,
                         'expected': expected, 'ratio': phi / expected})
    return pd.DataFrame(rows, columns=['N', 'y', 'phi', 'expected', 'ratio'])


# ============================================================================
# Structural checks
# ============================================================================

def check_multiplicative_closure(integer_set: IntegerSet) -> List[Tuple[int, int]]:
    """Pairs m <= n of the set with mn <= N but mn outside the set."""
    flags = integer_set.mask()
    elements = integer_set.elements
    N = integer_set.N
    violations = []
    for m in elements.tolist():
        if m * m > N:
            break
        partners = elements[(elements >= m) & (elements <= N // m)]
        bad = partners[~flags[m * partners]]
        violations.extend((m, int(n)) for n in bad.tolist())
    return violations


def gcd_dichotomy_exceptions(N: int, y: float) -> List[Tuple[int, int]]:
    """
    Pairs m < n of rough_set(N, y) with m not dividing n and gcd(m, n) >= N / y.
    The expected answer is always the empty list.
    """
    elements = rough_set(N, y).elements
    if elements.size < 2:
        return []
    i, j = np.triu_indices(elements.size, k=1)
    m, n = elements[i], elements[j]
    divides = (n % m) == 0
    small_gcd = np.gcd(m, n) * float(y) < N
    bad = ~(divides | small_gcd)
    return list(zip(m[bad].tolist(), n[bad].tolist()))


if __name__ == "__main__":
    print("Sieve Sets Test")
    print("=" * 40)
    print("rough(10, 2) =", list(rough_set(10, 2)))
    print("rough(10, 3) =", list(rough_set(10, 3)))
    print("Phi(100, 7) =", phi_count(100, 7))
    print("zeta(1, 5) =", mertens_product(5))
    print(brun_ratio_scan(10 ** 5, [2, 10, 20]))
