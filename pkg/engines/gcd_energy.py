"""
GCD Sums and Multiplicative Energy Module
GCD sums S(B), the ratio R(B), multiplicative energies, the quadruple count and
congruence-solution counts, each with a brute-force oracle and a fast path
"""

import logging
import math
from dataclasses import dataclass, asdict
from itertools import product
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

from config import LabConfig
from engines.sieve_sets import IntegerSet, ROUGH, make_family, small_primes
from utils.errors import InputError, MemoryBudgetError, OracleCapError

logger = logging.getLogger(__name__)


@dataclass
class EnergyReport:
    """GCD sum, R(B) and multiplicative energies of one set."""

    set_descriptor: dict
    S: float
    R: float
    E_cross: Optional[int]
    E_self: Optional[int]
    density: float

    def to_dict(self) -> dict:
        return asdict(self)


# ============================================================================
# Arithmetic tables
# ============================================================================

def totient_table(limit: int) -> np.ndarray:
    """phi(d) for d in [0, limit]."""
    phi = np.arange(limit + 1, dtype=np.int64)
    for q in small_primes(limit).tolist():
        phi[q::q] -= phi[q::q] // q
    return phi


def sigma_minus1_table(limit: int) -> np.ndarray:
    """sigma_{-1}(m) = sum_{d | m} 1/d for m in [0, limit]."""
    sig = np.zeros(limit + 1, dtype=np.float64)
    for d in range(1, limit + 1):
        sig[d::d] += 1.0 / d
    return sig


def mobius_table(limit: int) -> np.ndarray:
    """mu(n) for n in [0, limit]."""
    mu = np.ones(limit + 1, dtype=np.int64)
    mu[0] = 0
    for q in small_primes(limit).tolist():
        mu[q::q] *= -1
        mu[q * q::q * q] = 0
    return mu


def divisor_table(limit: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Divisors of every n <= limit in CSR form: divisors[offsets[n]:offsets[n + 1]]
    lists those of n in increasing order.
    """
    tau = np.zeros(limit + 1, dtype=np.int64)
    for d in range(1, limit + 1):
        tau[d::d] += 1
    offsets = np.zeros(limit + 2, dtype=np.int64)
    np.cumsum(tau, out=offsets[1:])
    divisors = np.empty(int(offsets[-1]), dtype=np.int64)
    fill = offsets[:-1].copy()
    for d in range(1, limit + 1):
        multiples = np.arange(d, limit + 1, d)
        divisors[fill[multiples]] = d
        fill[multiples] += 1
    return offsets, divisors


# ============================================================================
# GCD sums
# ============================================================================

def _require_nonempty(B: IntegerSet) -> None:
    if len(B) == 0:
        raise InputError("set is empty")


def gcd_sum_naive(B: IntegerSet, cap: int = None) -> float:
    """
    S(B) = sum over m1 <= m2 in B of gcd(m1, m2) / m2, pair by pair.

    Args:
        B: Integer set
        cap: Largest |B| accepted (default LabConfig.ORACLE_CAP)
    """
    cap = LabConfig.ORACLE_CAP if cap is None else cap
    if len(B) > cap:
        raise OracleCapError(f"|B| = {len(B)} exceeds the oracle cap {cap}; use gcd_sum_fast")
    elements = B.elements
    rows = []
    for idx, m2 in enumerate(elements.tolist()):
        total = int(np.gcd(elements[:idx + 1], m2).sum())
        rows.append(total / m2)
    return math.fsum(rows)


def gcd_sum_fast(B: IntegerSet) -> float:
    """
    S(B) via gcd(m1, m2) = sum_{d | m1, d | m2} phi(d).

    For each d, the multiples of d in B in ascending order are b_1 < b_2 < ...;
    the pairs m1 <= m2 = b_i with d | m1 number i, so
    S(B) = sum_d phi(d) sum_i i / b_i.
    """
    if len(B) == 0:
        return 0.0
    top = int(B.elements[-1])
    flags = B.mask(top)
    phi = totient_table(top)
    parts = []
    for d in range(1, top + 1):
        hits = np.flatnonzero(flags[d::d])
        if hits.size == 0:
            continue
        multiples = d * (hits + 1)
        ranks = np.arange(1, hits.size + 1, dtype=np.float64)
        parts.append(phi[d] * float(np.sum(ranks / multiples)))
    return math.fsum(parts)


def ratio_R(B: IntegerSet, S: float = None) -> float:
    """R(B) = N |B|^2 / S(B), never above the trivial bound N |B|."""
    _require_nonempty(B)
    S = gcd_sum_fast(B) if S is None else S
    size = len(B)
    R = B.N * size * size / S
    if R > B.N * size * (1 + 1e-12):
        raise ArithmeticError(f"R(B) = {R} exceeds the trivial bound N|B| = {B.N * size}")
    return R


def divisor_sigma_minus1_sum(B: IntegerSet) -> float:
    """sum of sigma_{-1}(m) over B, the middle link of S(B) >= sum sigma_{-1} >= |B|."""
    if len(B) == 0:
        return 0.0
    table = sigma_minus1_table(int(B.elements[-1]))
    return math.fsum(table[B.elements].tolist())


def divisor_chain_sum(B: IntegerSet) -> float:
    """sum of m1/m2 over pairs m1 | m2 of B (diagonal included)."""
    if len(B) == 0:
        return 0.0
    flags = B.mask()
    parts = []
    for m1 in B.elements.tolist():
        hits = np.flatnonzero(flags[m1::m1])
        parts.append(float(np.sum(1.0 / (hits + 1))))
    return math.fsum(parts)


def divisor_split_constant(B: IntegerSet) -> float:
    """
    Observed C in sum_{m1 | m2} m1/m2 <= C (|B| + log N + N/y) for a rough set.
    """
    if B.family != ROUGH or not B.y:
        raise InputError("divisor split applies to rough sets")
    reference = len(B) + math.log(max(B.N, 2)) + B.N / B.y
    return divisor_chain_sum(B) / reference


# ============================================================================
# Multiplicative energy
# ============================================================================

def _multiplicity_energy(products: np.ndarray) -> int:
    """sum over values v of r(v)^2, where r counts occurrences of v."""
    if products.size == 0:
        return 0
    top = int(products.max())
    if top <= 4 * products.size:
        counts = np.bincount(products)
    else:
        _, counts = np.unique(products, return_counts=True)
    counts = counts.astype(np.int64)
    return int(np.dot(counts, counts))


def energy_cross(B: IntegerSet, N: int, budget: int = None) -> int:
    """
    E_x(B, N) = #{ab = cd : a, c in B; 1 <= b, d <= N} from the product multiplicity table.

    Raises:
        MemoryBudgetError: |B| * N products exceed the pair budget
    """
    budget = LabConfig.ENERGY_PAIR_BUDGET if budget is None else budget
    N = int(N)
    pairs = len(B) * N
    if pairs > budget:
        raise MemoryBudgetError(f"product table for |B|={len(B)}, N={N}", 8 * pairs, 8 * budget)
    products = np.multiply.outer(B.elements, np.arange(1, N + 1, dtype=np.int64)).ravel()
    return _multiplicity_energy(products)


def energy_cross_gcd(B: IntegerSet, N: int) -> int:
    """
    E_x(B, N) = sum over (a, c) in B^2 of floor(N gcd(a, c) / max(a, c)).

    ab = cd with g = gcd(a, c) forces b = (c/g) t, d = (a/g) t for t >= 1.
    Pairs a < c are grouped by the divisors of c: with cnt[k] the number of
    earlier elements divisible by k, the row of c is
    sum_{k | c} cnt[k] sum_{g | k} mu(k/g) floor(N g / c).
    Work is about sum_{c in B} tau(c)^2 and no product table is built.
    """
    N = int(N)
    if len(B) == 0:
        return 0
    top = int(B.elements[-1])
    offsets, divisors = divisor_table(top)
    mu = mobius_table(top)
    cnt = np.zeros(top + 1, dtype=np.int64)
    off_diagonal = 0
    for c in B.elements.tolist():
        d = divisors[offsets[c]:offsets[c + 1]]
        f = (N * d) // c
        # k (rows) against g (columns), kept where g | k
        k, g = d[:, None], d[None, :]
        weights = np.where(k % g == 0, mu[k // g], 0)
        h = weights @ f
        off_diagonal += int(np.dot(cnt[d], h))
        cnt[d] += 1
    return len(B) * N + 2 * off_diagonal


def energy_self(B: IntegerSet, budget: int = None) -> int:
    """E_x(B, B) = #{ab = cd : a, b, c, d in B} from the product multiplicity table."""
    budget = LabConfig.ENERGY_PAIR_BUDGET if budget is None else budget
    pairs = len(B) * len(B)
    if pairs > budget:
        raise MemoryBudgetError(f"product table for |B|={len(B)}", 8 * pairs, 8 * budget)
    products = np.multiply.outer(B.elements, B.elements).ravel()
    return _multiplicity_energy(products)


def energy_cross_brute(B: IntegerSet, N: int) -> int:
    """Enumerate (a, c, b) and test whether d = ab/c is an integer in [1, N]."""
    b = np.arange(1, int(N) + 1, dtype=np.int64)
    total = 0
    for a in B:
        ab = a * b
        for c in B:
            total += int(np.count_nonzero((ab % c == 0) & (ab // c <= N)))
    return total


def energy_self_brute(B: IntegerSet) -> int:
    """Enumerate (a, b, c) in B^3 and test whether d = ab/c lies in B."""
    elements = B.elements
    flags = B.mask()
    total = 0
    for a in B:
        for b in B:
            ab = a * b
            d = ab // elements
            hit = (ab % elements == 0) & (d <= B.N)
            total += int(np.count_nonzero(flags[d[hit]]))
    return total


def energy_report(B: IntegerSet, N: int = None) -> EnergyReport:
    """Assemble S, R and both energies; E_self over the pair budget is left as None."""
    _require_nonempty(B)
    N = B.N if N is None else int(N)
    S = gcd_sum_fast(B)
    try:
        E_cross = energy_cross(B, N)
    except MemoryBudgetError:
        E_cross = energy_cross_gcd(B, N)
    try:
        E_self = energy_self(B)
    except MemoryBudgetError:
        E_self = None
    return EnergyReport(set_descriptor=B.summary(), S=S, R=ratio_R(B, S), E_cross=E_cross,
                        E_self=E_self, density=B.density)


# ============================================================================
# The quadruple count m1 n1 = m2 n2
# ============================================================================

def quadruple_count(x: int) -> int:
    """
    #{(m1, n1, m2, n2) >= 1 : m1 n1 = m2 n2, m1^2 + n1^2 + m2^2 + n2^2 <= x}.

    Factorisations (m, n) of each product v are grouped and sorted by s = m^2 + n^2;
    within a group the pairs with s1 + s2 <= x are counted by binary search.
    """
    x = int(x)
    if x < 4:
        raise InputError(f"x must be >= 4, got {x}")
    if (x // 2 + 1) * (x + 1) >= 2 ** 62:
        raise InputError(f"x = {x} is too large for 64-bit product keys")

    limit = x - 2  # the other pair contributes at least 2
    # Every pair (m, n) with m^2 + n^2 <= x - 2
    ms, ns = [], []
    for m in range(1, math.isqrt(limit - 1) + 1):
        top = math.isqrt(limit - m * m)
        if top < 1:
            continue
        ms.append(np.full(top, m, dtype=np.int64))
        ns.append(np.arange(1, top + 1, dtype=np.int64))
    m = np.concatenate(ms)
    n = np.concatenate(ns)
    v = m * n
    s = m * m + n * n

    # Key (v, s) sorts by product first, then by s inside a product
    stride = np.int64(x + 1)
    keys = np.sort(v * stride + s)
    group_start = np.searchsorted(keys, v * stride, side="left")
    group_stop = np.searchsorted(keys, v * stride + (x - s), side="right")
    return int(np.sum(group_stop - group_start))


def quadruple_count_brute(x: int) -> int:
    """Direct enumeration of the quadruple count; small x only."""
    top = math.isqrt(x)
    count = 0
    for m1, n1, m2 in product(range(1, top + 1), repeat=3):
        if m1 * m1 + n1 * n1 + m2 * m2 > x - 1:
            continue
        if (m1 * n1) % m2:
            continue
        n2 = m1 * n1 // m2
        if m1 * m1 + n1 * n1 + m2 * m2 + n2 * n2 <= x:
            count += 1
    return count


def quadruple_fit(x_grid: Sequence[int]) -> dict:
    """
    Least-squares fit count(x) = a x log x + b x.

    Returns:
        Dict with coefficients a, b, the target 3/8 and the raw counts
    """
    xs = np.asarray([int(x) for x in x_grid], dtype=np.float64)
    counts = np.asarray([quadruple_count(int(x)) for x in x_grid], dtype=np.float64)
    features = np.column_stack([xs * np.log(xs), xs])
    model = LinearRegression(fit_intercept=False)
    model.fit(features, counts)
    a, b = (float(c) for c in model.coef_)
    logger.info("quadruple fit a=%.6f b=%.6f over %s", a, b, list(x_grid))
    return {'a': a, 'b': b, 'target': 3 / 8, 'x': xs.astype(np.int64).tolist(),
            'counts': counts.astype(np.int64).tolist()}


# ============================================================================
# Congruence solutions
# ============================================================================

def _residue_hits(r: np.ndarray, x: int, p: int) -> np.ndarray:
    """#{n in [1, x] : n = r (mod p)} for residues r in [0, p)."""
    first = np.where(r == 0, p, r)
    return np.where(first > x, 0, 1 + (x - first) // p)


def congruence_count(m1: int, m2: int, x: int, p: int) -> int:
    """
    #{(n1, n2) in [1, x]^2 : m1 n1 = +-m2 n2 (mod p)}, in O(x).

    For each n1 the admissible n2 lie in the residue classes +-m1 n1 / m2.
    """
    m1, m2, x, p = int(m1), int(m2), int(x), int(p)
    if not 1 <= m1 <= m2 < p:
        raise InputError(f"parameter order violated: need 1 <= m1 <= m2 < p, got {m1}, {m2}, {p}")
    if x > p:
        raise InputError(f"x = {x} exceeds p = {p}")
    if x <= 0:
        return 0
    inverse = pow(m2, -1, p)
    n1 = np.arange(1, x + 1, dtype=np.int64)
    r = (n1 % p) * (m1 * inverse % p) % p
    # n2 = +r and n2 = -r (mod p); r = 0 is counted once
    plus = _residue_hits(r, x, p)
    minus = np.where(r == 0, 0, _residue_hits((p - r) % p, x, p))
    return int(np.sum(plus + minus))


def congruence_count_brute(m1: int, m2: int, x: int, p: int) -> int:
    return sum(1 for n1 in range(1, x + 1) for n2 in range(1, x + 1)
               if (m1 * n1 - m2 * n2) % p == 0 or (m1 * n1 + m2 * n2) % p == 0)


def congruence_bound(m1: int, m2: int, x: int, p: int) -> float:
    """(1 + x gcd/m2)(1 + x m2/(gcd p)), the shape of the congruence-solution bound."""
    g = math.gcd(m1, m2)
    return (1 + x * g / m2) * (1 + x * m2 / (g * p))


def congruence_bound_scan(p: int, x: int, pairs: Iterable[Tuple[int, int]] = None) -> pd.DataFrame:
    """
    Congruence counts against their bound; the maximum ratio is the observed constant.
    Default pairs: all 1 <= m1 <= m2 <= sqrt(p).
    """
    if pairs is None:
        top = math.isqrt(p)
        pairs = [(a, b) for b in range(1, top + 1) for a in range(1, b + 1)]
    rows = []
    for m1, m2 in pairs:
        count = congruence_count(m1, m2, x, p)
        bound = congruence_bound(m1, m2, x, p)
        rows.append({'p': p, 'x': x, 'm1': m1, 'm2': m2, 'gcd': math.gcd(m1, m2),
                     'count': count, 'bound': bound, 'ratio': count / bound})
    return pd.DataFrame(rows, columns=['p', 'x', 'm1', 'm2', 'gcd', 'count', 'bound', 'ratio'])


# ============================================================================
# Frontier scan
# ============================================================================

def _family_label(B: IntegerSet) -> str:
    if B.family == ROUGH:
        return f"rough({B.y:.4g})"
    return B.family


def energy_frontier_scan(N: int, family_grid: Iterable) -> pd.DataFrame:
    """
    Density against normalised GCD sum and energy for candidate sets in [1, N].

    Args:
        N: Upper bound
        family_grid: Items that are IntegerSets, family names, or (family, y) tuples

    Returns:
        DataFrame in grid order with alpha, E_x/(N|B|), S/|B|, R/N^2, the two
        predicted orders of R/N^2 (alpha and 1/(alpha log N)), their minimum and
        beta = log(E_x/(N|B|)) / log log N
    """
    N = int(N)
    log_n = math.log(N)
    rows = []
    for item in family_grid:
        if isinstance(item, IntegerSet):
            B = item
        elif isinstance(item, tuple):
            B = make_family(item[0], N, y=item[1])
        else:
            B = make_family(item, N)
        if len(B) == 0:
            continue
        size = len(B)
        alpha = size / N
        S = gcd_sum_fast(B)
        R = ratio_R(B, S)
        energy = energy_cross_gcd(B, N)
        energy_ratio = energy / (N * size)
        logger.info("frontier: %s has E_x/(N|B|) = %.4f", B.describe(), energy_ratio)
        beta = math.log(energy_ratio) / math.log(log_n) if log_n > 1 else math.nan
        rows.append({
            'family': _family_label(B),
            'y': B.y if B.y is not None else math.nan,
            'size': size,
            'alpha': alpha,
            'energy': energy,
            'energy_ratio': energy_ratio,
            'S_per_size': S / size,
            'R_over_N2': R / (N * N),
            'order_alpha': alpha,
            'order_inverse': 1 / (alpha * log_n),
            'predicted_order': min(alpha, 1 / (alpha * log_n)),
            'beta': beta,
        })
    return pd.DataFrame(rows, columns=['family', 'y', 'size', 'alpha', 'energy', 'energy_ratio',
                                       'S_per_size', 'R_over_N2', 'order_alpha', 'order_inverse',
                                       'predicted_order', 'beta'])


if __name__ == "__main__":
    from engines.sieve_sets import custom_set

    print("GCD / Energy Test")
    print("=" * 40)
    B = custom_set([1, 2])
    print("S({1,2}) =", gcd_sum_naive(B), gcd_sum_fast(B))
    print("E_x({1,2}, 2) =", energy_cross(B, 2), energy_cross_gcd(B, 2))
    print("quadruples(10) =", quadruple_count(10))
