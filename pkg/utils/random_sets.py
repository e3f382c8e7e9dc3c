"""
Random Instance Generator for the Theta Laboratory
Generates seeded integer sets and primes for oracle comparisons
"""

from typing import List

import numpy as np

from engines.sieve_sets import (
    IntegerSet, all_integers, custom_set, primes_up_to, rough_set, small_primes,
)


def generate_integer_sets(num_sets: int = 100, max_N: int = 300, seed: int = 42) -> List[IntegerSet]:
    """
    Generate random small integer sets of mixed families.

    Args:
        num_sets: Number of sets to generate (default: 100)
        max_N: Largest upper bound N (default: 300)
        seed: Generator seed (default: 42)

    Returns:
        List of IntegerSets: random subsets, rough sets, primes and full intervals
    """
    rng = np.random.default_rng(seed)
    sets = []
    for i in range(num_sets):
        N = int(rng.integers(2, max_N + 1))
        kind = i % 4
        if kind == 0:
            # Bernoulli subset with density between 5% and 60%
            density = rng.uniform(0.05, 0.6)
            chosen = np.flatnonzero(rng.random(N) < density) + 1
            if chosen.size == 0:
                chosen = np.array([1])
            sets.append(custom_set(chosen.tolist(), N=N))
        elif kind == 1:
            sets.append(rough_set(N, float(rng.uniform(1.0, 12.0))))
        elif kind == 2:
            sets.append(primes_up_to(N))
        else:
            sets.append(all_integers(N))
    return sets


def random_primes(count: int, lo: int, hi: int, seed: int = 42) -> List[int]:
    """Distinct odd primes drawn uniformly from [lo, hi], returned sorted."""
    pool = small_primes(hi)
    pool = pool[(pool >= max(lo, 3))]
    rng = np.random.default_rng(seed)
    count = min(count, pool.size)
    return sorted(int(q) for q in rng.choice(pool, size=count, replace=False))
