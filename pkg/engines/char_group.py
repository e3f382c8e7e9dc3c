"""
Character Group Module
Multiplicative group mod p: primitive root, discrete logarithms and Dirichlet characters
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import sympy

from config import LabConfig
from utils.errors import InputError, MemoryBudgetError

logger = logging.getLogger(__name__)

EVEN = "even"
ODD = "odd"
PARITIES = (EVEN, ODD)

DLOG_ENTRY_BYTES = 4     # uint32
POWER_ENTRY_BYTES = 8    # int64
ROOT_ENTRY_BYTES = 16    # complex128


def is_odd_prime(n: int) -> bool:
    """Deterministic primality for 64-bit inputs (sympy), restricted to odd primes."""
    return isinstance(n, (int, np.integer)) and n > 2 and bool(sympy.isprime(int(n)))


def check_parity(parity: str) -> str:
    if parity not in PARITIES:
        raise InputError(f"parity must be 'even' or 'odd', got {parity!r}")
    return parity


def _require_odd_prime(p) -> int:
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)):
        raise InputError(f"modulus must be an integer, got {p!r}")
    p = int(p)
    if p % 2 == 0:
        raise InputError(f"modulus {p} is even; an odd prime is required")
    if not is_odd_prime(p):
        raise InputError(f"modulus {p} is not prime")
    return p


def find_primitive_root(p: int) -> int:
    """
    Smallest generator of (Z/pZ)^*.

    Args:
        p: Odd prime

    Returns:
        Smallest g in [2, p-1] with g^((p-1)/q) != 1 for every prime q | p-1
    """
    p = _require_odd_prime(p)
    order = p - 1
    cofactors = [order // q for q in sympy.primefactors(order)]
    for g in range(2, p):
        if all(pow(g, e, p) != 1 for e in cofactors):
            return g
    raise InputError(f"no primitive root found mod {p}")  # unreachable for primes


@dataclass(frozen=True, eq=False)
class CharacterGroup:
    """
    The group of Dirichlet characters mod an odd prime p.

    chi_j(n) = exp(2*pi*i * j * dlog[n] / (p-1)) for p not dividing n, 0 otherwise.
    Immutable after construction, so a single instance can be shared by readers.
    """

    p: int
    g: int
    dlog: np.ndarray = field(repr=False)      # dlog[n] for n in [0, p); dlog[0] unused
    powers: np.ndarray = field(repr=False)    # powers[k] = g^k mod p, k in [0, p-1)
    roots: np.ndarray = field(repr=False)     # exp(2*pi*i*k/(p-1))

    @property
    def order(self) -> int:
        return self.p - 1

    def characters(self, parity: Optional[str] = None) -> List[int]:
        return parity_indices(self, parity)


def group_table_bytes(p: int) -> dict:
    """Bytes of each table a group mod p holds: dlog (p entries), powers and roots (p-1 each)."""
    return {
        'dlog': DLOG_ENTRY_BYTES * p,
        'powers': POWER_ENTRY_BYTES * (p - 1),
        'roots': ROOT_ENTRY_BYTES * (p - 1),
    }


def build_group(p: int, memory_budget: int = None) -> CharacterGroup:
    """
    Build the dlog table of (Z/pZ)^* by walking the powers of the primitive root.

    Args:
        p: Odd prime
        memory_budget: Byte cap for the dlog, powers and roots tables together

    Returns:
        CharacterGroup with dlog[1] = 0 and dlog[g] = 1
    """
    p = _require_odd_prime(p)
    budget = LabConfig.DLOG_MEMORY_BUDGET if memory_budget is None else memory_budget
    tables = group_table_bytes(p)
    required = sum(tables.values())
    if required > budget:
        parts = ", ".join(f"{name} {size}" for name, size in tables.items())
        raise MemoryBudgetError(f"group tables for p={p} ({parts})", required, budget)

    g = find_primitive_root(p)
    order = p - 1

    # Walk g^k mod p once
    powers = np.empty(order, dtype=np.int64)
    value = 1
    for k in range(order):
        powers[k] = value
        value = (value * g) % p

    # Invert the walk into the dlog table
    dlog = np.zeros(p, dtype=np.uint32)
    dlog[powers] = np.arange(order, dtype=np.uint32)

    # Roots of unity shared by every character
    roots = np.exp(2j * np.pi * np.arange(order) / order)
    logger.debug("built character group p=%d g=%d", p, g)
    return _freeze(CharacterGroup(p=p, g=g, dlog=dlog, powers=powers, roots=roots))


def group_from_table(p: int, dlog: np.ndarray) -> CharacterGroup:
    """
    Rebuild a group from a stored dlog table, re-checking its invariants.

    Args:
        p: Odd prime
        dlog: Array of length p (entry 0 ignored) or p-1 (entries for n = 1..p-1)

    Returns:
        CharacterGroup
    """
    p = _require_odd_prime(p)
    order = p - 1
    table = np.asarray(dlog, dtype=np.uint32)
    if table.shape[0] == order:
        table = np.concatenate([np.zeros(1, dtype=np.uint32), table])
    if table.shape[0] != p:
        raise InputError(f"dlog table for p={p} has {table.shape[0]} entries")

    # Must be a permutation of [0, p-2]
    if not np.array_equal(np.sort(table[1:]), np.arange(order, dtype=np.uint32)):
        raise InputError(f"dlog table for p={p} is not a bijection onto [0, p-2]")
    powers = np.empty(order, dtype=np.int64)
    powers[table[1:].astype(np.int64)] = np.arange(1, p, dtype=np.int64)
    g = int(powers[1]) if order > 1 else 1
    if g != find_primitive_root(p):
        raise InputError(f"dlog table for p={p} is not based on the smallest primitive root")

    roots = np.exp(2j * np.pi * np.arange(order) / order)
    return _freeze(CharacterGroup(p=p, g=g, dlog=table, powers=powers, roots=roots))


def _freeze(group: CharacterGroup) -> CharacterGroup:
    for arr in (group.dlog, group.powers, group.roots):
        arr.setflags(write=False)
    return group


def check_index(group: CharacterGroup, j: int) -> int:
    if not 0 <= int(j) < group.order:
        raise InputError(f"character index {j} outside [0, {group.order - 1}]")
    return int(j)


def parity_of(j: int) -> str:
    return EVEN if j % 2 == 0 else ODD


def parity_indices(group: CharacterGroup, parity: Optional[str] = None) -> List[int]:
    """Character indices of the given parity (all characters when parity is None)."""
    if parity is None:
        return list(range(group.order))
    start = 0 if check_parity(parity) == EVEN else 1
    return list(range(start, group.order, 2))


def character_value(group: CharacterGroup, j: int, n: int) -> complex:
    """
    Evaluate chi_j(n).

    Args:
        group: Character group mod p
        j: Character index in [0, p-2]
        n: Non-negative integer

    Returns:
        Root of unity for gcd(n, p) = 1, else 0
    """
    j = check_index(group, j)
    r = int(n) % group.p
    if r == 0:
        return 0j
    k = (j * int(group.dlog[r])) % group.order
    return complex(group.roots[k])


def character_table(group: CharacterGroup, j: int) -> np.ndarray:
    """chi_j(r) for every residue r in [0, p), with chi_j(0) = 0."""
    j = check_index(group, j)
    idx = (j * group.dlog.astype(np.int64)) % group.order
    table = group.roots[idx].copy()
    table[0] = 0
    return table


def character_values(group: CharacterGroup, j: int, n: np.ndarray) -> np.ndarray:
    """Vectorised chi_j over an integer array."""
    return character_table(group, j)[np.asarray(n, dtype=np.int64) % group.p]


def orthogonality_sum(group: CharacterGroup, m: int, n: int, parity: str) -> float:
    """
    Sum of chi(m) * conj(chi(n)) over the characters of one parity, by direct summation.

    Even: (p-1)/2 if m = +-n (mod p) and gcd(m, p) = 1, else 0.
    Odd:  +(p-1)/2 if n = m, -(p-1)/2 if n = -m, else 0.

    Args:
        group: Character group mod p
        m, n: Integers
        parity: 'even' or 'odd'

    Returns:
        The real part of the sum; the imaginary part is checked to vanish
    """
    check_parity(parity)
    p, order = group.p, group.order
    if m % p == 0 or n % p == 0:
        return 0.0
    js = np.asarray(parity_indices(group, parity), dtype=np.int64)
    diff = int(group.dlog[m % p]) - int(group.dlog[n % p])
    terms = group.roots[(js * diff) % order]
    real = math.fsum(terms.real)
    imag = math.fsum(terms.imag)
    tolerance = 1e-9 * p
    if abs(imag) > tolerance:
        raise ArithmeticError(
            f"orthogonality sum for p={p}, m={m}, n={n} has imaginary part {imag:.3e}"
        )
    return real


def full_orthogonality_sum(group: CharacterGroup, m: int, n: int) -> complex:
    """Sum of chi(m) * conj(chi(n)) over all p-1 characters."""
    p, order = group.p, group.order
    if m % p == 0 or n % p == 0:
        return 0j
    diff = int(group.dlog[m % p]) - int(group.dlog[n % p])
    terms = group.roots[(np.arange(order, dtype=np.int64) * diff) % order]
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def orthogonality_closed_form(p: int, m: int, n: int, parity: str) -> float:
    """Closed form of orthogonality_sum, used as its oracle."""
    check_parity(parity)
    if m % p == 0 or n % p == 0:
        return 0.0
    half = (p - 1) / 2
    same = (m - n) % p == 0
    opposite = (m + n) % p == 0
    if parity == EVEN:
        return half if (same or opposite) else 0.0
    if same:
        return half
    if opposite:
        return -half
    return 0.0


def orthogonality_matrix(group: CharacterGroup, parity: str) -> np.ndarray:
    """
    orthogonality_sum for every (m, n) in [1, p]^2 at once; entry [m-1, n-1].

    The sum depends only on r = dlog m - dlog n (mod p-1), so the direct sum over
    the characters is taken once per r and gathered.
    """
    check_parity(parity)
    p, order = group.p, group.order
    js = np.asarray(parity_indices(group, parity), dtype=np.int64)
    r = np.arange(order, dtype=np.int64)
    terms = group.roots[np.multiply.outer(js, r) % order]
    by_difference = terms.sum(axis=0)
    if np.abs(by_difference.imag).max() > 1e-9 * p:
        raise ArithmeticError(f"orthogonality sums for p={p} have a non-vanishing imaginary part")

    residues = np.arange(1, p + 1, dtype=np.int64) % p
    logs = group.dlog[residues].astype(np.int64)
    table = by_difference.real[np.subtract.outer(logs, logs) % order]
    table[residues == 0, :] = 0.0
    table[:, residues == 0] = 0.0
    return table


def orthogonality_closed_form_matrix(p: int, parity: str) -> np.ndarray:
    """orthogonality_closed_form for every (m, n) in [1, p]^2; entry [m-1, n-1]."""
    check_parity(parity)
    m = np.arange(1, p + 1, dtype=np.int64)
    same = np.subtract.outer(m, m) % p == 0
    opposite = np.add.outer(m, m) % p == 0
    half = (p - 1) / 2
    if parity == EVEN:
        table = np.where(same | opposite, half, 0.0)
    else:
        table = np.where(same, half, np.where(opposite, -half, 0.0))
    units = m % p != 0
    return table * np.outer(units, units)


if __name__ == "__main__":
    grp = build_group(5)
    print("Character Group Test")
    print("=" * 40)
    print(f"p={grp.p} g={grp.g} dlog={list(grp.dlog[1:])}")
    for jj in range(grp.order):
        values = [character_value(grp, jj, nn) for nn in range(1, grp.p)]
        print(f"  chi_{jj}: {np.round(values, 6)}")
    print("sum_even(2,3) =", orthogonality_sum(grp, 2, 3, EVEN))
