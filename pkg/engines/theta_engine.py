"""
Theta Engine Module
Evaluates theta(x, chi) one character at a time or for a whole parity class at once,
with rigorous error radii, root numbers and functional-equation checks
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Tuple

import mpmath
import numpy as np
import pandas as pd

from config import LabConfig
from engines.char_group import (
    EVEN, ODD, CharacterGroup, character_values, check_index, check_parity,
    parity_indices, parity_of,
)
from utils.errors import InputError, UndecidedError
from utils.fft import bluestein_dft, dft_error_bound
from utils.precision import DOUBLE_BITS, escalate, ulp_bound

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)
NONZERO = "nonzero"
UNDECIDED = "undecided"


@dataclass
class ThetaValue:
    """A theta value together with a bound on |true - computed|."""

    value: complex
    error_radius: float
    truncation_N: int
    x: float
    j: int
    parity: str
    precision_bits: int = DOUBLE_BITS


@dataclass
class RootNumber:
    """W_chi = theta(1, chi) / conj(theta(1, chi)), when theta(1, chi) is provably nonzero."""

    w: complex
    j: int
    defined: bool
    error: float = math.inf


@dataclass
class FunctionalEquationCheck:
    j: int
    x: float
    residual: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.bound


@dataclass
class ThetaBatch:
    """theta(x, chi_j) for every j of one parity, as parallel arrays."""

    p: int
    x: float
    parity: str
    js: np.ndarray
    values: np.ndarray
    radii: np.ndarray
    truncation_N: int

    def to_list(self) -> List[ThetaValue]:
        return [
            ThetaValue(value=complex(v), error_radius=float(r), truncation_N=self.truncation_N,
                       x=self.x, j=int(j), parity=self.parity)
            for j, v, r in zip(self.js, self.values, self.radii)
        ]

    def undecided(self) -> np.ndarray:
        return np.abs(self.values) <= self.radii


# ============================================================================
# Truncation
# ============================================================================

def _check_x(x: float) -> float:
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise InputError(f"x must be a positive real, got {x}")
    return x


def tail_bound(p: int, x: float, parity: str, n0: int) -> float:
    """
    Geometric bound on sum_{n >= n0} w(n) exp(-pi n^2 x / p), w(n) = 1 (even) or n (odd).
    """
    a = math.pi * x / p
    lead = math.exp(-a * n0 * n0)
    if parity == EVEN:
        return lead / -math.expm1(-a * (2 * n0 + 1))
    ratio = (1.0 + 1.0 / n0) * math.exp(-a * (2 * n0 + 1))
    if ratio >= 1.0:
        return math.inf
    return n0 * lead / (1.0 - ratio)


def max_summand(p: int, x: float, parity: str) -> float:
    a = math.pi * x / p
    if parity == EVEN:
        return math.exp(-a)
    peak = math.sqrt(p / (2 * math.pi * x))
    candidates = {max(1, math.floor(peak)), max(1, math.ceil(peak))}
    return max(n * math.exp(-a * n * n) for n in candidates)


def truncation_point(p: int, x: float, parity: str,
                     tolerance: float = None) -> Tuple[int, float, float]:
    """
    Smallest N0 whose tail bound is below tolerance times the largest summand.

    Args:
        p: Modulus
        x: Positive real
        parity: 'even' (weight 1) or 'odd' (weight n)
        tolerance: Relative tail target (default LabConfig.TRUNCATION_TOLERANCE)

    Returns:
        (N0, tail bound at N0, largest summand)
    """
    x = _check_x(x)
    check_parity(parity)
    tolerance = LabConfig.TRUNCATION_TOLERANCE if tolerance is None else tolerance
    target = tolerance * max_summand(p, x, parity)

    hi = 1
    while tail_bound(p, x, parity, hi) >= target:
        hi *= 2
    lo = max(1, hi // 2)
    if tail_bound(p, x, parity, lo) < target:
        return lo, tail_bound(p, x, parity, lo), target / tolerance
    # invariant: tail(lo) >= target > tail(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(p, x, parity, mid) < target:
            hi = mid
        else:
            lo = mid
    logger.debug("truncation p=%d x=%g parity=%s N0=%d", p, x, parity, hi)
    return hi, tail_bound(p, x, parity, hi), target / tolerance


def _weighted_decay(p: int, x: float, parity: str, n: np.ndarray) -> np.ndarray:
    decay = np.exp(-math.pi * x * (n.astype(np.float64) ** 2) / p)
    if parity == ODD:
        decay = decay * n
    return decay


def _check_parity_match(j: int, parity: str) -> None:
    if parity_of(j) != parity:
        raise InputError(f"character {j} is {parity_of(j)}, requested parity {parity}")


# ============================================================================
# Single-character evaluation
# ============================================================================

def theta_direct(group: CharacterGroup, j: int, x: float, parity: str,
                 tolerance: float = None) -> ThetaValue:
    """
    Evaluate theta(x, chi_j) by truncated summation in ascending n.

    Args:
        group: Character group mod p
        j: Character index, with parity matching j mod 2
        x: Positive real
        parity: 'even' for sum chi(n) e^{-pi n^2 x/p}, 'odd' for sum n chi(n) e^{...}
        tolerance: Relative truncation target

    Returns:
        ThetaValue whose radius covers truncation and rounding
    """
    x = _check_x(x)
    check_parity(parity)
    j = check_index(group, j)
    _check_parity_match(j, parity)

    n0, tail, _ = truncation_point(group.p, x, parity, tolerance)
    n = np.arange(1, n0 + 1, dtype=np.int64)
    weights = _weighted_decay(group.p, x, parity, n)
    terms = weights * character_values(group, j, n)

    value = complex(math.fsum(terms.real), math.fsum(terms.imag))
    abs_sum = math.fsum(weights[n % group.p != 0])
    radius = tail + 8 * EPS * abs_sum + EPS * abs(value)
    return ThetaValue(value=value, error_radius=radius, truncation_N=n0, x=x, j=j, parity=parity)


def theta_direct_mp(group: CharacterGroup, j: int, x: float, parity: str,
                    prec_bits: int) -> ThetaValue:
    """
    Evaluate theta(x, chi_j) with an mpmath mantissa of prec_bits.

    The truncation target is tightened to the working precision so the radius
    shrinks along with the rounding error.
    """
    x = _check_x(x)
    check_parity(parity)
    j = check_index(group, j)
    _check_parity_match(j, parity)

    unit = ulp_bound(prec_bits)
    n0, tail, _ = truncation_point(group.p, x, parity, tolerance=max(unit, 1e-300))
    p, order = group.p, group.order

    with mpmath.workprec(int(prec_bits)):
        scale = mpmath.pi * mpmath.mpf(x) / p
        re_terms, im_terms, abs_terms = [], [], []
        for n in range(1, n0 + 1):
            if n % p == 0:
                continue
            weight = mpmath.exp(-scale * n * n)
            if parity == ODD:
                weight *= n
            k = (j * int(group.dlog[n % p])) % order
            chi = mpmath.expjpi(mpmath.mpf(2 * k) / order)
            re_terms.append(weight * chi.real)
            im_terms.append(weight * chi.imag)
            abs_terms.append(weight)
        value = complex(float(mpmath.fsum(re_terms)), float(mpmath.fsum(im_terms)))
        abs_sum = float(mpmath.fsum(abs_terms))

    # the final rounding to double costs at most one ulp of the value
    radius = tail + 8 * unit * abs_sum + EPS * abs(value)
    return ThetaValue(value=value, error_radius=radius, truncation_N=n0, x=x, j=j,
                      parity=parity, precision_bits=int(prec_bits))


def is_nonzero(tv: ThetaValue) -> str:
    """'nonzero' when |value| exceeds the error radius, 'undecided' otherwise. Never 'zero'."""
    return NONZERO if abs(tv.value) > tv.error_radius else UNDECIDED


def decide(group: CharacterGroup, j: int, x: float, parity: str,
           ladder=None) -> ThetaValue:
    """Evaluate theta(x, chi_j), climbing the precision ladder until it is provably nonzero."""
    ladder = LabConfig.PRECISION_LADDER if ladder is None else ladder

    def evaluate(bits):
        if bits <= DOUBLE_BITS:
            return theta_direct(group, j, x, parity)
        return theta_direct_mp(group, j, x, parity, bits)

    tv, bits = escalate(evaluate, lambda t: is_nonzero(t) == NONZERO, ladder)
    if bits is None:
        logger.warning("theta(%g, chi_%d) mod %d undecided after %s bits", x, j, group.p, ladder[-1])
    return tv


# ============================================================================
# Whole-family evaluation
# ============================================================================

def _residue_weights(p: int, x: float, parity: str, n0: int, threads: int) -> np.ndarray:
    """W(r) = sum of w(n) e^{-pi n^2 x/p} over n <= N0 with n = r (mod p)."""
    bounds = np.linspace(1, n0 + 1, num=max(1, threads) + 1, dtype=np.int64)
    chunks = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    def accumulate(chunk):
        lo, hi = chunk
        n = np.arange(lo, hi, dtype=np.int64)
        return np.bincount(n % p, weights=_weighted_decay(p, x, parity, n), minlength=p)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(accumulate, chunks))
    else:
        partials = [accumulate(c) for c in chunks]

    # Merge in chunk order
    total = np.zeros(p, dtype=np.float64)
    for part in partials:
        total += part
    return total


def theta_batch(group: CharacterGroup, x: float, parity: str,
                threads: int = 1, tolerance: float = None) -> ThetaBatch:
    """
    theta(x, chi_j) for all j of a parity via a length-(p-1) DFT.

    theta(x, chi_j) = sum_k omega^{jk} W(g^k), omega = exp(2 pi i/(p-1)),
    computed with the chirp-z transform since p-1 is rarely smooth.
    """
    x = _check_x(x)
    check_parity(parity)
    p, order = group.p, group.order

    # Fold the truncated series into residue classes mod p
    n0, tail, _ = truncation_point(p, x, parity, tolerance)
    residues = _residue_weights(p, x, parity, n0, threads)
    residues[0] = 0.0  # chi vanishes on multiples of p

    # Reindex by discrete log, then one DFT gives every character
    a = residues[group.powers]
    spectrum = bluestein_dft(a, sign=+1)

    js = np.asarray(parity_indices(group, parity), dtype=np.int64)
    values = spectrum[js]

    # Truncation, accumulation, DFT and final rounding
    abs_sum = math.fsum(a)
    per_bin = n0 // p + 2 + max(1, threads)
    radius = (tail + per_bin * EPS * abs_sum
              + dft_error_bound(order, float(np.linalg.norm(a)))
              + 2 * EPS * np.abs(values))
    radii = np.broadcast_to(radius, values.shape).astype(np.float64)
    logger.debug("theta batch p=%d x=%g parity=%s N0=%d", p, x, parity, n0)
    return ThetaBatch(p=p, x=x, parity=parity, js=js, values=values, radii=radii,
                      truncation_N=n0)


def theta_all(group: CharacterGroup, x: float, parity: str, threads: int = 1) -> List[ThetaValue]:
    """One ThetaValue per character of the parity, ordered by j."""
    return theta_batch(group, x, parity, threads=threads).to_list()


def resolve_undecided(group: CharacterGroup, batch: ThetaBatch, ladder=None) -> Tuple[ThetaBatch, List[int]]:
    """
    Re-evaluate the undecided entries of a batch along the precision ladder.

    Returns:
        (updated batch, indices j still undecided after the full ladder)
    """
    ladder = LabConfig.PRECISION_LADDER if ladder is None else tuple(ladder)
    positions = np.flatnonzero(batch.undecided())
    if positions.size == 0:
        return batch, []

    values = batch.values.copy()
    radii = batch.radii.copy()
    still = []
    for pos in positions:
        j = int(batch.js[pos])
        logger.info("escalating precision for chi_%d mod %d", j, group.p)
        tv = decide(group, j, batch.x, batch.parity, ladder)
        values[pos] = tv.value
        radii[pos] = tv.error_radius
        if is_nonzero(tv) != NONZERO:
            still.append(j)
    updated = ThetaBatch(p=batch.p, x=batch.x, parity=batch.parity, js=batch.js,
                         values=values, radii=radii, truncation_N=batch.truncation_N)
    return updated, still


# ============================================================================
# Root numbers and the functional equation
# ============================================================================

def conjugate_index(group: CharacterGroup, j: int) -> int:
    return (-j) % group.order


def root_number(group: CharacterGroup, j: int) -> RootNumber:
    """
    W_chi = theta(1, chi) / conj(theta(1, chi)) for a non-trivial character.
    """
    j = check_index(group, j)
    if j == 0:
        raise InputError("root number is only defined for non-trivial characters")
    tv = theta_direct(group, j, 1.0, parity_of(j))
    size = abs(tv.value)
    if size <= tv.error_radius:
        return RootNumber(w=complex("nan"), j=j, defined=False)
    w = tv.value / tv.value.conjugate()
    # |w| = 1 with arg w = 2 arg theta; the arg moves by at most asin(r/|theta|)
    error = 2.0 * tv.error_radius / (size - tv.error_radius) + 4 * EPS
    return RootNumber(w=w, j=j, defined=True, error=error)


def functional_equation_exponent(parity: str) -> float:
    return 0.5 if check_parity(parity) == EVEN else 1.5


def functional_equation_check(group: CharacterGroup, j: int, x: float) -> FunctionalEquationCheck:
    """
    Compare theta(x, chi) with W x^{-e} theta(1/x, conj chi), e = 1/2 (even) or 3/2 (odd).

    Raises:
        UndecidedError: theta(1, chi) cannot be separated from 0
    """
    x = _check_x(x)
    j = check_index(group, j)
    if j == 0:
        raise InputError("functional equation is only checked for non-trivial characters")
    rn = root_number(group, j)
    if not rn.defined:
        raise UndecidedError(f"undecided: theta(1, chi_{j}) mod {group.p} not separated from 0")

    parity = parity_of(j)
    scale = x ** -functional_equation_exponent(parity)
    lhs = theta_direct(group, j, x, parity)
    rhs = theta_direct(group, conjugate_index(group, j), 1.0 / x, parity)

    predicted = rn.w * scale * rhs.value
    residual = abs(lhs.value - predicted)
    bound = (lhs.error_radius
             + scale * (abs(rhs.value) * rn.error + rhs.error_radius)
             + 4 * EPS * (abs(lhs.value) + abs(predicted)))
    return FunctionalEquationCheck(j=j, x=x, residual=residual, bound=bound)


def functional_equation_residual(group: CharacterGroup, j: int, x: float) -> float:
    """|theta(x, chi) - W x^{-e} theta(1/x, conj chi)|; see functional_equation_check."""
    return functional_equation_check(group, j, x).residual


def root_number_scan(group: CharacterGroup) -> pd.DataFrame:
    """|W|, arg W and definedness for every non-trivial character."""
    rows = []
    for j in range(1, group.order):
        rn = root_number(group, j)
        rows.append({
            'j': j,
            'parity': parity_of(j),
            'defined': rn.defined,
            'abs_w': abs(rn.w) if rn.defined else math.nan,
            'arg_w': math.atan2(rn.w.imag, rn.w.real) if rn.defined else math.nan,
            'error': rn.error,
        })
    return pd.DataFrame(rows, columns=['j', 'parity', 'defined', 'abs_w', 'arg_w', 'error'])


if __name__ == "__main__":
    from engines.char_group import build_group

    grp = build_group(5)
    print("Theta Engine Test")
    print("=" * 40)
    for jj in range(grp.order):
        tv = theta_direct(grp, jj, 1.0, parity_of(jj))
        print(f"theta(1, chi_{jj}) = {tv.value:.6f} +- {tv.error_radius:.1e} ({is_nonzero(tv)})")
