"""
Mollifier Moments Module
Builds the rough-set mollifier, computes the mollified moments M1 and M2 by
character sums and by orthogonality, plain moments S_2k, and the
Cauchy-Schwarz non-vanishing census
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from config import LabConfig
from engines.char_group import (
    EVEN, ODD, CharacterGroup, build_group, check_parity, is_odd_prime,
)
from engines.gcd_energy import gcd_sum_fast
from engines.sieve_sets import IntegerSet, custom_set, rough_set
from engines.theta_engine import (
    EPS, ThetaBatch, resolve_undecided, theta_batch, truncation_point,
)
from utils.errors import InputError, ThetaLabError
from utils.fft import bluestein_dft, dft_error_bound

logger = logging.getLogger(__name__)

AUTO = "auto"
DIRECT = "direct"
CLOSED = "closed"
METHODS = (DIRECT, CLOSED)


@dataclass
class MollifierSpec:
    """
    M(chi) = sum over m in A of conj(chi(m)), with A a subset of [1, floor(sqrt(p))].
    """

    p: int
    M: int
    support: IntegerSet
    parity: str
    y: Optional[float] = None

    @property
    def degenerate(self) -> bool:
        return len(self.support) <= 1


@dataclass
class MomentEstimate:
    value: float
    error: float
    method: str
    imag: float = 0.0


@dataclass
class MomentReport:
    """Census of one parity class, with mollified moments when a mollifier is given."""

    p: int
    x: float
    parity: str
    m1: Optional[float]
    m2: Optional[float]
    s2k: Dict[int, float]
    nonvanishing: int
    undecided: int
    cs_lower_bound: Optional[float]
    closed_form_residuals: Dict[str, float] = field(default_factory=dict)
    undecided_js: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'p': self.p,
            'x': self.x,
            'parity': self.parity,
            'm1': self.m1,
            'm2': self.m2,
            's2k': {str(k): v for k, v in sorted(self.s2k.items())},
            'nonvanishing': self.nonvanishing,
            'undecided': self.undecided,
            'cs_lower_bound': self.cs_lower_bound,
        }

    def to_row(self) -> dict:
        """Flat CSV row; S_2k values become columns s2k_<k>."""
        row = self.to_dict()
        for k, v in sorted(row.pop('s2k').items()):
            row[f"s2k_{k}"] = v
        return row


# ============================================================================
# Mollifier construction
# ============================================================================

def default_sieve_parameter(p: int) -> float:
    """exp(sqrt(log p))."""
    return math.exp(math.sqrt(math.log(p)))


def build_mollifier(p: int, y: Union[float, str] = AUTO, parity: str = EVEN,
                    support: IntegerSet = None) -> MollifierSpec:
    """
    Mollifier supported on the y-rough integers up to floor(sqrt(p)).

    Args:
        p: Odd prime
        y: Sieve parameter >= 1, or 'auto' for exp(sqrt(log p))
        parity: Parity class the mollifier is used with
        support: Explicit support (a custom set inside [1, floor(sqrt(p))]); overrides y

    Returns:
        MollifierSpec
    """
    p = int(p)
    if not is_odd_prime(p):
        raise InputError(f"p = {p} is not prime" if p % 2 else f"p = {p} must be an odd prime")
    check_parity(parity)
    M = math.isqrt(p)

    if support is not None:
        if len(support) and int(support.elements[-1]) > M:
            raise InputError(f"mollifier support must lie in [1, {M}]")
        support = custom_set(support.elements.tolist(), N=M)
        return MollifierSpec(p=p, M=M, support=support, parity=parity, y=None)

    y = default_sieve_parameter(p) if y in (None, AUTO) else float(y)
    if y < 1:
        raise InputError(f"y must be >= 1 or 'auto', got {y}")
    spec = MollifierSpec(p=p, M=M, support=rough_set(M, y), parity=parity, y=y)
    if spec.degenerate:
        logger.warning("degenerate mollifier for p=%d: y=%.4g leaves A=%s", p, y,
                       spec.support.elements.tolist())
    return spec


def mollifier_values(spec: MollifierSpec, group: CharacterGroup) -> np.ndarray:
    """
    M(chi_j) for every j in [0, p-1) as one DFT of the dlog histogram of A.
    """
    if group.p != spec.p:
        raise InputError(f"group modulus {group.p} does not match mollifier modulus {spec.p}")
    counts = np.zeros(group.order, dtype=np.float64)
    if len(spec.support):
        np.add.at(counts, group.dlog[spec.support.elements].astype(np.int64), 1.0)
    return bluestein_dft(counts, sign=-1)


def _mollifier_error(spec: MollifierSpec, group: CharacterGroup) -> float:
    return dft_error_bound(group.order, math.sqrt(len(spec.support)))


def _group_for(p: int, group: CharacterGroup = None, cache=None) -> CharacterGroup:
    if group is not None:
        if group.p != p:
            raise InputError(f"group modulus {group.p} does not match p = {p}")
        return group
    if cache is not None:
        return cache.get_group(p)
    return build_group(p)


# ============================================================================
# Direct route (sums over characters)
# ============================================================================

def _check_batch(spec: MollifierSpec, batch: ThetaBatch) -> None:
    if batch.parity != spec.parity:
        raise InputError(f"theta batch parity {batch.parity} does not match mollifier parity {spec.parity}")
    if batch.p != spec.p:
        raise InputError(f"theta batch modulus {batch.p} does not match mollifier modulus {spec.p}")


def _products(spec: MollifierSpec, group: CharacterGroup, batch: ThetaBatch):
    """a_j = M(chi_j) theta(x, chi_j) with a per-entry error bound."""
    _check_batch(spec, batch)
    mv = mollifier_values(spec, group)[batch.js]
    mv_err = _mollifier_error(spec, group)
    a = mv * batch.values
    delta = np.abs(mv) * batch.radii + mv_err * (np.abs(batch.values) + batch.radii)
    return a, delta


def m1_direct(spec: MollifierSpec, group: CharacterGroup, batch: ThetaBatch) -> MomentEstimate:
    a, delta = _products(spec, group, batch)
    real = math.fsum(a.real)
    imag = math.fsum(a.imag)
    error = math.fsum(delta) + 2 * EPS * a.size * math.fsum(np.abs(a))
    if abs(imag) > error + 1e-9 * abs(real):
        logger.warning("M1 mod %d has imaginary part %.3e (bound %.3e)", spec.p, imag, error)
    return MomentEstimate(value=real, error=error, method=DIRECT, imag=imag)


def m2_direct(spec: MollifierSpec, group: CharacterGroup, batch: ThetaBatch) -> MomentEstimate:
    a, delta = _products(spec, group, batch)
    squares = a.real ** 2 + a.imag ** 2
    size = np.abs(a)
    error = math.fsum(2 * size * delta + delta ** 2) + 2 * EPS * a.size * math.fsum(squares)
    return MomentEstimate(value=math.fsum(squares), error=error, method=DIRECT)


# ============================================================================
# Closed route (orthogonality)
# ============================================================================

def _sign(parity: str) -> int:
    return 1 if parity == EVEN else -1


def _weights(p: int, x: float, parity: str, tolerance: float = None):
    """n = 1..N0 with p not dividing n, their weights w(n) e^{-pi n^2 x/p}, and the tail."""
    n0, tail, _ = truncation_point(p, x, parity, tolerance)
    n = np.arange(1, n0 + 1, dtype=np.int64)
    n = n[n % p != 0]
    w = np.exp(-math.pi * float(x) * n.astype(np.float64) ** 2 / p)
    if parity == ODD:
        w = w * n
    return n, w, tail


def m1_closed(spec: MollifierSpec, x: float) -> MomentEstimate:
    """
    (p-1)/2 sum_{m in A} sum_{n = +-m (p)} w(n) e^{-pi n^2 x/p}, with sign -1 on n = -m for odd parity.
    """
    p, half = spec.p, (spec.p - 1) / 2
    if len(spec.support) == 0:
        return MomentEstimate(value=0.0, error=0.0, method=CLOSED)
    n, w, tail = _weights(p, x, spec.parity)
    residue = np.bincount(n % p, weights=w, minlength=p)
    m = spec.support.elements
    terms = residue[m] + _sign(spec.parity) * residue[p - m]
    value = half * math.fsum(terms)
    error = half * (2 * len(m) * tail + 4 * EPS * math.fsum(np.abs(terms)) * max(1, n.size // p + 2))
    return MomentEstimate(value=value, error=error, method=CLOSED)


def m2_closed(spec: MollifierSpec, x: float) -> MomentEstimate:
    """
    (p-1)/2 sum over m1 n1 = +-m2 n2 (p) of c_m1 c_m2 w(n1) w(n2) e^{-pi (n1^2 + n2^2) x/p}.

    With U(r) = sum over m n = r (p) of w(n) e^{-pi n^2 x/p}:
    even: (p-1)/2 (sum U(r)^2 + sum U(r) U(-r)); odd: the second sum enters with a minus sign.
    """
    p, half = spec.p, (spec.p - 1) / 2
    if len(spec.support) == 0:
        return MomentEstimate(value=0.0, error=0.0, method=CLOSED)
    n, w, tail = _weights(p, x, spec.parity)
    m = spec.support.elements
    keys = (np.multiply.outer(m, n % p) % p).ravel()
    U = np.bincount(keys, weights=np.tile(w, m.size), minlength=p)
    mirrored = U[(-np.arange(p)) % p]
    value = half * (math.fsum(U * U) + _sign(spec.parity) * math.fsum(U * mirrored))

    mass = math.fsum(U)
    missing = len(m) * tail
    error = half * (4 * missing * (mass + missing)
                    + 4 * EPS * mass * mass * max(1, n.size // p + 2))
    return MomentEstimate(value=value, error=error, method=CLOSED)


# ============================================================================
# Public moment operations
# ============================================================================

def _check_method(method: str) -> str:
    if method not in METHODS:
        raise InputError(f"method must be one of {METHODS}, got {method!r}")
    return method


def moment_M1_estimate(spec: MollifierSpec, x: float = None, method: str = DIRECT,
                       group: CharacterGroup = None, batch: ThetaBatch = None,
                       threads: int = 1) -> MomentEstimate:
    x = LabConfig.DEFAULT_X if x is None else x
    if _check_method(method) == CLOSED:
        return m1_closed(spec, x)
    group = _group_for(spec.p, group)
    batch = batch or theta_batch(group, x, spec.parity, threads=threads)
    return m1_direct(spec, group, batch)


def moment_M2_estimate(spec: MollifierSpec, x: float = None, method: str = DIRECT,
                       group: CharacterGroup = None, batch: ThetaBatch = None,
                       threads: int = 1) -> MomentEstimate:
    x = LabConfig.DEFAULT_X if x is None else x
    if _check_method(method) == CLOSED:
        return m2_closed(spec, x)
    group = _group_for(spec.p, group)
    batch = batch or theta_batch(group, x, spec.parity, threads=threads)
    return m2_direct(spec, group, batch)


def moment_M1(spec: MollifierSpec, x: float = None, method: str = DIRECT, **kwargs) -> float:
    """
    Mollified first moment sum over the parity class of M(chi) theta(x, chi).

    Args:
        spec: Mollifier
        x: Positive real (default 1)
        method: 'direct' (character sum over a theta batch) or 'closed' (orthogonality)
    """
    return moment_M1_estimate(spec, x, method, **kwargs).value


def moment_M2(spec: MollifierSpec, x: float = None, method: str = DIRECT, **kwargs) -> float:
    """Mollified second moment sum over the parity class of |M(chi) theta(x, chi)|^2."""
    return moment_M2_estimate(spec, x, method, **kwargs).value


def _plain_from_batch(batch: ThetaBatch, k: int) -> float:
    if k == 0:
        return float(batch.values.size)
    return math.fsum(np.abs(batch.values) ** (2 * k))


def plain_moment(p: int, x: float = None, k: int = 1, parity: str = EVEN,
                 group: CharacterGroup = None, threads: int = 1) -> float:
    """S_2k = sum over the parity class of |theta(x, chi)|^(2k); k = 0 gives (p-1)/2."""
    k = int(k)
    if k < 0:
        raise InputError(f"k must be >= 0, got {k}")
    check_parity(parity)
    if k == 0:
        return (int(p) - 1) / 2
    x = LabConfig.DEFAULT_X if x is None else x
    group = _group_for(int(p), group)
    return _plain_from_batch(theta_batch(group, x, parity, threads=threads), k)


# ============================================================================
# Census and scans
# ============================================================================

def nonvanishing_census(p: int, x: float = None, parity: str = EVEN,
                        spec: MollifierSpec = None, group: CharacterGroup = None,
                        cache=None, ladder=None, threads: int = 1,
                        moments: Iterable[int] = (1, 2)) -> MomentReport:
    """
    Count characters of a parity with provably nonzero theta(x, chi).

    Undecided values are escalated along the precision ladder and are reported,
    never counted as zero. With a mollifier, M1, M2 and M1^2/M2 are added and the
    Cauchy-Schwarz inequality (count + undecided) M2 >= M1^2 is checked.

    Args:
        p: Odd prime
        x: Positive real (default 1)
        parity: 'even' or 'odd'
        spec: Optional mollifier of the same parity
        group: Prebuilt character group
        cache: DlogCache used when group is not given
        ladder: Precision ladder in bits
        threads: Worker threads for residue accumulation
        moments: k values of S_2k to report

    Returns:
        MomentReport
    """
    x = LabConfig.DEFAULT_X if x is None else float(x)
    check_parity(parity)
    group = _group_for(int(p), group, cache)
    # Count, escalating undecided characters
    batch = theta_batch(group, x, parity, threads=threads)
    batch, still = resolve_undecided(group, batch, ladder)

    undecided = len(still)
    nonvanishing = int(batch.js.size) - undecided
    s2k = {int(k): _plain_from_batch(batch, int(k)) for k in moments}
    report = MomentReport(p=group.p, x=x, parity=parity, m1=None, m2=None, s2k=s2k,
                          nonvanishing=nonvanishing, undecided=undecided,
                          cs_lower_bound=None, undecided_js=list(still))
    if still:
        logger.warning("p=%d: %d characters undecided after the precision ladder", group.p, undecided)

    if spec is None:
        return report

    # Mollified moments by both routes
    m1 = m1_direct(spec, group, batch)
    m2 = m2_direct(spec, group, batch)
    m1c = m1_closed(spec, x)
    m2c = m2_closed(spec, x)
    report.m1 = m1.value
    report.m2 = m2.value
    report.closed_form_residuals = {'m1': abs(m1.value - m1c.value),
                                    'm2': abs(m2.value - m2c.value)}
    report.cs_lower_bound = m1.value ** 2 / m2.value if m2.value > 0 else 0.0

    # error radii of M1^2 and (count + undecided) M2
    slack = 2 * abs(m1.value) * m1.error + m1.error ** 2 + (nonvanishing + undecided) * m2.error
    if (nonvanishing + undecided) * m2.value < m1.value ** 2 - slack:
        raise ThetaLabError(
            f"Cauchy-Schwarz violated for p={group.p}: "
            f"({nonvanishing}+{undecided}) * {m2.value!r} < {m1.value!r}^2"
        )
    logger.info("census p=%d parity=%s count=%d undecided=%d cs=%.6g",
                group.p, parity, nonvanishing, undecided, report.cs_lower_bound)
    return report


def theorem1_scan(p_list: Iterable[int], x: float = None, parity: str = EVEN,
                  y: Union[float, str] = AUTO, cache=None, threads: int = 1) -> pd.DataFrame:
    """
    Per-prime census with the mollified bound M1^2/M2, the unmollified S_2^2/S_4,
    and the normalised count count * sqrt(log p) / p.
    """
    rows = []
    for p in p_list:
        spec = build_mollifier(p, y, parity)
        report = nonvanishing_census(p, x, parity, spec=spec, cache=cache, threads=threads)
        s2, s4 = report.s2k[1], report.s2k[2]
        log_p = math.log(p)
        rows.append({
            'p': int(p),
            'count': report.nonvanishing,
            'undecided': report.undecided,
            'support_size': len(spec.support),
            'cs_lower_bound': report.cs_lower_bound,
            'baseline_cs': s2 * s2 / s4 if s4 > 0 else 0.0,
            'p_over_sqrt_log': p / math.sqrt(log_p),
            'normalized': report.nonvanishing * math.sqrt(log_p) / p,
        })
    logger.info("non-vanishing scan over %d primes", len(rows))
    return pd.DataFrame(rows, columns=['p', 'count', 'undecided', 'support_size', 'cs_lower_bound',
                                       'baseline_cs', 'p_over_sqrt_log', 'normalized'])


def moment_bound_scan(p_list: Iterable[int], x: float = None, parity: str = EVEN,
                      y: Union[float, str] = AUTO, cache=None) -> pd.DataFrame:
    """
    Empirical constants of the moment bounds.

    Columns c1 = M1 sqrt(log p)/p^{3/2}, c2 = M2 sqrt(log p)/p^2, m1_ratio = M1/(p|A|),
    structural = M2/(p|A|^2 + p^{3/2} S(A)) and gcd_prediction = sqrt(p)|A|^2/S(A)
    next to the census count.
    """
    x = LabConfig.DEFAULT_X if x is None else x
    rows = []
    for p in p_list:
        spec = build_mollifier(p, y, parity)
        size = len(spec.support)
        report = nonvanishing_census(p, x, parity, spec=spec, cache=cache)
        S = gcd_sum_fast(spec.support) if size else 0.0
        log_p = math.log(p)
        structural = p * size ** 2 + p ** 1.5 * S
        prediction = math.sqrt(p) * size ** 2 / S if S else 0.0
        rows.append({
            'p': int(p),
            'support_size': size,
            'gcd_sum': S,
            'm1': report.m1,
            'm2': report.m2,
            'c1': report.m1 * math.sqrt(log_p) / p ** 1.5,
            'c2': report.m2 * math.sqrt(log_p) / p ** 2,
            'm1_ratio': report.m1 / (p * size) if size else math.nan,
            'structural': report.m2 / structural if structural else math.nan,
            'gcd_prediction': prediction,
            'count': report.nonvanishing,
            'count_over_prediction': report.nonvanishing / prediction if prediction else math.nan,
        })
    return pd.DataFrame(rows)


def first_moment_cancellation(p: int, N_grid: Iterable[int], group: CharacterGroup = None,
                              cache=None) -> pd.DataFrame:
    """
    Mean over all p-1 characters of |sum_{n <= N} chi(n)|, and its ratio to sqrt(N).
    """
    group = _group_for(int(p), group, cache)
    rows = []
    for N in N_grid:
        N = int(N)
        if not 1 <= N <= group.p:
            raise InputError(f"N must lie in [1, p] = [1, {group.p}], got {N}")
        n = np.arange(1, min(N, group.p - 1) + 1, dtype=np.int64)
        counts = np.bincount(group.dlog[n].astype(np.int64), minlength=group.order).astype(np.float64)
        sums = bluestein_dft(counts, sign=+1)
        mean_abs = math.fsum(np.abs(sums)) / group.order
        rows.append({'p': group.p, 'N': N, 'mean_abs': mean_abs, 'ratio': mean_abs / math.sqrt(N)})
    return pd.DataFrame(rows, columns=['p', 'N', 'mean_abs', 'ratio'])


if __name__ == "__main__":
    print("Mollifier Moments Test")
    print("=" * 40)
    mol = build_mollifier(5, parity=EVEN)
    rep = nonvanishing_census(5, 1.0, EVEN, spec=mol)
    print(rep.to_dict())
    print("M1 closed =", moment_M1(mol, 1.0, CLOSED))
    print(first_moment_cancellation(5, [1, 2]))
