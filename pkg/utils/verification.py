"""
Property Verification
Runs the laboratory's exactness, dual-route, trend and oracle checks and
collects their metrics
"""

import logging
import math
import time
from typing import Callable, Dict, List

import numpy as np

from engines.char_group import (
    EVEN, PARITIES, build_group, orthogonality_closed_form_matrix, orthogonality_matrix,
)
from engines.gcd_energy import (
    energy_cross, energy_cross_brute, energy_cross_gcd, energy_self, energy_self_brute,
    gcd_sum_fast, gcd_sum_naive, quadruple_fit, ratio_R,
)
from engines.mollifier_moments import (
    build_mollifier, m1_closed, m1_direct, m2_closed, m2_direct, nonvanishing_census,
    theorem1_scan,
)
from engines.sieve_sets import (
    ROUGH, IntegerSet, all_integers, brun_ratio_scan, custom_set, gcd_dichotomy_exceptions,
    make_family, primes_up_to, rough_set, rough_set_brute, small_primes,
)
from engines.theta_engine import functional_equation_check, root_number, theta_batch
from utils.errors import ThetaLabError, UndecidedError
from utils.random_sets import generate_integer_sets

logger = logging.getLogger(__name__)

# Reference values for p = 5, x = 1, even parity, A = {1}
P5_REFERENCE = {
    'theta_0': 0.618034,
    'theta_2': 0.449028,
    'm1': 1.067062,
    'm2': 0.583592,
    'cs_lower_bound': 1.951057,
}


def odd_primes(lo: int, hi: int) -> List[int]:
    return [int(q) for q in small_primes(hi) if q >= max(lo, 3)]


def relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


class PropertyVerifier:
    """
    Evaluates the laboratory's invariants and collects per-check metrics.
    quick=True shrinks every range so the whole suite runs in seconds.
    """

    def __init__(self, quick: bool = False, cache=None):
        self.quick = quick
        self.cache = cache
        self.results = {}
        self._groups = {}

    def _group(self, p: int):
        if p not in self._groups:
            self._groups[p] = self.cache.get_group(p) if self.cache else build_group(p)
        return self._groups[p]

    def _record(self, key: str, name: str, passed: bool, metrics: dict, started: float) -> dict:
        result = {
            'check': name,
            'passed': bool(passed),
            'metrics': metrics,
            'seconds': round(time.perf_counter() - started, 3),
        }
        self.results[key] = result
        logger.info("%s: %s %s", name, "PASS" if passed else "FAIL", metrics)
        return result

    def check_orthogonality(self, p_max: int = None) -> dict:
        """Direct character sums against their closed forms for all (m, n) in [1, p]^2."""
        started = time.perf_counter()
        p_max = p_max or (31 if self.quick else 199)
        worst = 0.0
        failures = 0
        for p in odd_primes(3, p_max):
            group = self._group(p)
            for parity in PARITIES:
                gap = np.abs(orthogonality_matrix(group, parity)
                             - orthogonality_closed_form_matrix(p, parity))
                worst = max(worst, float(gap.max()) / p)
                failures += int(np.count_nonzero(gap >= 1e-9 * p))
        return self._record('orthogonality', 'Orthogonality exactness', failures == 0,
                            {'p_max': p_max, 'max_error_over_p': worst, 'failures': failures},
                            started)

    def check_functional_equation(self, p_max: int = None, xs=(0.5, 2.0)) -> dict:
        """Residuals within error radii and |W| = 1 for every non-trivial character."""
        started = time.perf_counter()
        p_max = p_max or (61 if self.quick else 499)
        mismatches, undecided, worst_w = 0, 0, 0.0
        for p in odd_primes(5, p_max):
            group = self._group(p)
            for j in range(1, group.order):
                rn = root_number(group, j)
                if not rn.defined:
                    undecided += 1
                    continue
                worst_w = max(worst_w, abs(abs(rn.w) - 1.0))
                for x in xs:
                    try:
                        check = functional_equation_check(group, j, x)
                    except UndecidedError:
                        undecided += 1
                        continue
                    mismatches += not check.ok
        passed = mismatches == 0 and undecided == 0 and worst_w <= 1e-8
        return self._record('functional_equation', 'Functional equation', passed,
                            {'p_max': p_max, 'mismatches': mismatches, 'undecided': undecided,
                             'max_abs_w_minus_1': worst_w}, started)

    def _supports(self, p: int) -> Dict[str, IntegerSet]:
        M = math.isqrt(p)
        return {
            'empty': custom_set([], N=M),
            'one': custom_set([1], N=M),
            'rough': build_mollifier(p).support,
            'full': rough_set(M, 1.0),
        }

    def check_dual_route(self, p_max: int = None, x: float = 1.0) -> dict:
        """M1 and M2 by character sums against their orthogonality closed forms."""
        started = time.perf_counter()
        p_max = p_max or (61 if self.quick else 499)
        worst = 0.0
        for p in odd_primes(3, p_max):
            group = self._group(p)
            for parity in PARITIES:
                batch = theta_batch(group, x, parity)
                for support in self._supports(p).values():
                    spec = build_mollifier(p, parity=parity, support=support)
                    worst = max(worst,
                                relative_gap(m1_direct(spec, group, batch).value, m1_closed(spec, x).value),
                                relative_gap(m2_direct(spec, group, batch).value, m2_closed(spec, x).value))
        return self._record('dual_route', 'Dual-route moments', worst <= 1e-9,
                            {'p_max': p_max, 'max_relative_gap': worst}, started)

    def check_p5_fixture(self) -> dict:
        """Census at p = 5 against the tabulated reference values."""
        started = time.perf_counter()
        group = self._group(5)
        spec = build_mollifier(5, support=custom_set([1], N=2))
        report = nonvanishing_census(5, 1.0, EVEN, spec=spec, group=group)
        batch = theta_batch(group, 1.0, EVEN)
        observed = {
            'theta_0': float(batch.values[0].real),
            'theta_2': float(batch.values[1].real),
            'm1': report.m1,
            'm2': report.m2,
            'cs_lower_bound': report.cs_lower_bound,
        }
        worst = max(abs(observed[k] - v) for k, v in P5_REFERENCE.items())
        passed = worst <= 1e-4 and report.nonvanishing == 2 and report.cs_lower_bound <= 2
        return self._record('p5_fixture', 'p=5 fixture', passed,
                            {'max_abs_error': worst, 'count': report.nonvanishing}, started)

    def check_nonvanishing_trend(self, lo: int = 1000, hi: int = None) -> dict:
        """count sqrt(log p)/p >= 0.5, count >= floor(M1^2/M2) and nothing undecided."""
        started = time.perf_counter()
        hi = hi or (1100 if self.quick else 10000)
        try:
            table = theorem1_scan(odd_primes(lo, hi), 1.0, EVEN, cache=self.cache)
        except ThetaLabError as exc:
            return self._record('nonvanishing_trend', 'Non-vanishing trend', False, {'error': str(exc)}, started)
        below_cs = int((table['count'] < np.floor(table['cs_lower_bound'])).sum())
        metrics = {
            'primes': int(len(table)),
            'min_normalized': float(table['normalized'].min()),
            'below_cs': below_cs,
            'undecided': int(table['undecided'].sum()),
        }
        passed = metrics['min_normalized'] >= 0.5 and below_cs == 0 and metrics['undecided'] == 0
        return self._record('nonvanishing_trend', 'Non-vanishing trend', passed, metrics, started)

    def check_quadruple_fit(self, x_grid=(10 ** 4, 10 ** 5, 10 ** 6)) -> dict:
        started = time.perf_counter()
        fit = quadruple_fit(x_grid)
        return self._record('quadruple_fit', 'Quadruple asymptotic', 0.33 <= fit['a'] <= 0.42,
                            {'a': fit['a'], 'b': fit['b'], 'target': fit['target']}, started)

    def check_brun_ratio(self, N: int = 10 ** 6, ys=(10, 20, 50)) -> dict:
        started = time.perf_counter()
        table = brun_ratio_scan(N, ys)
        ratios = table['ratio'].tolist()
        return self._record('brun', 'Brun ratio', all(0.9 <= r <= 1.1 for r in ratios),
                            {'N': N, 'ratios': ratios}, started)

    def check_gcd_dichotomy(self, N_max: int = None) -> dict:
        """Every pair of a rough set either divides or has gcd below N/y."""
        started = time.perf_counter()
        N_max = N_max or (120 if self.quick else 500)
        exceptions = 0
        for N in range(1, N_max + 1):
            for y in (2.0, 5.0, 10.0, math.sqrt(N)):
                exceptions += len(gcd_dichotomy_exceptions(N, max(y, 1.0)))
        return self._record('dichotomy', 'GCD dichotomy', exceptions == 0,
                            {'N_max': N_max, 'exceptions': exceptions}, started)

    def check_oracles(self, num_sets: int = None) -> dict:
        """Fast paths against brute force on the random sets, energies included."""
        started = time.perf_counter()
        num_sets = num_sets or (20 if self.quick else 100)
        failures: Dict[str, int] = {'gcd_sum': 0, 'energy_cross': 0, 'energy_self': 0, 'rough_set': 0}
        for B in generate_integer_sets(num_sets):
            if relative_gap(gcd_sum_fast(B), gcd_sum_naive(B)) > 1e-9:
                failures['gcd_sum'] += 1
            if B.family == ROUGH and B.elements.tolist() != rough_set_brute(B.N, B.y):
                failures['rough_set'] += 1
            cross = energy_cross_brute(B, B.N)
            if energy_cross(B, B.N) != cross or energy_cross_gcd(B, B.N) != cross:
                failures['energy_cross'] += 1
            if energy_self(B) != energy_self_brute(B):
                failures['energy_self'] += 1
        return self._record('oracles', 'Oracle equivalence', not any(failures.values()),
                            {'instances': num_sets, 'failures': failures}, started)

    def check_frontier_ordering(self, N: int = 10 ** 5) -> dict:
        """
        R(rough) > R(primes); R(rough) against R([1, N]) is recorded as a ratio and
        required to stay within a factor of two.
        """
        started = time.perf_counter()
        R_rough = ratio_R(make_family(ROUGH, N))
        R_primes = ratio_R(primes_up_to(N))
        R_all = ratio_R(all_integers(N))
        ratio = R_rough / R_all
        passed = R_rough > R_primes and 0.5 < ratio < 2.0
        return self._record('frontier', 'Frontier ordering', passed,
                            {'N': N, 'R_rough': R_rough, 'R_primes': R_primes, 'R_all': R_all,
                             'rough_over_all': ratio}, started)

    def evaluate_all(self) -> dict:
        """
        Run every check in order.

        Returns:
            Dict with 'passed' and the per-check results
        """
        checks: List[Callable[[], dict]] = [
            self.check_p5_fixture,
            self.check_orthogonality,
            self.check_functional_equation,
            self.check_dual_route,
            self.check_oracles,
            self.check_gcd_dichotomy,
            self.check_brun_ratio,
            self.check_quadruple_fit,
            self.check_frontier_ordering,
            self.check_nonvanishing_trend,
        ]
        for check in checks:
            check()
        passed = all(r['passed'] for r in self.results.values())
        logger.info("verification %s (%d checks)", "passed" if passed else "FAILED", len(self.results))
        return {'passed': passed, 'quick': self.quick, 'checks': list(self.results.values())}

    def summary_lines(self) -> List[str]:
        lines = []
        for result in self.results.values():
            status = "PASS" if result['passed'] else "FAIL"
            lines.append(f"{status}  {result['check']} ({result['seconds']}s)")
        return lines


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    verifier = PropertyVerifier(quick=True)
    verifier.evaluate_all()
    print("\n".join(verifier.summary_lines()))
