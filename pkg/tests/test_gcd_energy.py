import math

import numpy as np
import pytest

from engines.gcd_energy import (
    congruence_bound, congruence_count, congruence_count_brute, divisor_chain_sum,
    divisor_sigma_minus1_sum, divisor_split_constant, divisor_table, energy_cross, energy_cross_brute,
    energy_cross_gcd, energy_frontier_scan, energy_report, energy_self, energy_self_brute,
    gcd_sum_fast, gcd_sum_naive, congruence_bound_scan, quadruple_count, quadruple_count_brute,
    quadruple_fit, mobius_table, ratio_R, sigma_minus1_table, totient_table,
)
from engines.sieve_sets import ALL, PRIMES, ROUGH, all_integers, custom_set, primes_up_to, rough_set
from utils.errors import InputError, MemoryBudgetError, OracleCapError
from utils.random_sets import generate_integer_sets


def test_tables():
    assert totient_table(10).tolist() == [0, 1, 1, 2, 2, 4, 2, 6, 4, 6, 4]
    assert sigma_minus1_table(6)[6] == pytest.approx(1 + 1 / 2 + 1 / 3 + 1 / 6)
    assert mobius_table(10).tolist() == [0, 1, -1, -1, 0, -1, 1, -1, 0, 0, 1]
    offsets, divisors = divisor_table(12)
    assert divisors[offsets[12]:offsets[13]].tolist() == [1, 2, 3, 4, 6, 12]
    assert divisors[offsets[7]:offsets[8]].tolist() == [1, 7]


def test_gcd_sum_small():
    B = custom_set([1, 2])
    assert gcd_sum_naive(B) == pytest.approx(2.5)
    assert gcd_sum_fast(B) == pytest.approx(2.5)
    assert ratio_R(B) == pytest.approx(3.2)


@pytest.mark.parametrize("B", generate_integer_sets(30, max_N=200, seed=11), ids=lambda B: B.describe())
def test_gcd_sum_fast_matches_naive(B):
    assert gcd_sum_fast(B) == pytest.approx(gcd_sum_naive(B), rel=1e-12)


def test_ratio_R_trivial_bound():
    for B in (all_integers(300), primes_up_to(300), rough_set(300, 5)):
        assert ratio_R(B) <= B.N * len(B) * (1 + 1e-12)


def test_ratio_R_empty():
    with pytest.raises(InputError):
        ratio_R(custom_set([], N=10))


def test_oracle_cap():
    with pytest.raises(OracleCapError):
        gcd_sum_naive(all_integers(10), cap=5)


def test_divisor_sums_lower_bounds():
    B = rough_set(1000, 7)
    assert gcd_sum_fast(B) >= len(B)
    assert divisor_sigma_minus1_sum(B) >= len(B)
    assert divisor_chain_sum(B) >= len(B)
    assert divisor_split_constant(B) > 0
    with pytest.raises(InputError):
        divisor_split_constant(primes_up_to(100))


def test_energy_examples():
    assert energy_cross(custom_set([1]), 7) == 7
    assert energy_cross(custom_set([1, 2]), 2) == 6
    assert energy_self(custom_set([2, 3, 5])) == 15
    assert energy_cross(custom_set([], N=5), 5) == 0


@pytest.mark.parametrize("B", generate_integer_sets(16, max_N=60, seed=5), ids=lambda B: B.describe())
def test_energy_routes_agree(B):
    cross = energy_cross_brute(B, B.N)
    assert energy_cross(B, B.N) == cross
    assert energy_cross_gcd(B, B.N) == cross
    assert energy_self(B) == energy_self_brute(B)


def test_energy_budget():
    with pytest.raises(MemoryBudgetError):
        energy_cross(all_integers(100), 100, budget=1000)
    with pytest.raises(MemoryBudgetError):
        energy_self(all_integers(100), budget=1000)


def test_energy_report():
    report = energy_report(rough_set(500, 3))
    assert report.E_cross == energy_cross_gcd(rough_set(500, 3), 500)
    assert report.R == pytest.approx(ratio_R(rough_set(500, 3)))
    assert set(report.to_dict()) == {'set_descriptor', 'S', 'R', 'E_cross', 'E_self', 'density'}


def test_quadruple_examples():
    assert quadruple_count(4) == 1
    assert quadruple_count(9) == 1
    assert quadruple_count(10) == 5
    with pytest.raises(InputError):
        quadruple_count(3)


@pytest.mark.parametrize("x", [4, 17, 50, 123, 400])
def test_quadruple_count_matches_enumeration(x):
    assert quadruple_count(x) == quadruple_count_brute(x)


@pytest.mark.slow
def test_quadruple_fit_coefficient():
    fit = quadruple_fit([10 ** 4, 10 ** 5, 10 ** 6])
    assert 0.33 <= fit['a'] <= 0.42
    assert fit['target'] == pytest.approx(0.375)


@pytest.mark.parametrize("m1, m2, x, p", [(1, 1, 5, 7), (2, 3, 10, 31), (3, 5, 31, 31), (4, 6, 20, 101)])
def test_congruence_count_matches_enumeration(m1, m2, x, p):
    assert congruence_count(m1, m2, x, p) == congruence_count_brute(m1, m2, x, p)


def test_congruence_parameter_order():
    with pytest.raises(InputError, match="order"):
        congruence_count(5, 3, 10, 31)
    with pytest.raises(InputError):
        congruence_count(1, 2, 40, 31)


def test_congruence_bound_scan_ratio_is_bounded():
    table = congruence_bound_scan(101, 10)
    assert len(table) == 55
    assert (table['count'] == [congruence_count(a, b, 10, 101)
                               for a, b in zip(table['m1'], table['m2'])]).all()
    assert table['ratio'].max() < 10
    assert congruence_bound(1, 1, 10, 101) == pytest.approx(11 * (1 + 10 / 101))


def test_frontier_scan():
    table = energy_frontier_scan(2000, [ALL, PRIMES, (ROUGH, 5.0)])
    assert table['family'].tolist() == ['all', 'primes', 'rough(5)']
    assert table['size'].tolist()[:2] == [2000, 303]
    full, primes, rough = table.to_dict('records')
    assert full['alpha'] == 1.0
    assert rough['R_over_N2'] > primes['R_over_N2']
    assert math.isclose(rough['predicted_order'], min(rough['order_alpha'], rough['order_inverse']))


def pairwise_energy(B, N):
    """sum over (a, c) of floor(N gcd(a, c) / max(a, c)), one row per element."""
    elements = B.elements
    total = 0
    for a in elements.tolist():
        g = np.gcd(elements, a)
        total += int(np.sum(N // (np.maximum(elements, a) // g)))
    return total


@pytest.mark.parametrize("B, N", [
    (rough_set(3000, 3), 3000),
    (all_integers(1500), 1500),
    (primes_up_to(2000), 700),
    (custom_set([6, 10, 15, 30, 210], N=300), 50),
])
def test_energy_cross_gcd_matches_pairwise_formula(B, N):
    assert energy_cross_gcd(B, N) == pairwise_energy(B, N)


def test_frontier_energy_is_finite_at_scale():
    N = 10 ** 5
    y = math.exp(math.sqrt(math.log(N)))
    table = energy_frontier_scan(N, [(ROUGH, y), PRIMES])
    assert table['energy'].notna().all()
    for row in table.to_dict('records'):
        assert math.isfinite(row['energy_ratio'])
        assert row['energy_ratio'] >= 1.0
        assert math.isfinite(row['beta'])
    report = energy_report(rough_set(N, y))
    assert report.E_cross == table['energy'].iloc[0]


@pytest.mark.parametrize("B", generate_integer_sets(12, max_N=40, seed=3), ids=lambda B: B.describe())
def test_energy_cross_diagonal_bound(B):
    N = B.N
    energy = energy_cross(B, N)
    products = np.multiply.outer(B.elements, np.arange(1, N + 1))
    distinct = np.unique(products).size == products.size
    assert energy >= N * len(B)
    assert (energy == N * len(B)) == distinct


def test_energy_cross_equality_when_products_distinct():
    assert energy_cross(custom_set([2, 3]), 2) == 4
    assert energy_cross(custom_set([1, 2]), 2) > 2 * 2


def test_quadruple_count_nondecreasing():
    counts = [quadruple_count(x) for x in range(4, 300)]
    assert all(later >= earlier for earlier, later in zip(counts, counts[1:]))
