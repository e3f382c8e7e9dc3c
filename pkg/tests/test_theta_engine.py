import math

import numpy as np
import pytest

from engines.char_group import EVEN, ODD, build_group, character_values, parity_of
from engines.theta_engine import (
    NONZERO, UNDECIDED, ThetaValue, conjugate_index, decide, functional_equation_check,
    functional_equation_exponent, is_nonzero, max_summand, resolve_undecided, root_number,
    root_number_scan, tail_bound, theta_all, theta_batch, theta_direct, theta_direct_mp,
    truncation_point,
)
from utils.errors import InputError
from utils.random_sets import random_primes


def test_p5_even_values(group5):
    theta_0 = theta_direct(group5, 0, 1.0, EVEN)
    theta_2 = theta_direct(group5, 2, 1.0, EVEN)
    assert theta_0.value.real == pytest.approx(0.6180335, abs=1e-5)
    assert theta_2.value.real == pytest.approx(0.4490287, abs=1e-5)
    assert abs(theta_0.value.imag) < 1e-15
    assert abs(theta_2.value.imag) < 1e-15


def test_p5_odd_modulus(group5):
    assert abs(theta_direct(group5, 1, 1.0, ODD).value) == pytest.approx(0.55442, abs=1e-4)


@pytest.mark.parametrize("x", [0.3, 1.0, 2.5])
def test_direct_matches_series(group13, series, x):
    for j in range(group13.order):
        parity = parity_of(j)
        expected = series(13, group13.g, j, x, parity)
        tv = theta_direct(group13, j, x, parity)
        assert abs(tv.value - expected) <= tv.error_radius + 1e-13


@pytest.mark.parametrize("parity", [EVEN, ODD])
def test_batch_matches_direct(group13, parity):
    batch = theta_batch(group13, 0.7, parity)
    assert batch.js.tolist() == list(range(0 if parity == EVEN else 1, 12, 2))
    for j, value, radius in zip(batch.js, batch.values, batch.radii):
        tv = theta_direct(group13, int(j), 0.7, parity)
        assert abs(value - tv.value) <= radius + tv.error_radius


def test_batch_threads_agree(group13):
    single = theta_batch(group13, 1.0, EVEN, threads=1)
    pooled = theta_batch(group13, 1.0, EVEN, threads=4)
    assert np.allclose(single.values, pooled.values, rtol=0, atol=1e-13)


def test_theta_all_is_ordered(group7):
    values = theta_all(group7, 1.0, ODD)
    assert [tv.j for tv in values] == [1, 3, 5]
    assert all(isinstance(tv, ThetaValue) for tv in values)


def test_parity_mismatch(group5):
    with pytest.raises(InputError, match="parity"):
        theta_direct(group5, 1, 1.0, EVEN)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan"), float("inf")])
def test_bad_x(group5, x):
    with pytest.raises(InputError):
        theta_direct(group5, 0, x, EVEN)


def test_index_out_of_range(group5):
    with pytest.raises(InputError):
        theta_direct(group5, 4, 1.0, EVEN)


@pytest.mark.parametrize("parity", [EVEN, ODD])
def test_truncation_point_meets_tolerance(parity):
    n0, tail, peak = truncation_point(101, 0.2, parity)
    assert tail <= 1e-18 * peak
    assert tail == tail_bound(101, 0.2, parity, n0)
    assert peak == max_summand(101, 0.2, parity)
    if n0 > 1:
        assert tail_bound(101, 0.2, parity, n0 - 1) >= 1e-18 * peak


def test_tail_bound_dominates_actual_tail():
    p, x, n0 = 31, 0.5, 10
    actual = sum(n * math.exp(-math.pi * n * n * x / p) for n in range(n0, 400))
    assert actual <= tail_bound(p, x, ODD, n0)


def test_mp_agrees_with_double(group13):
    double = theta_direct(group13, 3, 1.0, ODD)
    wide = theta_direct_mp(group13, 3, 1.0, ODD, 128)
    assert wide.precision_bits == 128
    assert wide.error_radius < double.error_radius
    assert abs(double.value - wide.value) <= double.error_radius + wide.error_radius


def test_is_nonzero_never_says_zero():
    tiny = ThetaValue(value=1e-20, error_radius=1e-18, truncation_N=1, x=1.0, j=0, parity=EVEN)
    big = ThetaValue(value=0.5, error_radius=1e-15, truncation_N=1, x=1.0, j=0, parity=EVEN)
    assert is_nonzero(tiny) == UNDECIDED
    assert is_nonzero(big) == NONZERO


def test_decide_returns_decided_value(group13):
    assert is_nonzero(decide(group13, 2, 1.0, EVEN)) == NONZERO


def test_resolve_undecided_is_noop_when_decided(group13):
    batch = theta_batch(group13, 1.0, EVEN)
    resolved, still = resolve_undecided(group13, batch)
    assert still == []
    assert resolved is batch


def test_root_number_has_unit_modulus(group13):
    for j in range(1, group13.order):
        rn = root_number(group13, j)
        assert rn.defined
        assert abs(abs(rn.w) - 1.0) < 1e-12


def test_root_number_rejects_trivial(group13):
    with pytest.raises(InputError):
        root_number(group13, 0)


def test_exponents():
    assert functional_equation_exponent(EVEN) == 0.5
    assert functional_equation_exponent(ODD) == 1.5


@pytest.mark.parametrize("x", [0.5, 2.0])
def test_functional_equation_holds(group13, x):
    for j in range(1, group13.order):
        check = functional_equation_check(group13, j, x)
        assert check.ok, (j, check.residual, check.bound)
        assert check.residual < 1e-10


def test_root_number_scan(group13):
    table = root_number_scan(group13)
    assert len(table) == 11
    assert table['defined'].all()
    assert np.allclose(table['abs_w'], 1.0)
    assert list(table.columns) == ['j', 'parity', 'defined', 'abs_w', 'arg_w', 'error']


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_conjugate_character_gives_conjugate_theta(group13, x):
    for j in range(1, group13.order):
        parity = parity_of(j)
        tv = theta_direct(group13, j, x, parity)
        mirror = theta_direct(group13, conjugate_index(group13, j), x, parity)
        assert abs(mirror.value - tv.value.conjugate()) <= tv.error_radius + mirror.error_radius


@pytest.mark.parametrize("p", random_primes(4, 100, 499, seed=7))
@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_batch_matches_direct_on_random_primes(p, x):
    group = build_group(p)
    for parity in (EVEN, ODD):
        batch = theta_batch(group, x, parity)
        for j, value, radius in zip(batch.js, batch.values, batch.radii):
            tv = theta_direct(group, int(j), x, parity)
            assert abs(value - tv.value) <= radius + tv.error_radius


@pytest.mark.parametrize("x", [0.5, 2.0])
def test_doubling_truncation_stays_within_radius(group13, x):
    for j in range(group13.order):
        parity = parity_of(j)
        tv = theta_direct(group13, j, x, parity)
        n = np.arange(1, 2 * tv.truncation_N + 1, dtype=np.int64)
        weights = np.exp(-math.pi * x * (n.astype(np.float64) ** 2) / 13)
        if parity == ODD:
            weights = weights * n
        terms = weights * character_values(group13, j, n)
        longer = complex(math.fsum(terms.real), math.fsum(terms.imag))
        assert abs(longer - tv.value) <= tv.error_radius


def test_root_number_p7(group7):
    rn = root_number(group7, 2)
    assert rn.defined
    assert abs(abs(rn.w) - 1.0) < 1e-10


def test_functional_equation_p7_odd(group7):
    check = functional_equation_check(group7, 1, 2.0)
    assert check.ok
    assert check.residual < 1e-10
