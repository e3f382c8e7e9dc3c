import math

import numpy as np
import pytest

from engines.char_group import EVEN, ODD, build_group, character_value
from engines.mollifier_moments import (
    CLOSED, DIRECT, build_mollifier, default_sieve_parameter, first_moment_cancellation,
    m1_closed, m1_direct, m2_closed, m2_direct, moment_bound_scan, moment_M1, moment_M2,
    mollifier_values, nonvanishing_census, plain_moment, theorem1_scan,
)
from engines.sieve_sets import ROUGH, custom_set
from engines.theta_engine import theta_batch
from utils.errors import InputError


def test_p5_default_support_is_one():
    spec = build_mollifier(5)
    assert spec.M == 2
    assert list(spec.support) == [1]
    assert spec.degenerate


def test_p10007_support():
    spec = build_mollifier(10007)
    assert spec.M == 100
    assert spec.y == pytest.approx(default_sieve_parameter(10007))
    assert spec.support.family == ROUGH
    assert len(spec.support) == 18
    assert list(spec.support)[:3] == [1, 23, 29]


def test_build_mollifier_errors():
    with pytest.raises(InputError):
        build_mollifier(10006)
    with pytest.raises(InputError):
        build_mollifier(13, y=0.5)
    with pytest.raises(InputError):
        build_mollifier(13, support=custom_set([1, 5]))


def test_mollifier_values_match_definition(group13):
    spec = build_mollifier(13, support=custom_set([1, 2, 3]))
    values = mollifier_values(spec, group13)
    for j in range(group13.order):
        expected = sum(character_value(group13, j, m).conjugate() for m in (1, 2, 3))
        assert abs(values[j] - expected) < 1e-12


def test_p5_moments(group5):
    spec = build_mollifier(5, support=custom_set([1], N=2))
    report = nonvanishing_census(5, 1.0, EVEN, spec=spec, group=group5)
    assert report.m1 == pytest.approx(1.067062, abs=1e-5)
    assert report.m2 == pytest.approx(0.583592, abs=1e-5)
    assert report.cs_lower_bound == pytest.approx(1.951057, abs=1e-5)
    assert report.nonvanishing == 2
    assert report.undecided == 0
    assert report.cs_lower_bound <= report.nonvanishing


@pytest.mark.parametrize("parity", [EVEN, ODD])
@pytest.mark.parametrize("elements", [[1], [1, 2, 3], [2, 3], []])
def test_direct_and_closed_routes_agree(group13, parity, elements):
    spec = build_mollifier(13, parity=parity, support=custom_set(elements, N=3))
    batch = theta_batch(group13, 0.8, parity)
    m1d, m1c = m1_direct(spec, group13, batch), m1_closed(spec, 0.8)
    m2d, m2c = m2_direct(spec, group13, batch), m2_closed(spec, 0.8)
    assert abs(m1d.value - m1c.value) <= m1d.error + m1c.error + 1e-12
    assert abs(m2d.value - m2c.value) <= m2d.error + m2c.error + 1e-12


def test_moment_functions_dispatch_on_method(group13):
    spec = build_mollifier(13, support=custom_set([1, 2, 3]))
    assert moment_M1(spec, 1.0, DIRECT, group=group13) == pytest.approx(moment_M1(spec, 1.0, CLOSED))
    assert moment_M2(spec, 1.0, DIRECT, group=group13) == pytest.approx(moment_M2(spec, 1.0, CLOSED))
    with pytest.raises(InputError):
        moment_M1(spec, 1.0, "fourier")


def test_even_first_moment_grows_with_support():
    small = moment_M1(build_mollifier(101, support=custom_set([1, 3], N=10)), 1.0, CLOSED)
    large = moment_M1(build_mollifier(101, support=custom_set([1, 3, 7], N=10)), 1.0, CLOSED)
    assert large > small > 0


def test_plain_moments(group5):
    assert plain_moment(5, 1.0, 0) == 2
    assert plain_moment(5, 1.0, 1, group=group5) == pytest.approx(0.583592, abs=1e-5)
    assert plain_moment(5, 1.0, 2, group=group5) == pytest.approx(0.186551, abs=1e-5)
    with pytest.raises(InputError):
        plain_moment(5, 1.0, -1)


@pytest.mark.parametrize("parity", [EVEN, ODD])
def test_census_counts_every_character(group13, parity):
    report = nonvanishing_census(13, 1.0, parity, group=group13)
    assert report.nonvanishing + report.undecided == 6
    assert report.m1 is None and report.cs_lower_bound is None
    assert set(report.s2k) == {1, 2}


def test_census_with_empty_support(group13):
    spec = build_mollifier(13, support=custom_set([], N=3))
    report = nonvanishing_census(13, 1.0, EVEN, spec=spec, group=group13)
    assert report.m1 == 0.0
    assert report.cs_lower_bound == 0.0


def test_report_serialisation(group5):
    report = nonvanishing_census(5, 1.0, EVEN, spec=build_mollifier(5), group=group5, moments=(1, 2, 3))
    data = report.to_dict()
    assert set(data) == {'p', 'x', 'parity', 'm1', 'm2', 's2k', 'nonvanishing', 'undecided',
                         'cs_lower_bound'}
    assert list(data['s2k']) == ['1', '2', '3']
    row = report.to_row()
    assert 's2k' not in row and 's2k_3' in row


def test_first_moment_cancellation(group5):
    table = first_moment_cancellation(5, [1, 2, 5], group=group5)
    assert table['mean_abs'].tolist() == pytest.approx([1.0, (2 + 2 * math.sqrt(2)) / 4, 1.0])
    assert table['ratio'].iloc[1] == pytest.approx(1.20711 / math.sqrt(2), abs=1e-5)
    with pytest.raises(InputError):
        first_moment_cancellation(5, [6], group=group5)


def test_theorem1_scan_small_primes():
    table = theorem1_scan([101, 103, 107])
    assert table['p'].tolist() == [101, 103, 107]
    assert (table['count'] == (table['p'] - 1) // 2).all()
    assert (np.floor(table['cs_lower_bound']) <= table['count']).all()
    assert (table['normalized'] >= 0.5).all()


def test_moment_bound_scan_columns():
    table = moment_bound_scan([101, 199])
    assert {'c1', 'c2', 'm1_ratio', 'structural', 'gcd_prediction'} <= set(table.columns)
    assert (table['support_size'] >= 1).all()


def test_group_modulus_mismatch(group7):
    spec = build_mollifier(13)
    with pytest.raises(InputError):
        mollifier_values(spec, group7)
    with pytest.raises(InputError):
        nonvanishing_census(13, 1.0, EVEN, spec=spec, group=group7)


@pytest.mark.parametrize("p", [101, 1009])
@pytest.mark.parametrize("parity", [EVEN, ODD])
def test_first_moment_is_real(p, parity):
    group = build_group(p)
    spec = build_mollifier(p, parity=parity)
    estimate = m1_direct(spec, group, theta_batch(group, 1.0, parity))
    assert abs(estimate.imag) < 1e-9 * abs(estimate.value)
