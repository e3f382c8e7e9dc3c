"""Shared fixtures: small character groups, cache directories and series oracles."""

import cmath
import math

import pytest

from engines.char_group import EVEN, build_group


@pytest.fixture(scope="session")
def group5():
    return build_group(5)


@pytest.fixture(scope="session")
def group7():
    return build_group(7)


@pytest.fixture(scope="session")
def group13():
    return build_group(13)


@pytest.fixture
def cache_dir(tmp_path):
    return str(tmp_path / "cache")


def theta_series(p, g, j, x, parity, terms=400):
    """theta(x, chi_j) summed term by term with chi built from powers of g."""
    dlog = {}
    value = 1
    for k in range(p - 1):
        dlog[value] = k
        value = value * g % p
    total = 0j
    for n in range(1, terms + 1):
        if n % p == 0:
            continue
        chi = cmath.exp(2j * math.pi * j * dlog[n % p] / (p - 1))
        weight = math.exp(-math.pi * n * n * x / p)
        if parity != EVEN:
            weight *= n
        total += chi * weight
    return total


@pytest.fixture
def series():
    return theta_series
