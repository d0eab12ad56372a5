import random

import pytest

from iwasawalab.precision_core import PrecisionBudget, TruncatedSeries
from iwasawalab.pgroup import build_cyclic, build_unitriangular, direct_product
from iwasawalab.class_algebra import ConjVector, GroupRingElement


@pytest.fixture(scope="session")
def budget3():
    return PrecisionBudget(3, 6, 8, 4)


@pytest.fixture(scope="session")
def budget5():
    return PrecisionBudget(5, 6, 8, 4)


@pytest.fixture(scope="session")
def c3():
    return build_cyclic(3, 3)


@pytest.fixture(scope="session")
def c33():
    c = build_cyclic(3, 3)
    return direct_product(c, c)


@pytest.fixture(scope="session")
def b2f3():
    return build_unitriangular(2, 3)


@pytest.fixture(scope="session")
def b2f5():
    return build_unitriangular(2, 5)


def random_series(budget, rng, unit=False):
    mod = budget.p ** budget.M
    c0 = rng.randrange(mod)
    if unit:
        c0 = c0 - c0 % budget.p + 1 + rng.randrange(budget.p - 1)
    return TruncatedSeries.from_coeffs(
        budget, [c0] + [rng.randrange(mod) for _ in range(budget.n - 1)])


def random_ring_element(group, budget, rng):
    mod = budget.p ** budget.M
    return GroupRingElement(group, budget, [
        TruncatedSeries.from_coeffs(
            budget, [rng.randrange(mod) for _ in range(budget.n)])
        for _ in range(group.order)])


def random_unit_element(group, budget, rng):
    """A unit: identity coefficient a p-adic unit, the rest in (p, T)."""
    mod = budget.p ** budget.M
    coeffs = []
    for x in range(group.order):
        c = [rng.randrange(mod) for _ in range(budget.n)]
        if x == 0:
            c[0] = c[0] - c[0] % budget.p + 1 + rng.randrange(budget.p - 1)
        else:
            c[0] -= c[0] % budget.p
        coeffs.append(TruncatedSeries.from_coeffs(budget, c))
    return GroupRingElement(group, budget, coeffs)


def random_one_unit(group, budget, rng):
    """A unit congruent to 1 modulo the maximal ideal (p, T, aug kernel)."""
    mod = budget.p ** budget.M
    coeffs = []
    for x in range(group.order):
        c = [budget.p * rng.randrange(mod // budget.p)] + [
            rng.randrange(mod) for _ in range(budget.n - 1)]
        if x == 0:
            c[0] += 1
        coeffs.append(TruncatedSeries.from_coeffs(budget, c))
    return GroupRingElement(group, budget, coeffs)


def random_conjvector(group, budget, rng):
    y = ConjVector.zero(group, budget)
    mod = budget.p ** budget.M
    for cl in group.conjugacy_classes():
        y = y + ConjVector.from_class(
            group, budget, cl[0],
            TruncatedSeries.from_coeffs(
                budget, [rng.randrange(mod) for _ in range(budget.n)]))
    return y


@pytest.fixture
def rng():
    return random.Random(12345)
