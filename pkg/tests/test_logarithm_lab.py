import pytest

from iwasawalab.errors import NotAUnit, NotInImage, OutOfDomain
from iwasawalab.precision_core import TruncatedSeries
from iwasawalab.class_algebra import GroupRingElement
from iwasawalab.logarithm_lab import (
    exp_on_I,
    gamma_budget_series_intlog,
    integral_log,
    intlog_invert_abelian,
    log_on_one_plus_I,
    omega_at_level,
    ring_exp,
    ring_log,
    teichmueller,
)
from iwasawalab.theta_additive import rw_I_W_descriptor
from iwasawalab.families import rw_family

from conftest import random_series, random_unit_element


def test_teichmueller_is_a_root_of_unity():
    for a in (1, 2, 4, 5):
        t = teichmueller(3, 10, a)
        assert pow(t, 2, 3 ** 10) == 1
        assert t % 3 == a % 3


def test_teichmueller_rejects_non_units():
    with pytest.raises(NotAUnit):
        teichmueller(3, 10, 6)


def test_ring_exp_log_roundtrip(b2f3, budget3, rng):
    x = random_unit_element(b2f3, budget3, rng).mul_p_power(1)
    assert ring_log(ring_exp(x)).equal_at_precision(x)


def test_ring_exp_needs_p_divisibility(b2f3, budget3):
    one = GroupRingElement.one(b2f3, budget3)
    with pytest.raises(OutOfDomain):
        ring_exp(one)


def test_integral_log_kills_torsion(b2f3, budget3):
    for x in range(b2f3.order):
        e = GroupRingElement.from_element(b2f3, budget3, x)
        assert integral_log(e).value.is_zero


def test_integral_log_is_multiplicative_on_units(b2f3, budget3, rng):
    x = random_unit_element(b2f3, budget3, rng)
    y = random_unit_element(b2f3, budget3, rng)
    lx = integral_log(x).value
    lxy = integral_log(x * y).value
    ly = integral_log(y).value
    assert lxy.equal_at_precision(lx + ly)


def test_omega_vanishes_on_integral_log_images(b2f3, budget3, rng):
    for _ in range(5):
        x = random_unit_element(b2f3, budget3, rng)
        y = integral_log(x).value
        for j in (1, 2, 3):
            _, ab_elem, gexp = omega_at_level(y, j)
            assert ab_elem == 0
            assert gexp == 0


def test_abelian_inverter_roundtrip(budget3, rng):
    for _ in range(10):
        s = random_series(budget3, rng, unit=True)
        target = gamma_budget_series_intlog(s)
        eta = intlog_invert_abelian(target)
        assert gamma_budget_series_intlog(eta).equal_at_precision(target)


def test_abelian_inverter_rejects_off_image(budget3):
    bad = TruncatedSeries.from_coeffs(budget3, [0, 1])
    with pytest.raises(NotInImage):
        intlog_invert_abelian(bad)


def test_exp_log_on_wall_lattice(b2f3, budget3, rng):
    W = next(s for s in b2f3.all_subgroups() if len(s) == 9)
    desc = rw_I_W_descriptor(rw_family(b2f3, W))
    mod = budget3.p ** (budget3.M - 1)
    coords = [TruncatedSeries.from_coeffs(
        budget3, [budget3.p * rng.randrange(mod) for _ in range(budget3.n)])
        for _ in desc.gens]
    a = desc.element_from_coords(budget3, coords)
    x, _ = exp_on_I(a, desc)
    back, _ = log_on_one_plus_I(x, desc)
    assert back.equal_at_precision(a)
