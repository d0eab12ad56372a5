import pytest

from iwasawalab.errors import NotSInvertible, PrecisionExhausted
from iwasawalab.precision_core import TruncatedSeries
from iwasawalab.class_algebra import pair_ring
from iwasawalab.families import artin_family_c, brauer_family
from iwasawalab.k1_norms import (
    LocalizedUnit,
    compat_log_norm,
    congruence_check_I,
    congruence_check_J,
    norm_to_subpair,
    norm_to_subpair_localized,
    canonical_project,
    group_element_slack,
    psi_membership,
    psi_membership_localized,
    scalar_power_reduced,
    theta_norm,
    theta_norm_localized,
    theta_tuple,
    theta_tuple_localized,
)

from conftest import random_one_unit, random_unit_element


def test_theta_norm_is_multiplicative(b2f3, budget3, rng):
    U = next(s for s in b2f3.all_subgroups() if len(s) == 9)
    ring = pair_ring(b2f3, U)
    x = random_unit_element(b2f3, budget3, rng)
    y = random_unit_element(b2f3, budget3, rng)
    lhs = theta_norm(x * y, ring)
    rhs = theta_norm(x, ring) * theta_norm(y, ring)
    assert lhs.equal_at_precision(rhs)


def test_scalar_power_reduced_strips_exact_content(budget3):
    den = TruncatedSeries.from_coeffs(budget3, [3, 1])
    red, shift = scalar_power_reduced(den, 27)
    assert shift > 0
    assert red.is_s_invertible()


def test_localized_unit_rejects_p_multiple_denominator(b2f3, budget3, rng):
    x = random_unit_element(b2f3, budget3, rng)
    with pytest.raises(NotSInvertible):
        LocalizedUnit(x, TruncatedSeries.from_coeffs(budget3, [3, 3]))


def test_localized_inverse(b2f3, budget3, rng):
    den = TruncatedSeries.from_coeffs(budget3, [3, 1])
    x = LocalizedUnit(random_unit_element(b2f3, budget3, rng), den)
    prod = x * x.invert()
    one = LocalizedUnit.from_integral(
        random_unit_element(b2f3, budget3, rng).one(b2f3, budget3))
    assert prod.equal_at_precision(one)


def test_localized_norm_agrees_with_integral_on_integral_input(
        b2f3, budget3, rng):
    U = next(s for s in b2f3.all_subgroups() if len(s) == 9)
    ring = pair_ring(b2f3, U)
    x = random_unit_element(b2f3, budget3, rng)
    ni = theta_norm(x, ring)
    nl = theta_norm_localized(LocalizedUnit.from_integral(x), ring)
    assert nl.pshift <= 0
    assert nl.equal_at_precision(LocalizedUnit.from_integral(ni))


def test_two_power_routes_give_equal_denominators(b2f3, budget3, rng):
    # the component at a small pair, normed down, must agree with the
    # component computed directly at the subpair
    fb = brauer_family(b2f3)
    den = TruncatedSeries.from_coeffs(budget3, [3, 1])
    x = LocalizedUnit(random_unit_element(b2f3, budget3, rng), den)
    t = theta_tuple_localized(x, fb)
    i, j = fb.tcc_edges[0]
    sup, sub = fb.pairs[i], fb.pairs[j]
    mid = pair_ring(b2f3, sub.U, sup.V)
    src = pair_ring(b2f3, sup.U, sup.V)
    lhs = norm_to_subpair_localized(t.components[i], src, mid)
    cj = t.components[j]
    assert lhs.pshift == cj.pshift
    assert (lhs.den - cj.den).is_zero
    rhs_num = canonical_project(cj.num, pair_ring(b2f3, sub.U, sub.V), mid)
    assert group_element_slack(lhs.num, rhs_num, mid) is not None


def test_congruence_checks_pass_on_units(b2f3, budget3, rng):
    fc = artin_family_c(b2f3)
    fb = brauer_family(b2f3)
    x = random_unit_element(b2f3, budget3, rng)
    for pr in fb.pairs:
        if b2f3.order // len(pr.U) == 1:
            continue
        ok, _ = congruence_check_J(x, pair_ring(b2f3, pr.U, pr.V))
        assert ok
    for m in fc.base.members:
        if len(m.subgroup) == b2f3.order:
            continue
        ok, certs = congruence_check_I(x, fc, m.h)
        assert ok and certs["routes_agree"]


def test_compat_log_norm(b2f3, budget3, rng):
    U = next(s for s in b2f3.all_subgroups() if len(s) == 9)
    src = pair_ring(b2f3, tuple(range(27)))
    dst = pair_ring(b2f3, U)
    for _ in range(5):
        x = random_one_unit(b2f3, budget3, rng)
        assert compat_log_norm(x, src, dst)


def test_psi_verdicts_match_on_integral_tuples(b2f3, budget3, rng):
    fc = artin_family_c(b2f3)
    fb = brauer_family(b2f3)
    x = random_unit_element(b2f3, budget3, rng)
    vi = psi_membership(theta_tuple(x, fb), fc).verdict
    vl = psi_membership_localized(
        theta_tuple_localized(LocalizedUnit.from_integral(x), fb), fc).verdict
    assert vi == vl


def test_localized_psi_never_rejects_genuine_tuples(b2f3, budget3, rng):
    fc = artin_family_c(b2f3)
    fb = brauer_family(b2f3)
    den = TruncatedSeries.from_coeffs(budget3, [3, 1])
    x = LocalizedUnit(random_unit_element(b2f3, budget3, rng), den)
    report = psi_membership_localized(theta_tuple_localized(x, fb), fc)
    assert report.verdict != "out"
