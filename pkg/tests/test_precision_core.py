import pytest
from hypothesis import given, settings, strategies as st

from iwasawalab.errors import NotAUnit, PrecisionExhausted
from iwasawalab.precision_core import PrecisionBudget, TruncatedSeries

B = PrecisionBudget(3, 6, 8, 4)
MOD = B.p ** B.M

coeff_lists = st.lists(st.integers(0, MOD - 1), min_size=B.n, max_size=B.n)


def series(c):
    return TruncatedSeries.from_coeffs(B, c)


@given(coeff_lists, coeff_lists, coeff_lists)
@settings(max_examples=60, deadline=None)
def test_ring_laws(a, b, c):
    x, y, z = series(a), series(b), series(c)
    assert ((x + y) + z).equal_at_precision(x + (y + z))
    assert (x * y).equal_at_precision(y * x)
    assert (x * (y + z)).equal_at_precision(x * y + x * z)
    assert (x - x).is_zero


@given(coeff_lists)
@settings(max_examples=60, deadline=None)
def test_unit_inverse(c):
    c = [c[0] - c[0] % B.p + 1] + c[1:]
    x = series(c)
    assert (x * x.invert()).equal_at_precision(TruncatedSeries.one(B))


def test_non_unit_inverse_rejected():
    with pytest.raises(NotAUnit):
        series([3, 1]).invert()


@given(coeff_lists, st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_p_power_shift_roundtrip(c, k):
    x = series(c)
    y = x.mul_p_power(k)
    assert y.mul_p_power(-k).equal_at_precision(x)


def test_p_division_needs_content():
    with pytest.raises(PrecisionExhausted):
        series([1]).mul_p_power(-B.M)


def test_frobenius_is_additive_mod_p():
    x, y = series([1, 2, 3]), series([4, 5, 6])
    f = (x + y).frobenius() - (x.frobenius() + y.frobenius())
    assert all(v % (B.p * B.scale()) == 0 for v in f.nums)


def test_gamma_is_one_plus_t():
    g = TruncatedSeries.gamma(B)
    assert g.coeff_values()[:2] == [1, 1]
    assert all(v == 0 for v in g.nums[2:])


@given(coeff_lists)
@settings(max_examples=40, deadline=None)
def test_exp_log_roundtrip_on_p_lambda(c):
    x = series([B.p * (v % (MOD // B.p)) for v in c])
    assert x.exp().log().equal_at_precision(x)


def test_precision_reduction_is_monotone():
    x = series([1, 2, 3])
    y = x.reduce_precision(3)
    assert y.known_precision == 3
    assert x.equal_at_precision(y)


def test_constructor_rejects_exhausted_precision():
    with pytest.raises(PrecisionExhausted):
        TruncatedSeries(B, [0], 0)
