import pytest
from hypothesis import given, settings, strategies as st

from iwasawalab.errors import ExponentViolation
from iwasawalab.pgroup import (
    abelianization,
    build_cyclic,
    build_unitriangular,
    direct_product,
    verlagerung,
)

G = build_unitriangular(2, 3)


@given(st.integers(0, G.order - 1), st.integers(0, G.order - 1),
       st.integers(0, G.order - 1))
@settings(max_examples=80, deadline=None)
def test_group_axioms(a, b, c):
    assert G.mul(G.mul(a, b), c) == G.mul(a, G.mul(b, c))
    assert G.mul(a, G.inv(a)) == 0
    assert G.mul(0, a) == a


@given(st.integers(0, G.order - 1))
@settings(max_examples=40, deadline=None)
def test_exponent_p(a):
    assert G.power(a, G.p) == 0


def test_unitriangular_order_and_centre():
    assert G.order == 27
    assert not G.is_abelian
    assert len(G.centre()) == 3
    assert G.commutator_subgroup() == G.centre()


def test_cyclic_and_product():
    c3 = build_cyclic(3, 3)
    assert c3.is_abelian and c3.order == 3
    c33 = direct_product(c3, c3)
    assert c33.is_abelian and c33.order == 9
    assert len(c33.all_subgroups()) == 6  # 1, four C_3, whole group


def test_cyclic_exponent_guard():
    with pytest.raises(ExponentViolation):
        build_cyclic(3, 9, require_exponent_p=True)


def test_conjugacy_classes_partition():
    classes = G.conjugacy_classes()
    everything = sorted(x for cl in classes for x in cl)
    assert everything == list(range(G.order))
    assert sorted(len(cl) for cl in classes) == [1, 1, 1, 3, 3, 3, 3, 3, 3, 3, 3]


def test_subgroup_inventory():
    sizes = sorted(len(s) for s in G.all_subgroups())
    assert sizes == [1] + [3] * 13 + [9] * 4 + [27]
    for s in G.all_subgroups():
        if len(s) == 9:
            assert G.is_normal(s)


def test_normalizer_contains_subgroup():
    for s in G.all_subgroups():
        n = G.normalizer(s)
        assert set(s) <= set(n)


def test_abelianization_map():
    q, proj, _ = abelianization(G)
    assert q.order == 9 and q.is_abelian
    for a in range(G.order):
        for b in range(G.order):
            assert proj[G.mul(a, b)] == q.mul(proj[a], proj[b])


def test_verlagerung_is_a_homomorphism():
    U = next(s for s in G.all_subgroups() if len(s) == 9)
    for a in (1, 3, 5, 7):
        for b in (2, 4, 6):
            q, va = verlagerung(G, U, a)
            _, vb = verlagerung(G, U, b)
            _, vab = verlagerung(G, U, G.mul(a, b))
            assert vab == q.mul(va, vb)
