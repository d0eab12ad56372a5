import random

import pytest

from iwasawalab.errors import OutOfDomain
from iwasawalab.precision_core import TruncatedSeries
from iwasawalab.class_algebra import (
    ConjVector,
    GroupRingElement,
    abelian_trace,
    canonical_map,
    char_p_power_identity,
    conjugation_iso,
    in_j_ideal,
    pair_ring,
    trace_to_pair,
)

from conftest import random_ring_element, random_unit_element


def test_group_ring_is_associative(b2f3, budget3, rng):
    x = random_ring_element(b2f3, budget3, rng)
    y = random_ring_element(b2f3, budget3, rng)
    z = random_ring_element(b2f3, budget3, rng)
    assert ((x * y) * z).equal_at_precision(x * (y * z))


def test_unit_inverse(b2f3, budget3, rng):
    x = random_unit_element(b2f3, budget3, rng)
    assert x.is_unit()
    one = GroupRingElement.one(b2f3, budget3)
    assert (x * x.invert()).equal_at_precision(one)


def test_aug_is_multiplicative(b2f3, budget3, rng):
    x = random_ring_element(b2f3, budget3, rng)
    y = random_ring_element(b2f3, budget3, rng)
    assert (x * y).aug().equal_at_precision(x.aug() * y.aug())


def test_conjvector_roundtrip(b2f3, budget3, rng):
    x = random_ring_element(b2f3, budget3, rng)
    v = ConjVector.from_group_ring(x)
    # central elements are constant on classes, so the vector determines them
    for cl in b2f3.conjugacy_classes():
        s = v.coeff_for(cl[0])
        total = TruncatedSeries.zero(budget3)
        for e in cl:
            total = total + x.coeffs[e]
        assert s.equal_at_precision(total)


def test_pair_ring_projection_is_homomorphism(b2f3):
    U = next(s for s in b2f3.all_subgroups() if len(s) == 9)
    ring = pair_ring(b2f3, U)
    for a in U[:5]:
        for b in U[:5]:
            assert (ring.project_global(b2f3.mul(a, b))
                    == ring.group.mul(ring.project_global(a),
                                      ring.project_global(b)))


def test_trace_then_canonical_commute(b2f3, budget3, rng):
    U = next(s for s in b2f3.all_subgroups() if len(s) == 9)
    big = pair_ring(b2f3, tuple(range(27)), b2f3.commutator_subgroup())
    mid = pair_ring(b2f3, U, b2f3.commutator_subgroup())
    small = pair_ring(b2f3, U)
    x = random_ring_element(big.group, budget3, rng)
    t = abelian_trace(x, mid, big)
    assert t.group is mid.group
    c = canonical_map(t, mid, small)
    assert c.group is small.group


def test_conjugation_iso_inverts(b2f3, budget3, rng):
    subs = [s for s in b2f3.all_subgroups() if len(s) == 3 and s[1] not in b2f3.centre()]
    U = subs[0]
    a = next(a for a in range(27)
             if tuple(sorted(b2f3.conj(u, a) for u in U)) != U)
    V = tuple(sorted(b2f3.conj(u, a) for u in U))
    src = pair_ring(b2f3, U)
    dst = pair_ring(b2f3, V)
    x = random_ring_element(src.group, budget3, rng)
    y = conjugation_iso(x, src, dst, a)
    back = conjugation_iso(y, dst, src, b2f3.inv(a))
    assert back.equal_at_precision(x)


def test_in_j_ideal_detects_p_multiples(b2f3, budget3, rng):
    ring = pair_ring(b2f3, tuple(range(27)), b2f3.commutator_subgroup())
    x = random_ring_element(ring.group, budget3, rng)
    assert in_j_ideal(x.mul_p_power(1))
    y = GroupRingElement.one(ring.group, budget3)
    assert not in_j_ideal(y)


def test_char_p_power_identity_holds(b2f3, budget3, rng):
    for _ in range(10):
        x = random_ring_element(b2f3, budget3, rng)
        assert char_p_power_identity(x)


def test_trace_to_pair_needs_matching_group(b2f3, c3, budget3, rng):
    ring = pair_ring(c3, (0,))
    from conftest import random_conjvector
    y = random_conjvector(b2f3, budget3, rng)
    with pytest.raises(OutOfDomain):
        trace_to_pair(y, ring)
