import pytest

from iwasawalab.errors import NotInPhi, NotInPhiB
from iwasawalab.families import additive_family, artin_family_c, brauer_family
from iwasawalab.precision_core import TruncatedSeries
from iwasawalab.class_algebra import SubmoduleDescriptor, pair_ring
from iwasawalab.theta_additive import (
    AdditiveTuple,
    artin_I_descriptor,
    artin_I_prime_descriptor,
    normalizer_trace_image_gens,
    phi_A_membership,
    phi_B_membership,
    reconstruct_from_brauer,
    theta_A_inverse,
    theta_A_plus,
    theta_B_plus,
    trace_image_gens,
)

from conftest import random_conjvector


def test_cyclic_roundtrip(b2f3, budget3, rng):
    fc = artin_family_c(b2f3)
    for _ in range(10):
        y = random_conjvector(b2f3, budget3, rng)
        t = theta_A_plus(y, fc)
        phi_A_membership(t)
        assert theta_A_inverse(t).equal_at_precision(y)


def test_membership_rejects_corruption(b2f3, budget3, rng):
    fc = artin_family_c(b2f3)
    y = random_conjvector(b2f3, budget3, rng)
    t = theta_A_plus(y, fc)
    h = fc.base.members[1].h
    bad = dict(t.components)
    bad[h] = bad[h] + bad[h].one(bad[h].group, budget3)
    with pytest.raises(NotInPhi):
        phi_A_membership(AdditiveTuple(family=fc, components=bad))


def test_brauer_roundtrip(b2f3, budget3, rng):
    fc = artin_family_c(b2f3)
    fb = brauer_family(b2f3)
    for _ in range(10):
        y = random_conjvector(b2f3, budget3, rng)
        t = theta_B_plus(y, fb)
        phi_B_membership(t)
        assert reconstruct_from_brauer(t, fc).equal_at_precision(y)


def test_brauer_membership_names_the_broken_edge(b2f3, budget3, rng):
    fb = brauer_family(b2f3)
    y = random_conjvector(b2f3, budget3, rng)
    t = theta_B_plus(y, fb)
    i, j = fb.tcc_edges[0]
    comps = list(t.components)
    comps[j] = comps[j].scalar_mul(4)
    bad = type(t)(family=fb, components=tuple(comps))
    records = phi_B_membership(bad, strict=False)
    failing = [r for r in records if not r[3]]
    assert failing
    assert any(r[0] in ("TCC", "CCC") and j in (r[1], r[2]) for r in failing)


def test_trace_image_closed_form_matches_computed(b2f3):
    fc = artin_family_c(b2f3)
    for m in fc.base.members:
        desc = artin_I_descriptor(fc, m.h)
        computed = trace_image_gens(b2f3, m.subgroup)
        assert desc.lattice_span_contains(computed)
        cdesc = SubmoduleDescriptor(ring=desc.ring, name="computed",
                                    gens=tuple(computed))
        assert cdesc.lattice_span_contains(desc.gens)


def test_normalizer_trace_image_closed_form_matches_computed(b2f3):
    fc = artin_family_c(b2f3)
    keys = [0] + [m.h for m in fc.base.members if m.h] + [
        ("c", m.h) for m in fc.extra]
    for key in keys:
        desc = artin_I_prime_descriptor(fc, key)
        computed = normalizer_trace_image_gens(
            b2f3, tuple(sorted(desc.ring.U)))
        assert desc.lattice_span_contains(computed)
        cdesc = SubmoduleDescriptor(ring=desc.ring, name="computed",
                                    gens=tuple(computed))
        assert cdesc.lattice_span_contains(desc.gens)


def test_abelian_family_roundtrip(c33, budget3, rng):
    fc = additive_family(c33)
    for _ in range(5):
        y = random_conjvector(c33, budget3, rng)
        t = theta_A_plus(y, fc)
        phi_A_membership(t)
        assert theta_A_inverse(t).equal_at_precision(y)
