import pytest

from iwasawalab.errors import AbelianInput, NotIndexP
from iwasawalab.families import (
    additive_family,
    artin_family,
    artin_family_c,
    brauer_family,
    rw_family,
    subgroup_orbit,
)


def test_artin_family_one_member_per_orbit(b2f3):
    fam = artin_family(b2f3)
    covered = set()
    for m in fam.members:
        assert m.subgroup not in covered
        covered.update(m.orbit)
    cyclics = [s for s in b2f3.all_subgroups() if len(s) in (1, 3)]
    assert covered == set(cyclics)


def test_artin_family_c_designated_element_is_central_commutator(b2f3):
    fc = artin_family_c(b2f3)
    assert fc.c in b2f3.centre()
    assert fc.c in b2f3.commutator_subgroup()
    assert fc.c != 0
    for m in fc.extra:
        assert len(m.subgroup) == 9
        assert m.case in ("a", "b")
        assert fc.c in m.subgroup


def test_artin_family_c_rejects_abelian(c33):
    with pytest.raises(AbelianInput):
        artin_family_c(c33)


def test_additive_family_degenerates_for_abelian(c33):
    fc = additive_family(c33)
    assert fc.c == 0 and fc.extra == ()
    assert len(fc.base.members) == 1 + 4  # trivial subgroup + four C_3's


def test_brauer_family_pairs_have_index_p_quotients(b2f3):
    fb = brauer_family(b2f3)
    for pr in fb.pairs:
        assert b2f3.is_subgroup(pr.U)
        assert set(pr.V) <= set(pr.U)
        # the finite quotient U/V is elementary of rank <= 2 here
        assert len(pr.U) // len(pr.V) in (1, 3, 9, 27)
    ids = [pr.pair_id for pr in fb.pairs]
    assert len(ids) == len(set(ids))


def test_brauer_family_links_are_well_formed(b2f3):
    fb = brauer_family(b2f3)
    for i, j in fb.tcc_edges:
        sup, sub = fb.pairs[i], fb.pairs[j]
        assert set(sub.U) < set(sup.U)
    for i, j, a in fb.conj_links:
        src, dst = fb.pairs[i], fb.pairs[j]
        assert tuple(sorted(b2f3.conj(u, a) for u in src.U)) == dst.U


def test_rw_family_requires_index_p(b2f3):
    W = next(s for s in b2f3.all_subgroups() if len(s) == 9)
    rw = rw_family(b2f3, W)
    assert len(rw.W) * 3 == b2f3.order
    assert all(mb < 3 for mb in rw.blocks)
    tiny = next(s for s in b2f3.all_subgroups() if len(s) == 3)
    with pytest.raises(NotIndexP):
        rw_family(b2f3, tiny)


def test_subgroup_orbit_closed_under_conjugation(b2f3):
    s = next(x for x in b2f3.all_subgroups()
             if len(x) == 3 and x[1] not in b2f3.centre())
    orbit = subgroup_orbit(b2f3, s)
    for member in orbit:
        for a in range(b2f3.order):
            assert tuple(sorted(b2f3.conj(u, a) for u in member)) in orbit
