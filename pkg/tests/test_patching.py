import pytest

from iwasawalab.errors import (
    Case2ChainFailure,
    HypothesisFails,
    NotInPsi,
    OracleGap,
    OutOfDomain,
    Unsupported,
)
from iwasawalab.precision_core import TruncatedSeries
from iwasawalab.families import artin_family_c, brauer_family
from iwasawalab.k1_norms import (
    LocalizedUnit,
    theta_norm_localized,
    theta_tuple,
    theta_tuple_localized,
)
from iwasawalab.class_algebra import pair_ring
from iwasawalab.logarithm_lab import integral_log
from iwasawalab.patching import (
    approximate_pseudomeasure,
    burns_patch,
    case2_chain,
    finite_level_image,
    level_modulus_exponent,
    oracle_from_text,
    oracle_to_text,
    orbital_sum_check,
    random_unit,
    rw_verify,
    strong_congruence_check,
    synthetic_oracle,
    torsion_refinement,
    tuple_from_text,
    tuple_to_text,
)

from conftest import random_unit_element


@pytest.fixture(scope="module")
def patch_fixture():
    import random
    from iwasawalab.precision_core import PrecisionBudget
    from iwasawalab.pgroup import build_unitriangular

    b = PrecisionBudget(3, 6, 8, 4)
    g = build_unitriangular(2, 3)
    fb = brauer_family(g)
    fc = artin_family_c(g)
    rng = random.Random(99)
    x = random_unit(g, b, rng)
    u = random_unit(g, b, rng)
    den = TruncatedSeries.from_coeffs(b, [3, 1])
    f_t = theta_tuple_localized(LocalizedUnit(x, den), fb)
    xi_t = theta_tuple_localized(LocalizedUnit(x * u, den), fb)
    return g, b, fb, fc, x, u, f_t, xi_t


def test_synthetic_oracle_reconstructs_pseudomeasure():
    xi = [(q + 2 * a + 1) for q in range(3) for a in range(9)]
    oracle, xi_el, images = synthetic_oracle(
        3, 6, 2, "test-pair", 3, 4, xi, [1, 2], [2, 4])
    for w in (1, 2):
        got = approximate_pseudomeasure(oracle, w, 2)
        want = images[w]
        assert got.m == want.m == oracle.m
        assert got.coeffs == want.coeffs
    # weight independence
    a = approximate_pseudomeasure(oracle, 1, 2)
    b = approximate_pseudomeasure(oracle, 1, 4)
    assert a.coeffs == b.coeffs


def test_pseudomeasure_weight_domain():
    oracle, _, _ = synthetic_oracle(
        3, 6, 1, "t", 3, 4, [1] * 9, [1], [2])
    with pytest.raises(OutOfDomain):
        approximate_pseudomeasure(oracle, 1, 3)  # not a multiple of p-1
    with pytest.raises(OracleGap):
        approximate_pseudomeasure(oracle, 5, 2)  # no rows for that w


def test_oracle_text_roundtrip():
    oracle, _, _ = synthetic_oracle(
        3, 6, 1, "t", 3, 4, list(range(9)), [1], [2])
    back = oracle_from_text(oracle_to_text(oracle))
    assert back == oracle
    with pytest.raises(Unsupported):
        oracle_from_text("zeta-oracle-v9\n")


def test_finite_level_image_is_a_ring_map(b2f3, budget3):
    from iwasawalab.class_algebra import GroupRingElement

    ring = pair_ring(b2f3, (0,))
    x = GroupRingElement.from_dict(
        ring.group, budget3,
        {0: TruncatedSeries.from_coeffs(budget3, [1, 1])})
    img = finite_level_image(x, ring, 2, 3)
    sq = finite_level_image(x * x, ring, 2, 3)
    got = [0] * len(sq.coeffs)
    for a in range(9):
        for c in range(9):
            got[(a + c) % 9] += img.coeffs[a] * img.coeffs[c]
    assert [v % 3 ** img.m for v in got] == list(sq.coeffs)


def test_orbital_sums_pass(patch_fixture):
    g, b, fb, fc, x, u, f_t, xi_t = patch_fixture
    for m in list(fc.base.members) + list(fc.extra):
        rep = orbital_sum_check(g, m.subgroup, 2, b, fc=fc)
        assert rep.ok
        assert all(r.ok for r in rep.records)


def test_burns_patch_recovers_unit(patch_fixture):
    g, b, fb, fc, x, u, f_t, xi_t = patch_fixture
    cert = burns_patch(f_t, xi_t, fc)
    want = theta_tuple(u, fb)
    for i, w in cert.w_components.items():
        assert w.equal_at_precision(want.components[i])
    assert cert.y.equal_at_precision(integral_log(u).value)
    assert all(r.ok for r in cert.records)
    sc = strong_congruence_check(
        type(f_t)(fb, dict(cert.w_components), localized=False), fc)
    assert sc.ok


def test_burns_patch_rejects_corrupted_tuple(patch_fixture):
    g, b, fb, fc, x, u, f_t, xi_t = patch_fixture
    comps = dict(xi_t.components)
    k = sorted(comps)[1]
    comps[k] = comps[k].mul_scalar(
        TruncatedSeries.from_coeffs(b, [4]))
    bad = type(xi_t)(fb, comps, localized=True)
    with pytest.raises(NotInPsi):
        burns_patch(f_t, bad, fc)


def test_torsion_refinement_bit_exact(patch_fixture):
    g, b, fb, fc, x, u, f_t, xi_t = patch_fixture
    xu = LocalizedUnit(x * u, TruncatedSeries.from_coeffs(b, [3, 1]))

    def provider(Uq, Vq):
        if len(Uq) == g.order and len(Vq) == 1:
            return xu
        return theta_norm_localized(xu, pair_ring(g, Uq, Vq))

    adjusted, records = torsion_refinement(
        xi_t, target_ab=None, fc=fc, provider=provider)
    for i in xi_t.components:
        assert adjusted.components[i].equal_at_precision(xi_t.components[i])
    assert records


def test_case2_chain_reaches_the_derived_subgroup(b2f3):
    fc = artin_family_c(b2f3)
    U = next(s for s in b2f3.all_subgroups()
             if len(s) == 3 and fc.c not in s)
    steps = case2_chain(b2f3, U, fc.c)
    assert steps
    U_last, _, V_last = steps[-1]
    assert fc.c in V_last


def test_case2_chain_failure_in_abelian_groups(c33):
    with pytest.raises(Case2ChainFailure):
        case2_chain(c33, (0,), 1)


def test_tuple_text_roundtrip(patch_fixture):
    g, b, fb, fc, x, u, f_t, xi_t = patch_fixture
    back = tuple_from_text(tuple_to_text(f_t), fb, b)
    for i in f_t.components:
        assert back.components[i].equal_at_precision(f_t.components[i])


def test_rw_verify_all_steps(b2f3, budget3):
    W = next(s for s in b2f3.all_subgroups() if len(s) == 9)
    rep = rw_verify(b2f3, W, budget3, seed=5, trials=2)
    assert rep.ok
    non_membership = [r for r in rep.records
                      if r.name.startswith("step3-nonmembership")]
    assert len(non_membership) == 8
    assert all(r.ok for r in non_membership)
