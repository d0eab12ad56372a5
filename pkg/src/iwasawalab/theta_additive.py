"""Additive theta maps: trace tuples, their lattices, and explicit inverses.

For a class vector y over G = G^f x Gamma the additive theta of a family is
the tuple of traces into each member subquotient.  The image is cut out by
trace-compatibility plus membership in explicitly described lattices (the
I_U), and on that image theta has an exact closed-form inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .class_algebra import (
    ConjVector,
    GroupRingElement,
    MembershipCertificate,
    PairRing,
    SubmoduleDescriptor,
    abelian_trace,
    canonical_map,
    conjugation_iso,
    pair_ring,
    trace_to_pair,
)
from .errors import Inconsistent, NotInPhi, NotInPhiB, NotInPhiRW, OutOfDomain
from .families import ArtinFamilyC, ArtinMember, BrauerFamily, RWFamily
from .precision_core import TruncatedSeries


# ---------------------------------------------------------------------------
# closed-form lattice descriptors
# ---------------------------------------------------------------------------


def _cyclic_local_powers(ring: PairRing, h):
    """Local indices of h^0, h^1, ..., h^(p-1) inside the pair ring."""
    g = ring.parent
    out = []
    x = 0
    for _ in range(g.p):
        out.append(ring.project_global(x))
        x = g.mul(x, h)
    return out

def _basis_vec(order, entries):
    v = [0] * order
    for idx, val in entries:
        v[idx] += val
    return tuple(v)


def _rank2_coordinates(ring: PairRing, h, c):
    """Local index of h^i c^j for 0 <= i, j < p."""
    g = ring.parent
    p = g.p
    out = {}
    hi = 0
    for i in range(p):
        x = hi
        for j in range(p):
            out[(i, j)] = ring.project_global(x)
            x = g.mul(x, c)
        hi = g.mul(hi, h)
    return out


def artin_I_descriptor(fc: ArtinFamilyC, key) -> SubmoduleDescriptor:
    """Closed form of the trace-image lattice I_U for U in the extended family.

    key is the generator h for a rank-one member, or ('c', h) for U_{h,c}.
    """
    g = fc.group
    p = g.p
    N = g.log_order
    if key == 0:
        ring = pair_ring(g, (0,))
        return SubmoduleDescriptor(ring=ring, name="I_Gamma", gens=((p ** N,),))
    if isinstance(key, tuple) and key[0] == "c":
        m = next(x for x in fc.extra if x.h == key[1])
        ring = pair_ring(g, m.subgroup)
        order = ring.group.order
        pos = _rank2_coordinates(ring, m.h, m.c)
        gens = []
        for j in range(p):
            gens.append(_basis_vec(order, [(pos[(0, j)], p ** (N - 2))]))
        if m.case == "a":
            for i in range(1, p):
                for j in range(p):
                    gens.append(_basis_vec(order, [(pos[(i, j)], p ** (m.n_h - 2))]))
        else:
            for i in range(1, p):
                gens.append(
                    _basis_vec(
                        order, [(pos[(i, j)], p ** (m.n_h - 2)) for j in range(p)]
                    )
                )
        return SubmoduleDescriptor(ring=ring, name=f"I_U_{m.h},c", gens=tuple(gens))
    m = fc.base.member_for(key)
    ring = pair_ring(g, m.subgroup)
    order = ring.group.order
    pows = _cyclic_local_powers(ring, m.h)
    gens = [_basis_vec(order, [(pows[0], p ** (N - 1))])]
    for i in range(1, p):
        gens.append(_basis_vec(order, [(pows[i], p ** (m.n_h - 1))]))
    return SubmoduleDescriptor(ring=ring, name=f"I_U_{m.h}", gens=tuple(gens))


def artin_I_prime_descriptor(fc: ArtinFamilyC, key) -> SubmoduleDescriptor:
    """Closed form of the normalizer-trace lattice I'_U."""
    g = fc.group
    p = g.p
    N = g.log_order
    if key == 0:
        ring = pair_ring(g, (0,))
        return SubmoduleDescriptor(ring=ring, name="Ip_Gamma", gens=((p ** N,),))
    if isinstance(key, tuple) and key[0] == "c":
        m = next(x for x in fc.extra if x.h == key[1])
        ring = pair_ring(g, m.subgroup)
        order = ring.group.order
        pos = _rank2_coordinates(ring, m.h, m.c)
        gens = []
        if m.case == "a":
            for i in range(p):
                for j in range(p):
                    gens.append(_basis_vec(order, [(pos[(i, j)], p ** (m.n_h - 2))]))
        else:
            for j in range(p):
                gens.append(_basis_vec(order, [(pos[(0, j)], p ** (m.n_h - 1))]))
            for i in range(1, p):
                gens.append(
                    _basis_vec(
                        order, [(pos[(i, j)], p ** (m.n_h - 2)) for j in range(p)]
                    )
                )
        return SubmoduleDescriptor(ring=ring, name=f"Ip_U_{m.h},c", gens=tuple(gens))
    m = fc.base.member_for(key)
    ring = pair_ring(g, m.subgroup)
    order = ring.group.order
    pows = _cyclic_local_powers(ring, m.h)
    gens = [_basis_vec(order, [(pows[i], p ** (m.n_h - 1))]) for i in range(p)]
    return SubmoduleDescriptor(ring=ring, name=f"Ip_U_{m.h}", gens=tuple(gens))


def normalizer_trace_image_gens(group, U):
    """Trace image from classes of the normalizer N(U): orbit sums with
    stabilizer multiplicity -- the computed counterpart of I'_U."""
    ring = pair_ring(group, tuple(sorted(U)))
    nu = group.normalizer(U)
    reps = []
    covered = set()
    uset = set(U)
    for a in nu:
        if a not in covered:
            reps.append(a)
            covered |= {group.mul(u, a) for u in uset}
    gens = []
    for y in U:
        vec = [0] * ring.group.order
        for a in reps:
            x = group.conj(y, a)
            vec[ring.project_global(x)] += 1
        gens.append(tuple(vec))
    return gens


def trace_image_gens(y_group, U):
    """Generators of the full trace image I_U: traces of every class of G."""
    ring = pair_ring(y_group, tuple(sorted(U)))
    reps = y_group.left_transversal(U)
    gens = []
    for cl in y_group.conjugacy_classes():
        vec = [0] * ring.group.order
        g = cl[0]
        for a in reps:
            x = y_group.conj(g, a)
            if ring.contains_global(x):
                vec[ring.project_global(x)] += 1
        if any(vec):
            gens.append(tuple(vec))
    return gens


def rw_I_W_descriptor(rw: RWFamily) -> SubmoduleDescriptor:
    """I_W: free on lambda-orbit sums (fixed elements weighted by p)."""
    g = rw.group
    p = g.p
    ring = pair_ring(g, rw.W)
    order = ring.group.order
    gens = []
    seen = set()
    for w in rw.W:
        if w in seen:
            continue
        orbit = []
        x = w
        while x not in orbit:
            orbit.append(x)
            x = g.conj(x, rw.lam)
        seen.update(orbit)
        mult = p // len(orbit)
        vec = [0] * order
        for x in orbit:
            vec[ring.project_global(x)] += mult
        gens.append(tuple(vec))
    return SubmoduleDescriptor(ring=ring, name="I_W", gens=tuple(gens))


# ---------------------------------------------------------------------------
# additive theta over the cyclic family
# ---------------------------------------------------------------------------


@dataclass
class AdditiveTuple:
    """Tuple of trace components indexed by family-member generator h."""

    family: ArtinFamilyC
    components: dict  # h -> GroupRingElement over pair_ring(G, U_h)

    def component(self, h):
        return self.components[h]


def theta_A_plus(y: ConjVector, fc: ArtinFamilyC) -> AdditiveTuple:
    g = fc.group
    comps = {}
    for m in fc.base.members:
        ring = pair_ring(g, m.subgroup)
        comps[m.h] = trace_to_pair(y, ring)
    return AdditiveTuple(family=fc, components=comps)


def phi_A_membership(t: AdditiveTuple, strict=True):
    """Check trace compatibility and lattice membership; returns certificates."""
    fc = t.family
    g = fc.group
    gamma_ring = pair_ring(g, (0,))
    certs = {}
    y_e = t.components[0]
    for m in fc.base.members:
        comp = t.components[m.h]
        desc = artin_I_descriptor(fc, m.h)
        cert = desc.contains(comp)
        certs[m.h] = cert
        if not cert.member:
            if strict:
                raise NotInPhi(f"component {m.h} outside {desc.name}: {cert.reason}")
            return None
        if m.h != 0:
            ring = pair_ring(g, m.subgroup)
            tr = abelian_trace(comp, gamma_ring, ring)
            if not tr.equal_at_precision(y_e):
                if strict:
                    raise NotInPhi(f"trace of component {m.h} does not match")
                return None
    return certs


def theta_A_inverse(t: AdditiveTuple) -> ConjVector:
    """Explicit inverse on the image: exact divisions certified by membership."""
    fc = t.family
    g = fc.group
    p, N = g.p, g.log_order
    phi_A_membership(t)
    b = next(iter(t.components.values())).budget

    def embed(comp, ring):
        out = ConjVector.zero(g, b, comp.known_precision)
        for i, c in enumerate(comp.coeffs):
            if not c.is_zero:
                out = out + ConjVector.from_class(g, b, ring.lift_global(i), c)
        return out

    y_e = t.components[0]
    acc = ConjVector.from_class(g, b, 0, y_e.coeffs[0].mul_p_power(-N))
    e_div_p = y_e.coeffs[0].divide_exact(p)
    for m in fc.base.members:
        if m.h == 0:
            continue
        ring = pair_ring(g, m.subgroup)
        term = embed(t.components[m.h], ring) - ConjVector.from_class(g, b, 0, e_div_p)
        acc = acc + term.mul_p_power(-(m.n_h - 1))
    return acc


# ---------------------------------------------------------------------------
# additive theta over the full subquotient family
# ---------------------------------------------------------------------------


@dataclass
class BrauerTuple:
    family: BrauerFamily
    components: tuple  # aligned with family.pairs

    def component(self, i):
        return self.components[i]


def theta_B_plus(y: ConjVector, fb: BrauerFamily) -> BrauerTuple:
    g = fb.group
    comps = []
    for pr in fb.pairs:
        ring = pair_ring(g, pr.U, pr.V)
        comps.append(trace_to_pair(y, ring))
    return BrauerTuple(family=fb, components=tuple(comps))


def phi_B_membership(t: BrauerTuple, strict=True):
    """Trace-compatibility (TCC) and conjugation-compatibility (CCC+) checks.

    Returns a list of (kind, i, j, ok) records; raises on first failure when
    strict.
    """
    fb = t.family
    g = fb.group
    records = []
    for i, j in fb.tcc_edges:
        sup = fb.pairs[i]
        sub = fb.pairs[j]
        ring_sup = pair_ring(g, sup.U, sup.V)
        ring_mid = pair_ring(g, sub.U, sup.V)
        ring_sub = pair_ring(g, sub.U, sub.V)
        tr = abelian_trace(t.components[i], ring_mid, ring_sup)
        can = canonical_map(t.components[j], ring_sub, ring_mid)
        ok = tr.equal_at_precision(can)
        records.append(("TCC", i, j, ok))
        if strict and not ok:
            raise NotInPhiB(f"trace compatibility fails: {sup.pair_id} -> {sub.pair_id}")
    for i, j, a in fb.conj_links:
        src = fb.pairs[i]
        dst = fb.pairs[j]
        ring_src = pair_ring(g, src.U, src.V)
        ring_dst = pair_ring(g, dst.U, dst.V)
        img = conjugation_iso(t.components[i], ring_src, ring_dst, a)
        ok = img.equal_at_precision(t.components[j])
        records.append(("CCC", i, j, ok))
        if strict and not ok:
            raise NotInPhiB(f"conjugation compatibility fails: {src.pair_id} -> {dst.pair_id}")
    return records


def reconstruct_from_brauer(t: BrauerTuple, fc: ArtinFamilyC) -> ConjVector:
    """Rebuild y from a full tuple: invert on the cyclic members, then verify."""
    fb = t.family
    g = fb.group
    comps = {}
    for m in fc.base.members:
        i = fb.pair_index(m.subgroup)
        comps[m.h] = t.components[i]
    y = theta_A_inverse(AdditiveTuple(family=fc, components=comps))
    check = theta_B_plus(y, fb)
    for a, bb in zip(check.components, t.components):
        if not a.equal_at_precision(bb):
            raise NotInPhiB("tuple is trace/conjugation compatible but not a theta image")
    return y


# ---------------------------------------------------------------------------
# additive theta for the abelian-wall family
# ---------------------------------------------------------------------------


@dataclass
class RWTuple:
    family: RWFamily
    y_ab: GroupRingElement  # over Lambda(G^ab)
    y_W: GroupRingElement  # over Lambda(W)


def _rw_rings(rw: RWFamily):
    g = rw.group
    derived = g.commutator_subgroup()
    ab_ring = pair_ring(g, tuple(range(g.order)), derived)
    w_ring = pair_ring(g, rw.W)
    return ab_ring, w_ring


def theta_RW_plus(y: ConjVector, rw: RWFamily) -> RWTuple:
    ab_ring, w_ring = _rw_rings(rw)
    return RWTuple(
        family=rw,
        y_ab=trace_to_pair(y, ab_ring),
        y_W=trace_to_pair(y, w_ring),
    )


def _orbit_structure(rw: RWFamily):
    """Lambda-orbits on W^f, each as (orbit tuple, class representative)."""
    g = rw.group
    orbits = []
    seen = set()
    for w in rw.W:
        if w not in seen:
            orbit = []
            x = w
            while x not in orbit:
                orbit.append(x)
                x = g.conj(x, rw.lam)
            seen.update(orbit)
            orbits.append(tuple(orbit))
    return orbits


def phi_RW_membership(t: RWTuple, strict=True):
    """Image conditions: y_W in I_W, and the abelianized component matches
    the orbit coordinates of y_W on the wall part."""
    rw = t.family
    g = rw.group
    desc = rw_I_W_descriptor(rw)
    cert = desc.contains(t.y_W)
    if not cert.member:
        if strict:
            raise NotInPhiRW(f"wall component outside I_W: {cert.reason}")
        return None
    ab_ring, w_ring = _rw_rings(rw)
    orbits = _orbit_structure(rw)
    b = t.y_W.budget
    expect = GroupRingElement.zero(ab_ring.group, b, cert.coords[0].known_precision)
    for orbit, coord in zip(orbits, cert.coords):
        i = ab_ring.project_global(orbit[0])
        expect = expect + GroupRingElement.from_element(ab_ring.group, b, i, coord)
    for w in rw.W:
        i = ab_ring.project_global(w)
        if not t.y_ab.coeffs[i].equal_at_precision(expect.coeffs[i]):
            if strict:
                raise NotInPhiRW("abelianized component disagrees with wall coordinates")
            return None
    return cert


def theta_RW_inverse(t: RWTuple) -> ConjVector:
    """Closed-form inverse: wall classes from I_W coordinates, the rest from
    the abelianized component (classes off the wall biject with their images)."""
    rw = t.family
    g = rw.group
    cert = phi_RW_membership(t)
    ab_ring, _ = _rw_rings(rw)
    b = t.y_W.budget
    orbits = _orbit_structure(rw)
    acc = ConjVector.zero(g, b, cert.coords[0].known_precision)
    for orbit, coord in zip(orbits, cert.coords):
        acc = acc + ConjVector.from_class(g, b, orbit[0], coord)
    wbar = {ab_ring.project_global(w) for w in rw.W}
    seen_classes = set()
    for cl in g.conjugacy_classes():
        rep = cl[0]
        if rep in set(rw.W):
            continue
        i = ab_ring.project_global(rep)
        if i in wbar:
            raise Inconsistent("off-wall class maps into the wall image")
        c = t.y_ab.coeffs[i]
        if g.class_index(rep) in seen_classes:
            raise Inconsistent("off-wall classes are not separated by G^ab")
        seen_classes.add(g.class_index(rep))
        if not c.is_zero:
            acc = acc + ConjVector.from_class(g, b, rep, c)
    return acc
