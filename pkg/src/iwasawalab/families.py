"""Families of subgroups (and subquotient pairs) used by the theta maps.

All selections are deterministic: orbits are represented by their minimal
element in the index order, so rebuilding a family from the same group is
reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    AbelianInput,
    ExponentViolation,
    Inconsistent,
    NotAbelian,
    NotASubgroup,
    NotIndexP,
    OutOfDomain,
)
from .pgroup import FinitePGroup


def conj_subgroup(group: FinitePGroup, elems, a):
    return tuple(sorted(group.conj(g, a) for g in elems))


def subgroup_orbit(group: FinitePGroup, elems):
    return sorted({conj_subgroup(group, elems, a) for a in range(group.order)})


@dataclass(frozen=True)
class ArtinMember:
    """Orbit representative of a cyclic subgroup: U_h = <h> (h = 0 gives Gamma)."""

    h: int
    subgroup: tuple
    n_h: int  # |normalizer of <h> in G^f| = p^n_h
    orbit: tuple


@dataclass(frozen=True)
class ArtinFamily:
    group: FinitePGroup
    members: tuple  # ArtinMember, identity member first

    def member_for(self, h):
        for m in self.members:
            if m.h == h:
                return m
        raise OutOfDomain(f"no family member with generator {h}")


def artin_family(group: FinitePGroup) -> ArtinFamily:
    """One member per conjugation orbit of cyclic subgroups of G^f."""
    p = group.p
    seen = set()
    members = []
    cyclics = [s for s in group.all_subgroups() if len(s) in (1, p)]
    for s in sorted(cyclics, key=lambda s: (len(s), s)):
        if s in seen:
            continue
        orbit = subgroup_orbit(group, s)
        seen.update(orbit)
        rep = orbit[0]
        h = 0 if len(rep) == 1 else rep[1]
        nsize = len(group.normalizer(rep))
        n_h = 0
        while p ** n_h < nsize:
            n_h += 1
        if p ** n_h != nsize:
            raise Inconsistent("normalizer order is not a p-power")
        members.append(ArtinMember(h=h, subgroup=rep, n_h=n_h, orbit=tuple(orbit)))
    members.sort(key=lambda m: (len(m.subgroup), m.h))
    return ArtinFamily(group=group, members=tuple(members))


@dataclass(frozen=True)
class ArtinCMember:
    """Rank-two member U_{h,c} = <h, c> with its normalizer-action case."""

    h: int
    c: int
    subgroup: tuple
    n_h: int
    case: str  # "a": normalizer acts trivially; "b": action of order p
    action_k: int  # case b: conjugation sends h^i c^j -> h^i c^(k*i + j)


@dataclass(frozen=True)
class ArtinFamilyC:
    group: FinitePGroup
    base: ArtinFamily
    c: int
    extra: tuple  # ArtinCMember

    @property
    def members(self):
        return self.base.members

    def all_subgroups(self):
        """Subgroup tuples of every member (rank <= 1 then rank 2)."""
        out = [m.subgroup for m in self.base.members]
        out += [m.subgroup for m in self.extra]
        return out


def central_commutator_element(group: FinitePGroup) -> int:
    centre = set(group.centre())
    derived = group.commutator_subgroup()
    for g in derived:
        if g != 0 and g in centre:
            return g
    raise AbelianInput("group has trivial commutator subgroup")


def additive_family(group: FinitePGroup) -> ArtinFamilyC:
    """The cyclic-member family driving the additive isomorphism.

    Nonabelian groups get the full family with a designated central
    commutator element; abelian groups have no such element, but the
    additive maps only need the cyclic base, so they get a degenerate
    family with the identity designated and no rank-two members.
    """
    if group.is_abelian:
        return ArtinFamilyC(group=group, base=artin_family(group), c=0, extra=())
    return artin_family_c(group)


def artin_family_c(group: FinitePGroup) -> ArtinFamilyC:
    p = group.p
    base = artin_family(group)
    c = central_commutator_element(group)
    c_span = set(group.subgroup_closure([c]))
    extra = []
    seen = set()
    for m in base.members:
        if m.h == 0 or m.h in c_span:
            continue
        sub = group.subgroup_closure([m.h, c])
        if len(sub) != p * p:
            raise Inconsistent("<h, c> does not have order p^2")
        orbit = subgroup_orbit(group, sub)
        if orbit[0] in seen:
            continue
        seen.add(orbit[0])
        nsize = len(group.normalizer(sub))
        trivial = all(
            group.conj(g, a) == g for g in sub for a in group.normalizer(sub)
        )
        if trivial:
            if nsize != p ** m.n_h:
                raise Inconsistent("case (a) normalizer has unexpected order")
            case, k = "a", 0
        else:
            if nsize != p ** (m.n_h + 1):
                raise Inconsistent("case (b) normalizer has unexpected order")
            case = "b"
            # find k with a^-1 h a = h c^k for some normalizer element acting nontrivially
            k = 0
            for a in group.normalizer(sub):
                hh = group.conj(m.h, a)
                if hh != m.h:
                    x, kk = m.h, 0
                    while x != hh:
                        x = group.mul(x, c)
                        kk += 1
                    k = kk
                    break
        extra.append(
            ArtinCMember(h=m.h, c=c, subgroup=sub, n_h=m.n_h, case=case, action_k=k)
        )
    return ArtinFamilyC(group=group, base=base, c=c, extra=tuple(extra))


@dataclass(frozen=True)
class BrauerPair:
    U: tuple
    V: tuple  # commutator subgroup of U

    @property
    def pair_id(self):
        return "U" + ".".join(map(str, self.U)) + "-V" + ".".join(map(str, self.V))


@dataclass(frozen=True)
class BrauerFamily:
    group: FinitePGroup
    pairs: tuple  # all (U, [U,U]) pairs
    tcc_edges: tuple  # (i, j): pairs[j].U is an index-p subgroup of pairs[i].U
    conj_links: tuple  # (i, j, a): pairs[j].U == a^-1 pairs[i].U a

    def pair_index(self, U):
        key = tuple(sorted(U))
        for i, pr in enumerate(self.pairs):
            if pr.U == key:
                return i
        raise OutOfDomain("subgroup is not in the family")


def brauer_family(group: FinitePGroup) -> BrauerFamily:
    subs = group.all_subgroups()
    pairs = []
    for U in subs:
        idx = {e: i for i, e in enumerate(U)}
        table = [[idx[group.table[a][b]] for b in U] for a in U]
        ug = FinitePGroup(group.p, table, require_exponent_p=False)
        V = tuple(sorted(U[i] for i in ug.commutator_subgroup()))
        pairs.append(BrauerPair(U=U, V=V))
    index = {pr.U: i for i, pr in enumerate(pairs)}
    tcc = []
    for i, pr in enumerate(pairs):
        for j, qr in enumerate(pairs):
            if len(qr.U) * group.p == len(pr.U) and set(qr.U) <= set(pr.U):
                tcc.append((i, j))
    links = []
    for i, pr in enumerate(pairs):
        seen = {pr.U}
        for a in range(1, group.order):
            img = conj_subgroup(group, pr.U, a)
            if img != pr.U and img not in seen:
                seen.add(img)
                links.append((i, index[img], a))
    return BrauerFamily(
        group=group, pairs=tuple(pairs), tcc_edges=tuple(tcc), conj_links=tuple(links)
    )


# ---------------------------------------------------------------------------
# index-p abelian wall family with Jordan data
# ---------------------------------------------------------------------------


def _fp_basis_of_abelian(group: FinitePGroup, elems):
    """A minimal generating family of an elementary abelian subgroup."""
    basis = []
    span = {0}
    for g in elems:
        if g not in span:
            basis.append(g)
            new = set()
            for s in span:
                x = s
                for _ in range(group.p):
                    new.add(x)
                    x = group.mul(x, g)
            span = new
    return basis


@dataclass(frozen=True)
class RWFamily:
    group: FinitePGroup
    W: tuple
    lam: int  # fixed generator of G^f / W^f
    basis: tuple  # Jordan basis of W^f as group elements, chain by chain
    blocks: tuple  # block sizes m_i (each < p)
    Wprime: tuple  # subgroup generated by the chain generators e_{i, m_i}

    def chain_elements(self):
        out = []
        k = 0
        for m in self.blocks:
            out.append(self.basis[k : k + m])
            k += m
        return out


def rw_family(group: FinitePGroup, W_elems) -> RWFamily:
    """Family for G with an abelian index-p wall W^f.

    The conjugation action of the chosen generator lambda on W^f is unipotent;
    we return a Jordan basis e_{i,1..m_i} with tau(e_{i,j}) = e_{i,j} + e_{i,j-1}
    (written additively; e_{i,0} = 0) and the subgroup W' spanned by the chain
    generators e_{i,m_i}.
    """
    p = group.p
    W = tuple(sorted(W_elems))
    if not group.is_subgroup(W):
        raise NotASubgroup("wall is not a subgroup")
    if len(W) * p != group.order:
        raise NotIndexP("wall does not have index p")
    sub_idx = {e: i for i, e in enumerate(W)}
    table = [[sub_idx[group.table[a][b]] for b in W] for a in W]
    wg = FinitePGroup(p, table, require_exponent_p=False)
    if not wg.is_abelian:
        raise NotAbelian("wall is not abelian")
    lam = min(g for g in range(group.order) if g not in set(W))
    basis0 = _fp_basis_of_abelian(group, W)
    d = len(basis0)
    # coordinates of every W element in terms of basis0
    coord = {0: tuple([0] * d)}
    frontier = [0]
    for i, b in enumerate(basis0):
        new = dict(coord)
        for g, v in coord.items():
            x = g
            for k in range(1, p):
                x = group.mul(x, b)
                vv = list(v)
                vv[i] = k
                new[x] = tuple(vv)
        coord = new
    if len(coord) != len(W):
        raise Inconsistent("wall coordinates are incomplete")

    def from_coord(vec):
        g = 0
        for i, k in enumerate(vec):
            g = group.mul(g, group.power(basis0[i], k))
        return g

    # matrix of tau - 1 where tau(w) = lam^-1 w lam
    Nmat = []
    for b in basis0:
        img = group.conj(b, lam)
        diff = group.mul(img, group.inverse[b])
        Nmat.append(coord[diff])  # row i = (tau - 1)(basis0[i]) in coordinates
    # Jordan chains of the nilpotent matrix N (acting as v -> v N, row convention)
    chains = _jordan_chains(Nmat, p, d)
    basis = []
    blocks = []
    for chain in chains:
        if len(chain) >= p:
            raise ExponentViolation("Jordan block of size >= p contradicts exponent p")
        blocks.append(len(chain))
        # chain[0] is the generator e_{i,m_i}; store bottom-up: e_{i,1}..e_{i,m_i}
        basis.extend(from_coord(v) for v in reversed(chain))
    wprime = group.subgroup_closure([from_coord(ch[0]) for ch in chains])
    return RWFamily(
        group=group,
        W=W,
        lam=lam,
        basis=tuple(basis),
        blocks=tuple(blocks),
        Wprime=tuple(wprime),
    )


def _mat_vec(v, M, p):
    d = len(v)
    return tuple(sum(v[i] * M[i][j] for i in range(d)) % p for j in range(d))


def _rref(rows, p):
    rows = [list(r) for r in rows if any(r)]
    cols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] % p), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][c], -1, p)
        rows[r] = [(x * inv) % p for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(rows[i][j] - f * rows[r][j]) % p for j in range(cols)]
        pivots.append(c)
        r += 1
    return [tuple(row) for row in rows[:r]], pivots


def _in_span(rows, v, p):
    if not any(v):
        return True
    if not rows:
        return False
    red, _ = _rref(list(rows) + [], p)
    work = list(v)
    for row in red:
        c = next(i for i, x in enumerate(row) if x)
        if work[c]:
            f = work[c]
            work = [(work[j] - f * row[j]) % p for j in range(len(work))]
    return not any(work)


def _jordan_chains(Nmat, p, d):
    """Jordan chains of a nilpotent d x d matrix over F_p (row action v -> vN).

    Returns a list of chains, each [v, vN, vN^2, ...] ending just before 0.
    """
    # kernel filtration via powers
    powers = [tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))]
    while True:
        last = powers[-1]
        nxt = tuple(_mat_vec(row, Nmat, p) for row in last)
        powers.append(nxt)
        if all(not any(r) for r in nxt):
            break
    s = len(powers) - 1  # nilpotency index
    all_vecs = list(_enumerate_fp(d, p))
    chains = []
    used_span = []  # rows spanning (chosen chain vectors)
    for height in range(s, 0, -1):
        Nh = powers[height]
        Nh1 = powers[height - 1]
        for v in all_vecs:
            if not any(v):
                continue
            if any(_apply_rows(v, Nh, p)):
                continue  # not killed by N^height
            if not any(_apply_rows(v, Nh1, p)):
                continue  # killed too early
            chain = [v]
            x = v
            for _ in range(height - 1):
                x = _mat_vec(x, Nmat, p)
                chain.append(x)
            if any(not _in_span(used_span, c, p) for c in chain):
                # accept only if the full chain extends the current span freely
                candidate = used_span + chain
                red, _ = _rref(candidate, p)
                if len(red) == len(used_span) + len(chain):
                    chains.append(chain)
                    used_span = [tuple(r) for r in red]
        # stop early once the span is complete
        if len(used_span) == d:
            break
    if sum(len(c) for c in chains) != d:
        raise Inconsistent("Jordan chain extraction failed")
    return chains


def _apply_rows(v, M, p):
    d = len(v)
    return tuple(sum(v[i] * M[i][j] for i in range(d)) % p for j in range(d))


def _enumerate_fp(d, p):
    from itertools import product

    return product(range(p), repeat=d)
