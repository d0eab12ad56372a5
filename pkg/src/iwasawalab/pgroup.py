"""Finite p-groups given by explicit multiplication tables.

Elements are integers 0..order-1 with 0 the identity.  All subgroup,
conjugacy, quotient, and transfer computations are exact table walks; the
sizes in play (order <= p^6) keep everything comfortably in memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

from .errors import (
    ExponentViolation,
    Inconsistent,
    NotASubgroup,
    NotIndexP,
    NotNormal,
    OutOfDomain,
)


class FinitePGroup:
    """A finite p-group with a full multiplication table."""

    def __init__(self, p, table, labels=None, require_exponent_p=True, name=""):
        self.p = p
        self.table = tuple(tuple(r) for r in table)
        self.order = len(self.table)
        self.name = name or f"group-of-order-{self.order}"
        m = self.order
        if any(len(r) != m for r in self.table):
            raise Inconsistent("multiplication table is not square")
        o = m
        k = 0
        while o % p == 0:
            o //= p
            k += 1
        if o != 1:
            raise OutOfDomain(f"order {m} is not a power of p={p}")
        self.log_order = k
        if any(self.table[0][j] != j or self.table[j][0] != j for j in range(m)):
            raise Inconsistent("index 0 is not a two-sided identity")
        for i in range(m):
            if sorted(self.table[i]) != list(range(m)) or sorted(
                self.table[j][i] for j in range(m)
            ) != list(range(m)):
                raise Inconsistent("multiplication table is not a Latin square")
        self.labels = list(labels) if labels else [f"g{i}" for i in range(m)]
        self.inverse = [0] * m
        for i in range(m):
            self.inverse[i] = self.table[i].index(0)
        self._assoc_check()
        self.exponent_p = all(self.power(g, p) == 0 for g in range(m))
        if require_exponent_p and not self.exponent_p and m > 1:
            raise ExponentViolation(f"{self.name} has an element of order > {p}")
        self._quotients = {}

    # -- structure ---------------------------------------------------------

    def _assoc_check(self):
        """Light's associativity test over a generating set."""
        gens = self.generators()
        t = self.table
        m = self.order
        for g in gens:
            for a in range(m):
                row = t[a]
                ag = row[g]
                tg = t[g]
                for b_ in range(m):
                    if t[ag][b_] != row[tg[b_]]:
                        raise Inconsistent("multiplication table is not associative")

    def generators(self):
        gens = []
        span = {0}
        for g in range(self.order):
            if g not in span:
                gens.append(g)
                span = self._closure_set(span | {g})
                if len(span) == self.order:
                    break
        return gens

    def mul(self, a, b):
        return self.table[a][b]

    def inv(self, a):
        return self.inverse[a]

    def conj(self, g, a):
        """a^{-1} g a."""
        return self.table[self.table[self.inverse[a]][g]][a]

    def power(self, g, k):
        if k < 0:
            g, k = self.inverse[g], -k
        k %= self.order  # g^|G| = e
        r = 0
        for _ in range(k):
            r = self.table[r][g]
        return r

    def element_order(self, g):
        o, x = 1, g
        while x != 0:
            x = self.table[x][g]
            o += 1
        return o

    @property
    def is_abelian(self):
        t = self.table
        return all(t[i][j] == t[j][i] for i in range(self.order) for j in range(i))

    def conjugacy_classes(self):
        """List of sorted tuples; cached."""
        if not hasattr(self, "_classes"):
            seen = [False] * self.order
            classes = []
            for g in range(self.order):
                if not seen[g]:
                    cl = {self.conj(g, a) for a in range(self.order)}
                    for x in cl:
                        seen[x] = True
                    classes.append(tuple(sorted(cl)))
            classes.sort()
            self._classes = classes
            self._class_of = [0] * self.order
            for idx, cl in enumerate(classes):
                for x in cl:
                    self._class_of[x] = idx
        return self._classes

    def class_index(self, g):
        self.conjugacy_classes()
        return self._class_of[g]

    def centre(self):
        t = self.table
        return tuple(
            sorted(g for g in range(self.order) if all(t[g][a] == t[a][g] for a in range(self.order)))
        )

    def commutator_subgroup(self):
        if not hasattr(self, "_derived"):
            comms = {
                self.table[self.table[self.inverse[a]][self.inverse[b]]][self.table[a][b]]
                for a in range(self.order)
                for b in range(self.order)
            }
            self._derived = tuple(sorted(self._closure_set(comms | {0})))
        return self._derived

    def _closure_set(self, seed):
        span = set(seed) | {0}
        frontier = list(span)
        while frontier:
            nxt = []
            for a in frontier:
                for b in list(span):
                    for c in (self.table[a][b], self.table[b][a]):
                        if c not in span:
                            span.add(c)
                            nxt.append(c)
            frontier = nxt
        return span

    def subgroup_closure(self, gens):
        return tuple(sorted(self._closure_set(set(gens))))

    def is_subgroup(self, elems):
        s = set(elems)
        return 0 in s and all(self.table[a][b] in s for a in s for b in s)

    def is_normal(self, elems):
        s = set(elems)
        return all(self.conj(g, a) in s for g in s for a in range(self.order))

    def centralizer(self, elems):
        t = self.table
        return tuple(
            sorted(a for a in range(self.order) if all(t[a][g] == t[g][a] for g in elems))
        )

    def normalizer(self, elems):
        s = set(elems)
        return tuple(
            sorted(a for a in range(self.order) if all(self.conj(g, a) in s for g in s))
        )

    def all_subgroups(self):
        """Every subgroup, as sorted tuples.  BFS by single-generator extension."""
        if hasattr(self, "_subgroups"):
            return self._subgroups
        found = {(0,)}
        frontier = [(0,)]
        while frontier:
            nxt = []
            for h in frontier:
                hs = set(h)
                for g in range(1, self.order):
                    if g not in hs:
                        ext = tuple(sorted(self._closure_set(hs | {g})))
                        if ext not in found:
                            found.add(ext)
                            nxt.append(ext)
            frontier = nxt
        self._subgroups = sorted(found, key=lambda s: (len(s), s))
        return self._subgroups

    def left_transversal(self, elems):
        """Coset representatives a_j with G = union of U a_j (e first)."""
        covered = set()
        reps = []
        s = set(elems)
        for a in range(self.order):
            if a not in covered:
                reps.append(a)
                covered |= {self.table[u][a] for u in s}
        return reps

    def quotient(self, elems):
        """Quotient by a normal subgroup: (group, projection list, section list)."""
        key = tuple(sorted(elems))
        if key in self._quotients:
            return self._quotients[key]
        if not self.is_subgroup(key):
            raise NotASubgroup("quotient by a non-subgroup")
        if not self.is_normal(key):
            raise NotNormal("quotient by a non-normal subgroup")
        s = set(key)
        rep_of = {}
        reps = []
        for g in range(self.order):
            if g not in rep_of:
                coset = sorted(self.table[g][v] for v in s)
                r = coset[0]
                for x in coset:
                    rep_of[x] = r
                reps.append(r)
        reps.sort()
        # identity coset must come first
        assert reps[0] == 0
        index = {r: i for i, r in enumerate(reps)}
        proj = [index[rep_of[g]] for g in range(self.order)]
        table = [[proj[self.table[a][b]] for b in reps] for a in reps]
        q = FinitePGroup(
            self.p,
            table,
            labels=[self.labels[r] for r in reps],
            require_exponent_p=False,
            name=f"{self.name}/|{len(key)}|",
        )
        out = (q, proj, reps)
        self._quotients[key] = out
        return out

    def __repr__(self):
        return f"<FinitePGroup {self.name} order {self.order}>"


@dataclass(frozen=True)
class Subgroup:
    """A certified subgroup: closure is checked at construction."""

    group: FinitePGroup
    elements: tuple

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(sorted(self.elements)))
        if not self.group.is_subgroup(self.elements):
            raise NotASubgroup("element set is not multiplicatively closed")

    @property
    def order(self):
        return len(self.elements)

    def index(self):
        return self.group.order // self.order

    def contains(self, g):
        return g in set(self.elements)

    def __repr__(self):
        return f"<Subgroup {list(self.elements)} of {self.group.name}>"


@dataclass
class GroupMap:
    """A homomorphism between table groups, verified elementwise."""

    domain: FinitePGroup
    codomain: FinitePGroup
    images: tuple

    def __post_init__(self):
        self.images = tuple(self.images)
        if len(self.images) != self.domain.order:
            raise Inconsistent("image table has the wrong length")
        t, s = self.domain.table, self.codomain.table
        im = self.images
        for a in range(self.domain.order):
            for b in range(self.domain.order):
                if im[t[a][b]] != s[im[a]][im[b]]:
                    raise Inconsistent("not a homomorphism")

    def __call__(self, g):
        return self.images[g]


def build_unitriangular(N: int, p: int) -> FinitePGroup:
    """Upper unitriangular (N+1)x(N+1) matrices over F_p; needs p > N."""
    if p <= N:
        raise ExponentViolation(f"unitriangular group needs p > N, got p={p}, N={N}")
    size = N + 1
    positions = [(i, j) for i in range(size) for j in range(i + 1, size)]

    def mats():
        for vals in product(range(p), repeat=len(positions)):
            m = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
            for (i, j), v in zip(positions, vals):
                m[i][j] = v
            yield tuple(tuple(r) for r in m)

    elems = list(mats())
    # identity first (all positions zero) -- it already is, by construction.
    index = {m: i for i, m in enumerate(elems)}

    def matmul(a, b):
        return tuple(
            tuple(sum(a[i][k] * b[k][j] for k in range(size)) % p for j in range(size))
            for i in range(size)
        )

    table = [[index[matmul(a, b)] for b in elems] for a in elems]
    labels = ["[" + ";".join(str(m[i][j]) for (i, j) in positions) + "]" for m in elems]
    return FinitePGroup(p, table, labels=labels, name=f"B^{N}(F_{p})")


def build_cyclic(p: int, order: int, require_exponent_p=None) -> FinitePGroup:
    if require_exponent_p is None:
        require_exponent_p = order <= p
    table = [[(i + j) % order for j in range(order)] for i in range(order)]
    return FinitePGroup(
        p,
        table,
        labels=[f"c^{i}" for i in range(order)],
        require_exponent_p=require_exponent_p,
        name=f"C_{order}",
    )


def direct_product(g1: FinitePGroup, g2: FinitePGroup, require_exponent_p=None) -> FinitePGroup:
    if require_exponent_p is None:
        require_exponent_p = g1.exponent_p and g2.exponent_p
    n1, n2 = g1.order, g2.order

    def enc(a, b):
        return a * n2 + b

    table = [
        [
            enc(g1.table[a1][b1], g2.table[a2][b2])
            for b1 in range(n1)
            for b2 in range(n2)
        ]
        for a1 in range(n1)
        for a2 in range(n2)
    ]
    labels = [f"({g1.labels[a]},{g2.labels[b]})" for a in range(n1) for b in range(n2)]
    return FinitePGroup(
        g1.p,
        table,
        labels=labels,
        require_exponent_p=require_exponent_p,
        name=f"{g1.name}x{g2.name}",
    )


def abelianization(group: FinitePGroup):
    return group.quotient(group.commutator_subgroup())


def verlagerung(group: FinitePGroup, U: Subgroup, g: int):
    """Transfer G -> U^ab by the coset-product formula.

    Returns (quotient group U/[U,U], index of the transferred element).
    """
    elems = U.elements if isinstance(U, Subgroup) else tuple(sorted(U))
    sub_index = {e: i for i, e in enumerate(elems)}
    # group of U as its own table group, to form U^ab coherently
    u_table = [[sub_index[group.table[a][b]] for b in elems] for a in elems]
    ugrp = FinitePGroup(group.p, u_table, require_exponent_p=False, name="U")
    q, proj, _ = ugrp.quotient(ugrp.commutator_subgroup())
    reps = group.left_transversal(elems)
    rep_coset = {}
    uset = set(elems)
    for r in reps:
        for u in uset:
            rep_coset[group.table[u][r]] = r
    acc = 0
    for a in reps:
        ag = group.table[a][g]
        target = rep_coset[ag]
        u = group.table[ag][group.inverse[target]]
        acc = q.table[acc][proj[sub_index[u]]]
    return q, acc
