"""Group rings over the truncated coefficient ring, and the trace calculus.

A ``GroupRingElement`` is a finite-group-indexed vector of truncated series:
the Gamma-direction of G = G^f x Gamma lives inside the series coefficients
(gamma corresponds to 1 + T).  ``ConjVector`` is the conjugacy-class-indexed
analogue.  ``PairRing`` bundles a subquotient U/V together with the maps
needed to move elements around; ``SubmoduleDescriptor`` certifies membership
in a finitely generated Lambda(Gamma)-submodule by exact linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    BudgetMismatch,
    NotASubgroup,
    NotAUnit,
    OutOfDomain,
    PrecisionExhausted,
)
from .linalg import solve_mod_prime_power, vp
from .pgroup import FinitePGroup
from .precision_core import (
    PrecisionBudget,
    TruncatedSeries,
    _geom_inv_flat,
    _polymul,
)


def subgroup_ring_group(group: FinitePGroup, elems):
    """Table group of a subgroup plus the index map; cached on the parent."""
    key = tuple(sorted(elems))
    cache = getattr(group, "_subring_cache", None)
    if cache is None:
        cache = group._subring_cache = {}
    if key not in cache:
        if not group.is_subgroup(key):
            raise NotASubgroup("not a subgroup")
        idx = {e: i for i, e in enumerate(key)}
        table = [[idx[group.table[a][b]] for b in key] for a in key]
        sub = FinitePGroup(
            group.p,
            table,
            labels=[group.labels[e] for e in key],
            require_exponent_p=False,
            name=f"{group.name}|sub{len(key)}",
        )
        cache[key] = (sub, idx)
    return cache[key]


class PairRing:
    """The ring Lambda(U/V) for a subquotient pair of G^f, with its maps."""

    def __init__(self, parent: FinitePGroup, U, V):
        self.parent = parent
        self.U = tuple(sorted(U))
        self.V = tuple(sorted(V))
        sub, sub_idx = subgroup_ring_group(parent, self.U)
        local_V = tuple(sorted(sub_idx[v] for v in self.V))
        q, proj, reps = sub.quotient(local_V)
        self.group = q
        self._sub = sub
        self._sub_idx = sub_idx
        self._proj = proj  # sub-local -> quotient index
        self._reps = reps  # quotient index -> sub-local rep
        self.pair_id = (
            "U" + ".".join(map(str, self.U)) + "-V" + ".".join(map(str, self.V))
        )

    def project_global(self, g):
        """Quotient index of a global element of U."""
        return self._proj[self._sub_idx[g]]

    def lift_global(self, i):
        """A global representative in U of quotient index i."""
        local = self._reps[i]
        return self.U[local]

    def contains_global(self, g):
        return g in self._sub_idx

    def __repr__(self):
        return f"<PairRing {self.pair_id}>"


def pair_ring(parent: FinitePGroup, U, V=(0,)):
    key = (tuple(sorted(U)), tuple(sorted(V)))
    cache = getattr(parent, "_pair_cache", None)
    if cache is None:
        cache = parent._pair_cache = {}
    if key not in cache:
        cache[key] = PairRing(parent, key[0], key[1])
    return cache[key]


# ---------------------------------------------------------------------------
# group ring elements
# ---------------------------------------------------------------------------


class GroupRingElement:
    """Element of Lambda(Delta x Gamma): one truncated series per Delta element."""

    __slots__ = ("group", "budget", "coeffs")

    def __init__(self, group: FinitePGroup, budget: PrecisionBudget, coeffs):
        coeffs = tuple(coeffs)
        if len(coeffs) != group.order:
            raise OutOfDomain("coefficient vector length mismatch")
        for c in coeffs:
            if c.budget != budget:
                raise BudgetMismatch("coefficient budget mismatch")
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "budget", budget)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, *a):
        raise AttributeError("GroupRingElement is immutable")

    # constructors ----------------------------------------------------------

    @classmethod
    def zero(cls, group, budget, known_precision=None):
        z = TruncatedSeries.zero(budget, known_precision)
        return cls(group, budget, [z] * group.order)

    @classmethod
    def one(cls, group, budget, known_precision=None):
        return cls.from_element(group, budget, 0, known_precision=known_precision)

    @classmethod
    def from_element(cls, group, budget, g, series=None, known_precision=None):
        z = TruncatedSeries.zero(budget, known_precision)
        coeffs = [z] * group.order
        coeffs[g] = series if series is not None else TruncatedSeries.one(budget, known_precision)
        return cls(group, budget, coeffs)

    @classmethod
    def from_dict(cls, group, budget, d, known_precision=None):
        z = TruncatedSeries.zero(budget, known_precision)
        coeffs = [z] * group.order
        for g, s in d.items():
            coeffs[g] = s
        return cls(group, budget, coeffs)

    # inspection ------------------------------------------------------------

    @property
    def known_precision(self):
        return min(c.known_precision for c in self.coeffs)

    @property
    def is_zero(self):
        return all(c.is_zero for c in self.coeffs)

    @property
    def is_integral(self):
        return all(c.is_integral for c in self.coeffs)

    def aug(self) -> TruncatedSeries:
        """Augmentation Lambda(Delta x Gamma) -> Lambda(Gamma)."""
        acc = self.coeffs[0]
        for c in self.coeffs[1:]:
            acc = acc + c
        return acc

    def is_unit(self) -> bool:
        """Unit of the (p, T, aug)-local ring: residue in F_p^x."""
        return self.is_integral and self.aug().nums[0] % (
            self.budget.p ** (self.budget.B + 1)
        ) != 0

    # arithmetic ------------------------------------------------------------

    def _check(self, other):
        if self.group is not other.group:
            raise OutOfDomain("elements of different group rings")
        if self.budget != other.budget:
            raise BudgetMismatch("budget mismatch")

    def __add__(self, other):
        self._check(other)
        return GroupRingElement(
            self.group, self.budget, [a + b for a, b in zip(self.coeffs, other.coeffs)]
        )

    def __sub__(self, other):
        self._check(other)
        return GroupRingElement(
            self.group, self.budget, [a - b for a, b in zip(self.coeffs, other.coeffs)]
        )

    def __neg__(self):
        return GroupRingElement(self.group, self.budget, [-a for a in self.coeffs])

    def scalar_mul(self, c: int):
        return GroupRingElement(self.group, self.budget, [a.scalar_mul(c) for a in self.coeffs])

    def series_mul(self, s: TruncatedSeries):
        return GroupRingElement(self.group, self.budget, [a * s for a in self.coeffs])

    def mul_p_power(self, k: int):
        return GroupRingElement(self.group, self.budget, [a.mul_p_power(k) for a in self.coeffs])

    def divide_exact(self, m: int):
        return GroupRingElement(self.group, self.budget, [a.divide_exact(m) for a in self.coeffs])

    def __mul__(self, other):
        self._check(other)
        b = self.budget
        n, order = b.n, self.group.order
        da = max(c.denominator_exponent() for c in self.coeffs)
        db = max(c.denominator_exponent() for c in other.coeffs)
        kp = min(self.known_precision - db, other.known_precision - da)
        if kp < 1:
            raise PrecisionExhausted("product has no reliable digits")
        table = self.group.table
        raw = [[0] * n for _ in range(order)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero:
                continue
            an = a.nums
            for j, c in enumerate(other.coeffs):
                if c.is_zero:
                    continue
                tgt = raw[table[i][j]]
                cn = c.nums
                for u, au in enumerate(an):
                    if au:
                        for v in range(n - u):
                            if cn[v]:
                                tgt[u + v] += au * cn[v]
        s = b.scale()
        out = []
        for row in raw:
            nums = []
            for c in row:
                if c % s:
                    raise PrecisionExhausted("denominator budget exceeded in product")
                nums.append(c // s)
            out.append(TruncatedSeries(b, nums, kp))
        return GroupRingElement(self.group, b, out)

    def power(self, k: int):
        result = GroupRingElement.one(self.group, self.budget, self.known_precision)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def invert(self):
        """Inverse of a unit: aug-scalar factor plus a terminating geometric tail."""
        if not self.is_unit():
            raise NotAUnit("group-ring element is not a unit")
        b = self.budget
        alpha = self.aug()
        alpha_inv = alpha.invert()
        scaled = self.series_mul(alpha_inv)  # = 1 + w with aug(w) = 0
        one = GroupRingElement.one(self.group, b, self.known_precision)
        w = scaled - one
        kp = w.known_precision
        flat = _flat_values(w)
        inv_flat = _geom_inv_flat(
            flat,
            lambda x, y, mod: _ring_mul_flat(x, y, self.group.table, b.n, mod),
            b.p,
            kp,
            self.group.order * b.n,
            cap_hint=self.group.order,
        )
        tail = _from_flat_values(self.group, b, inv_flat, kp)
        return tail.series_mul(alpha_inv)

    # structure maps --------------------------------------------------------

    def conj_by(self, a):
        """Permutation x -> a^-1 x a on the index group."""
        g = self.group
        coeffs = [None] * g.order
        for i, c in enumerate(self.coeffs):
            coeffs[g.conj(i, a)] = c
        return GroupRingElement(g, self.budget, coeffs)

    def push(self, mapping, target_group):
        """Additive pushforward along an index map (e.g. quotient projection)."""
        z = TruncatedSeries.zero(self.budget, self.known_precision)
        out = [z] * target_group.order
        for i, c in enumerate(self.coeffs):
            if not c.is_zero:
                out[mapping[i]] = out[mapping[i]] + c
        return GroupRingElement(target_group, self.budget, out)

    def equal_at_precision(self, other) -> bool:
        self._check(other)
        return all(a.equal_at_precision(b) for a, b in zip(self.coeffs, other.coeffs))

    def congruent_mod_p_power(self, other, k) -> bool:
        self._check(other)
        return all(a.congruent_mod_p_power(b, k) for a, b in zip(self.coeffs, other.coeffs))

    def frobenius_coeffwise(self):
        """Apply the series map T -> (1+T)^p - 1 to every coefficient."""
        return GroupRingElement(self.group, self.budget, [c.frobenius() for c in self.coeffs])

    def __repr__(self):
        parts = [
            f"{self.group.labels[i]}*{c!r}" for i, c in enumerate(self.coeffs) if not c.is_zero
        ]
        return "<gr " + (" + ".join(parts) if parts else "0") + ">"


def _flat_values(x: GroupRingElement):
    """Value-level integer vector (requires integral coefficients)."""
    b = x.budget
    s = b.scale()
    out = []
    for c in x.coeffs:
        for v in c.nums:
            if v % s:
                raise OutOfDomain("flat conversion requires integral coefficients")
            out.append(v // s)
    return out

def _flat_scaled(x: GroupRingElement):
    out = []
    for c in x.coeffs:
        out.extend(c.nums)
    return out


def _from_flat_values(group, budget, flat, kp):
    n = budget.n
    s = budget.scale()
    coeffs = [
        TruncatedSeries(budget, [v * s for v in flat[i * n : (i + 1) * n]], kp)
        for i in range(group.order)
    ]
    return GroupRingElement(group, budget, coeffs)


def _from_flat_scaled(group, budget, flat, kp):
    n = budget.n
    coeffs = [
        TruncatedSeries(budget, flat[i * n : (i + 1) * n], kp) for i in range(group.order)
    ]
    return GroupRingElement(group, budget, coeffs)


def _ring_mul_flat(a, b, table, n, mod):
    order = len(table)
    out = [0] * (order * n)
    for i in range(order):
        base_a = i * n
        if not any(a[base_a : base_a + n]):
            continue
        row = table[i]
        for j in range(order):
            base_b = j * n
            tgt = row[j] * n
            for u in range(n):
                au = a[base_a + u]
                if au:
                    for v in range(n - u):
                        bv = b[base_b + v]
                        if bv:
                            out[tgt + u + v] += au * bv
    return [c % mod for c in out]


# ---------------------------------------------------------------------------
# conjugacy-class vectors
# ---------------------------------------------------------------------------


class ConjVector:
    """Element of Z_p[[Conj(G^f x Gamma)]]: one series per class of G^f."""

    __slots__ = ("group", "budget", "coeffs")

    def __init__(self, group, budget, coeffs):
        classes = group.conjugacy_classes()
        coeffs = tuple(coeffs)
        if len(coeffs) != len(classes):
            raise OutOfDomain("class vector length mismatch")
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "budget", budget)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, *a):
        raise AttributeError("ConjVector is immutable")

    @classmethod
    def zero(cls, group, budget, known_precision=None):
        z = TruncatedSeries.zero(budget, known_precision)
        return cls(group, budget, [z] * len(group.conjugacy_classes()))

    @classmethod
    def from_class(cls, group, budget, g, series=None, known_precision=None):
        z = TruncatedSeries.zero(budget, known_precision)
        coeffs = [z] * len(group.conjugacy_classes())
        coeffs[group.class_index(g)] = (
            series if series is not None else TruncatedSeries.one(budget, known_precision)
        )
        return cls(group, budget, coeffs)

    @classmethod
    def from_group_ring(cls, x: GroupRingElement):
        group = x.group
        classes = group.conjugacy_classes()
        out = []
        for cl in classes:
            acc = x.coeffs[cl[0]]
            for g in cl[1:]:
                acc = acc + x.coeffs[g]
            out.append(acc)
        return cls(group, x.budget, out)

    @property
    def known_precision(self):
        return min(c.known_precision for c in self.coeffs)

    @property
    def is_zero(self):
        return all(c.is_zero for c in self.coeffs)

    def __add__(self, other):
        return ConjVector(self.group, self.budget, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        return ConjVector(self.group, self.budget, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return ConjVector(self.group, self.budget, [-a for a in self.coeffs])

    def scalar_mul(self, c: int):
        return ConjVector(self.group, self.budget, [a.scalar_mul(c) for a in self.coeffs])

    def mul_p_power(self, k: int):
        return ConjVector(self.group, self.budget, [a.mul_p_power(k) for a in self.coeffs])

    def coeff_for(self, g):
        return self.coeffs[self.group.class_index(g)]

    def equal_at_precision(self, other) -> bool:
        return all(a.equal_at_precision(b) for a, b in zip(self.coeffs, other.coeffs))

    def frobenius_classes(self):
        """The class map [d] -> [d^p]; under exponent p everything lands on [e],
        with gamma -> gamma^p acting as T -> (1+T)^p - 1 on coefficients."""
        group = self.group
        classes = group.conjugacy_classes()
        z = TruncatedSeries.zero(self.budget, self.known_precision)
        out = [z] * len(classes)
        for idx, cl in enumerate(classes):
            c = self.coeffs[idx]
            if c.is_zero:
                continue
            tgt = group.class_index(group.power(cl[0], group.p))
            out[tgt] = out[tgt] + c.frobenius()
        return ConjVector(group, self.budget, out)

    def __repr__(self):
        classes = self.group.conjugacy_classes()
        parts = [
            f"[{self.group.labels[classes[i][0]]}]*{c!r}"
            for i, c in enumerate(self.coeffs)
            if not c.is_zero
        ]
        return "<cv " + (" + ".join(parts) if parts else "0") + ">"


def trace_to_pair(y: ConjVector, ring: PairRing) -> GroupRingElement:
    """Trace Z_p[[Conj G]] -> Z_p[[U/V]]: sum of transversal conjugates in U."""
    group = y.group
    if ring.parent is not group:
        raise OutOfDomain("target pair does not live over the vector's group")
    classes = group.conjugacy_classes()
    reps = group.left_transversal(ring.U)
    z = TruncatedSeries.zero(y.budget, y.known_precision)
    out = [z] * ring.group.order
    for idx, cl in enumerate(classes):
        c = y.coeffs[idx]
        if c.is_zero:
            continue
        g = cl[0]
        for a in reps:
            x = group.conj(g, a)
            if ring.contains_global(x):
                t = ring.project_global(x)
                out[t] = out[t] + c
    return GroupRingElement(ring.group, y.budget, out)


def abelian_trace(x: GroupRingElement, ring_sub: PairRing, ring_sup: PairRing) -> GroupRingElement:
    """Trace Z_p[[U/V]] -> Z_p[[U'/V]] for abelian U/V and U'/V of index p.

    For abelian quotients conjugation is trivial: Tr([w]) = (U:U') [w] when
    w lies in U'/V and 0 otherwise.
    """
    index = len(ring_sup.group.conjugacy_classes()) and (
        ring_sup.group.order // ring_sub.group.order
    )
    z = TruncatedSeries.zero(x.budget, x.known_precision)
    out = [z] * ring_sub.group.order
    for i, c in enumerate(x.coeffs):
        if c.is_zero:
            continue
        g = ring_sup.lift_global(i)
        if ring_sub.contains_global(g):
            t = ring_sub.project_global(g)
            out[t] = out[t] + c.scalar_mul(index)
    return GroupRingElement(ring_sub.group, x.budget, out)


def canonical_map(x: GroupRingElement, src: PairRing, dst: PairRing) -> GroupRingElement:
    """Canonical projection/inclusion Z_p[[U'/V']] -> Z_p[[U/V]] (U' <= U, V' <= V)."""
    z = TruncatedSeries.zero(x.budget, x.known_precision)
    out = [z] * dst.group.order
    for i, c in enumerate(x.coeffs):
        if not c.is_zero:
            g = src.lift_global(i)
            t = dst.project_global(g)
            out[t] = out[t] + c
    return GroupRingElement(dst.group, x.budget, out)


def conjugation_iso(x: GroupRingElement, src: PairRing, dst: PairRing, a) -> GroupRingElement:
    """psi_a: Z_p[[U/V]] -> Z_p[[a^-1 U a / a^-1 V a]], u -> a^-1 u a."""
    g = src.parent
    z = TruncatedSeries.zero(x.budget, x.known_precision)
    out = [z] * dst.group.order
    for i, c in enumerate(x.coeffs):
        if not c.is_zero:
            glob = src.lift_global(i)
            t = dst.project_global(g.conj(glob, a))
            out[t] = out[t] + c
    return GroupRingElement(dst.group, x.budget, out)


# ---------------------------------------------------------------------------
# submodule descriptors and membership certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MembershipCertificate:
    member: bool
    coords: tuple = ()
    reason: str = ""


@dataclass(frozen=True)
class SubmoduleDescriptor:
    """Lambda(Gamma)-submodule of Lambda(U/V) given by integer generator vectors.

    Each generator is a vector over the finite quotient basis; membership of x
    means x = sum_g lambda_g * gen_g with lambda_g in Lambda(Gamma), decided
    exactly per T-coefficient modulo p^known_precision.
    """

    ring: PairRing
    name: str
    gens: tuple  # tuple of integer tuples, length = ring.group.order

    def max_p_scale(self, p):
        cap = 64
        return max(
            (min(vp(e, p, cap) for e in g if e) for g in self.gens if any(g)),
            default=0,
        )

    def contains(self, x: GroupRingElement) -> MembershipCertificate:
        b = x.budget
        if x.group is not self.ring.group:
            raise OutOfDomain("element does not live in the descriptor's ring")
        if not x.is_integral:
            return MembershipCertificate(False, reason="element is not integral")
        kp = x.known_precision
        if kp <= self.max_p_scale(b.p):
            raise PrecisionExhausted(
                f"membership in {self.name} needs more than {kp} digits"
            )
        order = self.ring.group.order
        s = b.scale()
        A = [[g[i] for g in self.gens] for i in range(order)]
        coords = [[] for _ in self.gens]
        for t in range(b.n):
            bvec = [(x.coeffs[i].nums[t] // s) for i in range(order)]
            sol = solve_mod_prime_power(A, bvec, b.p, kp)
            if sol is None:
                return MembershipCertificate(
                    False, reason=f"no solution at T-degree {t}"
                )
            for gidx in range(len(self.gens)):
                coords[gidx].append(sol[gidx])
        # coordinates are determined only modulo p^(kp - scale of the pivots)
        kp_coord = kp - self.max_p_scale(b.p)
        series = tuple(
            TruncatedSeries.from_coeffs(b, cs, kp_coord) for cs in coords
        )
        return MembershipCertificate(True, coords=series)

    def element_from_coords(self, budget, coords):
        """Rebuild sum_g coords_g * gen_g (for round-trip verification)."""
        z = TruncatedSeries.zero(budget)
        out = [z] * self.ring.group.order
        for g, lam in zip(self.gens, coords):
            for i, e in enumerate(g):
                if e:
                    out[i] = out[i] + lam.scalar_mul(e)
        return GroupRingElement(self.ring.group, budget, out)

    def lattice_span_contains(self, others) -> bool:
        """Whether every generator of ``others`` lies in this descriptor's span
        over Z_p (constant coefficients suffice for integer generators)."""
        p = self.ring.parent.p
        K = 40
        order = self.ring.group.order
        A = [[g[i] for g in self.gens] for i in range(order)]
        for g in others:
            if solve_mod_prime_power(A, list(g), p, K) is None:
                return False
        return True


def in_j_ideal(x: GroupRingElement) -> bool:
    """Membership in J_{U,V}: augmentation lands in p * Lambda(Gamma)."""
    b = x.budget
    a = x.aug()
    mod = b.p ** (b.B + 1)
    return all(c % mod == 0 for c in a.nums)


def char_p_power_identity(x: GroupRingElement) -> bool:
    """In characteristic p: x^(#Delta) = aug(x)^(#Delta) mod (p, T^n)."""
    b = x.budget
    group = x.group
    p, n = b.p, b.n
    s = b.scale()
    vals = [[(c.nums[t] // s) % p for t in range(n)] for c in x.coeffs]

    def mul(a, c):
        out = [[0] * n for _ in range(group.order)]
        for i in range(group.order):
            if any(a[i]):
                for j in range(group.order):
                    if any(c[j]):
                        tgt = out[group.table[i][j]]
                        for u in range(n):
                            if a[i][u]:
                                for v in range(n - u):
                                    tgt[u + v] = (tgt[u + v] + a[i][u] * c[j][v]) % p
        return out

    acc = vals
    k = group.order
    # repeated p-th powers: #Delta = p^log_order
    for _ in range(group.log_order):
        base = acc
        for _ in range(p - 1):
            acc = mul(acc, base)
    aug = [sum(vals[i][t] for i in range(group.order)) % p for t in range(n)]
    # aug(x)^(#Delta) as a scalar series mod (p, T^n)
    aug_pow = [1] + [0] * (n - 1)
    e = group.order
    base_s = aug
    while e:
        if e & 1:
            nxt = [0] * n
            for u in range(n):
                if aug_pow[u]:
                    for v in range(n - u):
                        nxt[u + v] = (nxt[u + v] + aug_pow[u] * base_s[v]) % p
            aug_pow = nxt
        e >>= 1
        if e:
            nxt = [0] * n
            for u in range(n):
                if base_s[u]:
                    for v in range(n - u):
                        nxt[u + v] = (nxt[u + v] + base_s[u] * base_s[v]) % p
            base_s = nxt
    expected = [[0] * n for _ in range(group.order)]
    expected[0] = aug_pow
    return all(
        acc[i][t] == expected[i][t] for i in range(group.order) for t in range(n)
    )
