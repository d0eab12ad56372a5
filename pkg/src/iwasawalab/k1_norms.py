"""Units of truncated group rings, norm/theta maps, and congruence verifiers.

Theta maps are determinants of the multiplication matrix of a unit with
respect to a fixed left transversal; the compatible-family conditions (norm
compatibility, conjugacy compatibility, J- and I-congruences against the
Frobenius of the abelianized component) cut out the lattice of theta tuples.
All comparisons between tuple components allow a group-element slack, since
tuples are only well defined modulo p-power-torsion units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .class_algebra import (
    ConjVector,
    GroupRingElement,
    PairRing,
    SubmoduleDescriptor,
    conjugation_iso,
    in_j_ideal,
    pair_ring,
    trace_to_pair,
)
from .errors import (
    BadCharacter,
    ExcludedTotalGroup,
    NotAUnit,
    NotSInvertible,
    OutOfDomain,
    PrecisionExhausted,
    SingularMatrix,
)
from .families import ArtinFamilyC, BrauerFamily, artin_family_c
from .logarithm_lab import integral_log, ring_log
from .precision_core import (
    INFINITY,
    CyclotomicValue,
    TruncatedSeries,
    evaluate_series_cyclotomic,
    vp,
)
from .theta_additive import artin_I_descriptor


def series_power(s: TruncatedSeries, k: int) -> TruncatedSeries:
    if k < 0:
        return series_power(s.invert(), -k)
    out = TruncatedSeries.one(s.budget, s.known_precision)
    base = s
    while k:
        if k & 1:
            out = out * base
        k >>= 1
        if k:
            base = base * base
    return out


def scalar_embed(ring: PairRing, s: TruncatedSeries) -> GroupRingElement:
    return GroupRingElement.from_dict(ring.group, s.budget, {0: s})


@dataclass(frozen=True)
class UnitElement:
    """A unit together with its inverse witness."""

    x: GroupRingElement
    inv: GroupRingElement

    @classmethod
    def make(cls, x: GroupRingElement):
        inv = x.invert()
        one = GroupRingElement.one(x.group, x.budget, min(x.known_precision, inv.known_precision))
        if not (x * inv).equal_at_precision(one):
            raise NotAUnit("inverse witness fails to multiply to 1")
        return cls(x, inv)


# ---------------------------------------------------------------------------
# localized elements: numerator / central scalar denominator
# ---------------------------------------------------------------------------


def scalar_content(s: TruncatedSeries) -> int:
    """Largest a (at available precision) with s in p^a * Lambda."""
    return max(s.min_valuation(), 0)


def _num_content(x: GroupRingElement) -> int:
    vals = [scalar_content(c) for c in x.coeffs if not c.is_zero]
    return min(vals) if vals else 0


@dataclass(frozen=True)
class LocalizedUnit:
    """num / (p^pshift * den) with den a central scalar outside pLambda.

    Covers Lambda(U/V)_S since the canonical Ore set is generated by such
    scalars up to units.  The p-shift is a representation artifact: products
    of genuine S-denominators can lose their low-degree unit coefficient to
    the T-truncation, leaving a scalar divisible by p; the factory `_loc`
    moves that p-content into `pshift` so the denominator proper stays
    S-invertible.  The shift may be negative (a p-power in the numerator
    kept symbolic): realizing a large p-power on a numerator stored modulo
    p^(kp+B) would destroy it, so powers are only realized when they cancel.
    User-facing constructions keep pshift = 0.
    """

    num: GroupRingElement
    den: TruncatedSeries
    pshift: int = 0
    # When den arose as the content-stripped e-th power of a scalar, remember
    # (base, e): further norms re-power from the base in ONE exact step.
    # Powering an already-stripped residue instead would strip p-content from
    # digits the storage modulus no longer determines, so two routes to the
    # same denominator would disagree in garbage digits and exact equality
    # checks would wrongly fail.
    den_base: TruncatedSeries = None
    den_exp: int = 0

    def __post_init__(self):
        if not self.den.is_s_invertible():
            raise NotSInvertible("denominator lies in p*Lambda")
        if not self.num.is_integral or not self.den.is_integral:
            raise OutOfDomain("localized elements store integral num/den")

    @property
    def budget(self):
        return self.num.budget

    def __mul__(self, other):
        return _loc(self.num * other.num, self.den * other.den,
                    self.pshift + other.pshift)

    def __sub__(self, other):
        off = min(self.pshift, other.pshift)
        n = (self.num.series_mul(other.den).mul_p_power(other.pshift - off)
             - other.num.series_mul(self.den).mul_p_power(self.pshift - off))
        return _loc(n, self.den * other.den, self.pshift + other.pshift - off)

    def __neg__(self):
        return LocalizedUnit(-self.num, self.den, self.pshift)

    def mul_scalar(self, s: TruncatedSeries):
        return _loc(self.num.series_mul(s), self.den, self.pshift)

    def is_s_unit(self) -> bool:
        """Invertible after localization: the content-reduced numerator has
        augmentation outside pLambda."""
        c = _num_content(self.num)
        return self.num.mul_p_power(-c).aug().is_s_invertible()

    def invert(self):
        c = _num_content(self.num)
        reduced = self.num.mul_p_power(-c)
        num_inv, extra_den = _s_invert(reduced)
        # (p^c reduced / (p^a den))^-1 = den * reduced^-1 / p^(c - a)
        return _loc(num_inv.series_mul(self.den), extra_den, c - self.pshift)

    def equal_at_precision(self, other) -> bool:
        off = min(self.pshift, other.pshift)
        a = self.num.series_mul(other.den).mul_p_power(other.pshift - off)
        c = other.num.series_mul(self.den).mul_p_power(self.pshift - off)
        return a.equal_at_precision(c)

    def as_integral(self):
        """An integral representative, or None when the denominator does not
        divide the numerator."""
        from .precision_core import series_divide_exact

        out = []
        for c in self.num.coeffs:
            q = series_divide_exact(c, self.den)
            if q is None:
                return None
            out.append(q)
        x = GroupRingElement(self.num.group, self.budget, out)
        if self.pshift > 0:
            if _num_content(x) < self.pshift:
                return None
            x = x.mul_p_power(-self.pshift)
        elif self.pshift < 0:
            x = x.mul_p_power(-self.pshift)
        return x

    @classmethod
    def from_integral(cls, x: GroupRingElement):
        return cls(x, TruncatedSeries.one(x.budget, x.known_precision))


def _loc(num: GroupRingElement, den: TruncatedSeries, pshift: int,
         den_base: TruncatedSeries = None, den_exp: int = 0) -> LocalizedUnit:
    """Normalizing factory: move p-content of the denominator into the shift
    and cancel a positive shift against p-content of the numerator.  A
    remaining negative shift stays symbolic."""
    a = scalar_content(den)
    if a:
        den = den.mul_p_power(-a)
        pshift += a
    if pshift > 0:
        c = min(_num_content(num), pshift)
        if c:
            num = num.mul_p_power(-c)
            pshift -= c
    return LocalizedUnit(num, den, pshift, den_base, den_exp)


def _series_is_one(s: TruncatedSeries) -> bool:
    return (s - TruncatedSeries.one(s.budget, s.known_precision)).is_zero


def _den_power_reduced(x: LocalizedUnit, r: int):
    """(base, exponent, stripped power, shift) for den(x)^r, powered from
    the remembered base when there is one."""
    if x.den_exp:
        base, e = x.den_base, r * x.den_exp
        _, old = scalar_power_reduced(base, x.den_exp)
        dpow, dnew = scalar_power_reduced(base, e)
        return base, e, dpow, dnew - r * old
    dpow, dshift = scalar_power_reduced(x.den, r)
    return x.den, r, dpow, dshift


def scalar_power_reduced(s: TruncatedSeries, k: int):
    """s^k as (p-content-free series, extracted p-content exponent).

    High powers of an S-invertible scalar can lose their low-degree unit
    coefficient to the T-truncation, leaving every surviving coefficient
    divisible by p.  The power is taken with exact integer coefficients
    (reduced modulo T^n only), the p-content is stripped exactly, and only
    then is the result reduced modulo the p-power budget, so no precision is
    lost to the stripping.
    """
    if k < 0:
        raise OutOfDomain("negative scalar powers are not tracked here")
    b = s.budget
    if not s.is_integral:
        raise OutOfDomain("only integral scalars are powered here")
    scale = b.scale()
    vals = [c // scale for c in s.nums]
    acc = [1] + [0] * (b.n - 1)
    for _ in range(k):
        out = [0] * b.n
        for i, a in enumerate(acc):
            if a:
                for j in range(b.n - i):
                    out[i + j] += a * vals[j]
        acc = out
    if all(c == 0 for c in acc):
        raise PrecisionExhausted("scalar power vanished at this truncation")
    shift = min(vp(c, b.p, b.M + b.B + 64) for c in acc if c)
    mod = b.p ** (s.known_precision + b.B)
    nums = [(c // b.p ** shift) * scale % mod for c in acc]
    return TruncatedSeries(b, nums, s.known_precision), shift


def _s_invert(u: GroupRingElement):
    """Inverse of an S-invertible u as (numerator, scalar denominator).

    u = alpha - w with alpha = aug(u) central and aug(w) = 0, so
    u^{-1} = sum_k w^k / alpha^{k+1}; the series terminates because w is
    nilpotent modulo p.  Returns (n, d) with u * n = d * 1.
    """
    alpha = u.aug()
    if not alpha.is_s_invertible():
        raise NotSInvertible("augmentation lies in p*Lambda")
    b = u.budget
    kp = u.known_precision
    one = GroupRingElement.one(u.group, b, kp)
    w = scalar_embed_like(u, alpha) - u
    # accumulate  sum w^k alpha^(K-k)  for k = 0..K with w^(K+1) = 0 at precision
    terms = [one]
    power = one
    cap = b.p * (kp + b.B + 4) + 4 * u.group.order * b.n + 16
    while True:
        power = power * w
        if power.is_zero:
            break
        terms.append(power)
        if len(terms) > cap:
            raise PrecisionExhausted("localized inversion did not terminate")
    K = len(terms) - 1
    acc = None
    for k, t in enumerate(terms):
        part = t.series_mul(series_power(alpha, K - k))
        acc = part if acc is None else acc + part
    return acc, series_power(alpha, K + 1)


def scalar_embed_like(x: GroupRingElement, s: TruncatedSeries) -> GroupRingElement:
    return GroupRingElement.from_dict(x.group, x.budget, {0: s})


# ---------------------------------------------------------------------------
# norm matrices and determinants
# ---------------------------------------------------------------------------


def norm_matrix(x: GroupRingElement, ring: PairRing):
    """Multiplication matrix of x on Lambda(G) as a free Lambda(U/V)-module.

    With G = union of U a_j over the fixed transversal, row i holds the
    decomposition of a_i x, so A_{xy} = A_x A_y.  Entry (i,j) collects
    x_g [a_i g a_j^{-1}] over the g with a_i g a_j^{-1} in U.
    """
    g = ring.parent
    reps = g.left_transversal(ring.U)
    r = len(reps)
    b = x.budget
    z = TruncatedSeries.zero(b, x.known_precision)
    rows = [[[z] * ring.group.order for _ in range(r)] for _ in range(r)]
    inv_reps = [g.inv(a) for a in reps]
    coset_of = {}
    for j, a in enumerate(reps):
        for u in ring.U:
            coset_of[g.mul(u, a)] = j
    for h in range(g.order):
        c = x.coeffs[h]
        if c.is_zero:
            continue
        for i, a in enumerate(reps):
            t = g.mul(a, h)
            j = coset_of[t]
            u = g.mul(t, inv_reps[j])
            q = ring.project_global(u)
            cell = rows[i][j]
            cell[q] = cell[q] + c
    return [
        [GroupRingElement(ring.group, b, rows[i][j]) for j in range(r)]
        for i in range(r)
    ]


def determinant(M):
    """Determinant over the commutative local ring Lambda(U/V) by unit-pivot
    elimination; raises SINGULAR_MATRIX when no unit pivot exists (non-unit
    input or exhausted precision)."""
    r = len(M)
    M = [row[:] for row in M]
    det = None
    sign = 1
    for col in range(r):
        pivot_row = None
        for i in range(col, r):
            if M[i][col].is_unit():
                pivot_row = i
                break
        if pivot_row is None:
            raise SingularMatrix(f"no unit pivot in column {col}")
        if pivot_row != col:
            M[col], M[pivot_row] = M[pivot_row], M[col]
            sign = -sign
        piv = M[col][col]
        det = piv if det is None else det * piv
        piv_inv = piv.invert()
        for i in range(col + 1, r):
            f = M[i][col] * piv_inv
            if f.is_zero:
                continue
            for j in range(col + 1, r):
                M[i][j] = M[i][j] - f * M[col][j]
    if sign < 0:
        det = -det
    return det


def determinant_localized(M):
    """Determinant of a matrix of integral entries that is invertible only
    after localization: pivots need S-invertible augmentation.  Returns a
    LocalizedUnit of the pair ring."""
    r = len(M)
    work = [[LocalizedUnit.from_integral(e) for e in row] for row in M]
    det = None
    sign = 1
    for col in range(r):
        pivot_row = None
        for i in range(col, r):
            if work[i][col].is_s_unit():
                pivot_row = i
                break
        if pivot_row is None:
            raise SingularMatrix(f"no S-invertible pivot in column {col}")
        if pivot_row != col:
            work[col], work[pivot_row] = work[pivot_row], work[col]
            sign = -sign
        piv = work[col][col]
        det = piv if det is None else det * piv
        piv_inv = piv.invert()
        for i in range(col + 1, r):
            f = work[i][col] * piv_inv
            if f.num.is_zero:
                continue
            for j in range(col + 1, r):
                work[i][j] = work[i][j] - f * work[col][j]
    if sign < 0:
        det = -det
    return det


def theta_norm(x: GroupRingElement, ring: PairRing) -> GroupRingElement:
    """theta_{U,V}(x): determinant of the norm matrix in Lambda(U/V)."""
    return determinant(norm_matrix(x, ring))


def theta_norm_localized(x: LocalizedUnit, ring: PairRing) -> LocalizedUnit:
    A = norm_matrix(x.num, ring)
    r = len(A)
    try:
        d = LocalizedUnit.from_integral(determinant(A))
    except SingularMatrix:
        d = determinant_localized(A)
    base, e, dpow, dshift = _den_power_reduced(x, r)
    track = _series_is_one(d.den)
    return _loc(d.num, d.den * dpow, d.pshift + dshift + r * x.pshift,
                den_base=base if track else None,
                den_exp=e if track else 0)


def norm_to_subpair(xi: GroupRingElement, src: PairRing, dst: PairRing) -> GroupRingElement:
    """Norm Lambda(U/V) -> Lambda(U'/V) for U' <= U (same V)."""
    a_grp = src.group
    sub = sorted(q for q in range(a_grp.order) if dst.contains_global(src.lift_global(q)))
    if a_grp.order % len(sub):
        raise OutOfDomain("norm target is not a subquotient")
    subset = set(sub)
    reps = [0]
    seen = {a_grp.mul(u, 0) for u in sub}
    for t in range(a_grp.order):
        if t not in seen:
            reps.append(t)
            seen.update(a_grp.mul(u, t) for u in sub)
    b = xi.budget
    z = TruncatedSeries.zero(b, xi.known_precision)
    r = len(reps)
    inv_reps = [a_grp.inv(a) for a in reps]
    coset_of = {}
    for j, a in enumerate(reps):
        for u in sub:
            coset_of[a_grp.mul(u, a)] = j
    rows = [[[z] * dst.group.order for _ in range(r)] for _ in range(r)]
    for h in range(a_grp.order):
        c = xi.coeffs[h]
        if c.is_zero:
            continue
        for i, a in enumerate(reps):
            t = a_grp.mul(a, h)
            j = coset_of[t]
            u = a_grp.mul(t, inv_reps[j])
            q = dst.project_global(src.lift_global(u))
            cell = rows[i][j]
            cell[q] = cell[q] + c
    M = [[GroupRingElement(dst.group, b, rows[i][j]) for j in range(r)] for i in range(r)]
    return determinant(M)


def norm_to_subpair_localized(xi: LocalizedUnit, src: PairRing, dst: PairRing) -> LocalizedUnit:
    a_grp = src.group
    sub = [q for q in range(a_grp.order) if dst.contains_global(src.lift_global(q))]
    r = a_grp.order // len(sub)
    num = norm_to_subpair_det_localized(xi.num, src, dst)
    base, e, dpow, dshift = _den_power_reduced(xi, r)
    track = _series_is_one(num.den)
    return _loc(num.num, num.den * dpow, num.pshift + dshift + r * xi.pshift,
                den_base=base if track else None,
                den_exp=e if track else 0)


def norm_to_subpair_det_localized(xi: GroupRingElement, src: PairRing, dst: PairRing) -> LocalizedUnit:
    a_grp = src.group
    sub = sorted(q for q in range(a_grp.order) if dst.contains_global(src.lift_global(q)))
    subset = set(sub)
    reps = [0]
    seen = {a_grp.mul(u, 0) for u in sub}
    for t in range(a_grp.order):
        if t not in seen:
            reps.append(t)
            seen.update(a_grp.mul(u, t) for u in sub)
    b = xi.budget
    z = TruncatedSeries.zero(b, xi.known_precision)
    r = len(reps)
    inv_reps = [a_grp.inv(a) for a in reps]
    coset_of = {}
    for j, a in enumerate(reps):
        for u in sub:
            coset_of[a_grp.mul(u, a)] = j
    rows = [[[z] * dst.group.order for _ in range(r)] for _ in range(r)]
    for h in range(a_grp.order):
        c = xi.coeffs[h]
        if c.is_zero:
            continue
        for i, a in enumerate(reps):
            t = a_grp.mul(a, h)
            j = coset_of[t]
            u = a_grp.mul(t, inv_reps[j])
            q = dst.project_global(src.lift_global(u))
            cell = rows[i][j]
            cell[q] = cell[q] + c
    M = [[GroupRingElement(dst.group, b, rows[i][j]) for j in range(r)] for i in range(r)]
    try:
        return LocalizedUnit.from_integral(determinant(M))
    except SingularMatrix:
        return determinant_localized(M)


def canonical_project(xi: GroupRingElement, src: PairRing, dst: PairRing) -> GroupRingElement:
    """can: Lambda(U'/V') -> Lambda(U'/V) for V' <= V."""
    b = xi.budget
    z = TruncatedSeries.zero(b, xi.known_precision)
    out = [z] * dst.group.order
    for i, c in enumerate(xi.coeffs):
        if not c.is_zero:
            t = dst.project_global(src.lift_global(i))
            out[t] = out[t] + c
    return GroupRingElement(dst.group, b, out)


# ---------------------------------------------------------------------------
# Frobenius and congruence checks
# ---------------------------------------------------------------------------


def frobenius_phi(x: GroupRingElement) -> TruncatedSeries:
    """phi(x) = phi_Gamma(aug(x)); the finite part dies under exponent p."""
    return x.aug().frobenius()


def group_element_slack(lhs: GroupRingElement, rhs: GroupRingElement, ring: PairRing):
    """The group element u with lhs = rhs * [u] at precision, or None.

    Tuple components are only defined modulo p-power-torsion units, whose
    visible part is the finite group itself.
    """
    for u in range(ring.group.order):
        if lhs.equal_at_precision(rhs * GroupRingElement.from_element(ring.group, rhs.budget, u, known_precision=rhs.known_precision)):
            return u
    return None


@dataclass(frozen=True)
class CongruenceReport:
    name: str
    ok: bool
    detail: str = ""
    decided: bool = True


def congruence_check_J(x: GroupRingElement, ring: PairRing, theta=None):
    """theta_{U,V}(x) = phi(x)^{(G:U)/p} modulo J_{U,V} (proper U only)."""
    g = ring.parent
    index = g.order // len(ring.U)
    if index == 1:
        raise OutOfDomain("the J-congruence is not imposed on the total group")
    t = theta if theta is not None else theta_norm(x, ring)
    k = index // g.p
    target = scalar_embed(ring, series_power(frobenius_phi(x), k))
    ok = in_j_ideal(t - target)
    return ok, t


def congruence_check_I(x: GroupRingElement, fc: ArtinFamilyC, key, desc=None):
    """theta_U(x) = phi(x)^{(G:U)/p} modulo I_U, via both routes.

    Route 1 traces the integral logarithm of x into Lambda(U) and certifies
    lattice membership.  Route 2 takes log of theta_U(x) / phi(x)^{(G:U)/p}
    directly.  Both must agree and both must land in I_U.
    """
    g = fc.group
    if key == 0 or key == ("c", 0):
        sub = (0,) if key == 0 else tuple(sorted(g.subgroup_closure([fc.c])))
    elif isinstance(key, tuple):
        sub = tuple(sorted(g.subgroup_closure([key[1], fc.c])))
    else:
        sub = tuple(sorted(g.subgroup_closure([key])))
    if len(sub) == g.order and g.log_order <= 2:
        raise ExcludedTotalGroup("no I-congruence is imposed on the total group here")
    ring = pair_ring(g, sub)
    desc = desc if desc is not None else artin_I_descriptor(fc, key)
    index = g.order // len(sub)
    k = index // g.p
    res = integral_log(x)
    tr = trace_to_pair(res.value, ring)
    cert_trace = desc.contains(tr)
    t = theta_norm(x, ring)
    target_inv = scalar_embed(ring, series_power(frobenius_phi(x), k).invert())
    ratio = t * target_inv
    if not ratio.is_integral:
        raise PrecisionExhausted("congruence ratio left the integral ring")
    lg = ring_log(ratio)
    routes_agree = lg.equal_at_precision(tr)
    cert_log = desc.contains(lg)
    ok = cert_trace.member and cert_log.member and routes_agree
    return ok, {
        "trace_membership": cert_trace,
        "log_membership": cert_log,
        "routes_agree": routes_agree,
        "theta": t,
    }


def compat_log_norm(x: GroupRingElement, src: PairRing, dst: PairRing) -> bool:
    """Tr(log x) = log(Nr x) for x = 1 mod the maximal ideal (trace/norm
    both taken from Lambda(U/V) down to the index-p Lambda(U'/V))."""
    lg = ring_log(x)
    cv = ConjVector.from_group_ring(lg.push(
        [src.lift_global(i) for i in range(src.group.order)], src.parent
    ))
    lhs = trace_to_pair(cv, dst)
    nr = norm_to_subpair(x, src, dst)
    rhs = ring_log(nr)
    return lhs.equal_at_precision(rhs)


# ---------------------------------------------------------------------------
# theta tuples and Psi membership
# ---------------------------------------------------------------------------


@dataclass
class ThetaTuple:
    family: BrauerFamily
    components: dict  # pair index -> GroupRingElement | LocalizedUnit
    localized: bool = False

    def component(self, i):
        return self.components[i]


def _pair_rings(fb: BrauerFamily):
    return [pair_ring(fb.group, pr.U, pr.V) for pr in fb.pairs]


def theta_tuple(x: GroupRingElement, fb: BrauerFamily) -> ThetaTuple:
    rings = _pair_rings(fb)
    comps = {i: theta_norm(x, rings[i]) for i in range(len(fb.pairs))}
    return ThetaTuple(fb, comps, localized=False)


def theta_tuple_localized(x: LocalizedUnit, fb: BrauerFamily) -> ThetaTuple:
    rings = _pair_rings(fb)
    comps = {i: theta_norm_localized(x, rings[i]) for i in range(len(fb.pairs))}
    return ThetaTuple(fb, comps, localized=True)


def _ab_pair_index(fb: BrauerFamily):
    full = tuple(range(fb.group.order))
    for i, pr in enumerate(fb.pairs):
        if pr.U == full:
            return i
    raise OutOfDomain("family lacks the abelianization pair")


@dataclass
class PsiReport:
    verdict: str  # "psi" | "psi-prime" | "out"
    records: list = field(default_factory=list)
    fa_only_verdict: str = ""

    def failing(self):
        return [r for r in self.records if r.decided and not r.ok]

    def undecided(self):
        return [r for r in self.records if not r.decided]


def psi_membership(t: ThetaTuple, fc: ArtinFamilyC = None) -> PsiReport:
    """Membership report against the compatible-tuple lattice.

    Core conditions (norm compatibility, conjugation compatibility, the
    J-congruence against phi of the abelianized component) decide "out";
    the additional I-congruences over the rank-<=1 members (and over the
    rank-2 extension) decide "psi" vs "psi-prime".  All equalities allow a
    group-element slack.
    """
    fb = t.family
    g = fb.group
    if fc is None:
        fc = artin_family_c(g)
    rings = _pair_rings(fb)
    records = []
    core_ok = True

    for (i, j) in fb.tcc_edges:
        sup, sub = fb.pairs[i], fb.pairs[j]
        if not set(sup.V) <= set(sub.U):
            continue
        mid = pair_ring(g, sub.U, sup.V)
        lhs = norm_to_subpair(t.component(i), rings[i], mid)
        rhs = canonical_project(t.component(j), rings[j], mid)
        slack = group_element_slack(lhs, rhs, mid)
        ok = slack is not None
        core_ok &= ok
        records.append(CongruenceReport(
            name=f"NCC {sup.pair_id}->{sub.pair_id}", ok=ok,
            detail="" if ok else "norm and canonical images differ",
        ))

    for (i, j, a) in fb.conj_links:
        lhs = conjugation_iso(t.component(i), rings[i], rings[j], a)
        rhs = t.component(j)
        slack = group_element_slack(lhs, rhs, rings[j])
        ok = slack is not None
        core_ok &= ok
        records.append(CongruenceReport(
            name=f"CCC {fb.pairs[i].pair_id}->{fb.pairs[j].pair_id}", ok=ok,
            detail="" if ok else f"conjugation by {a} mismatch",
        ))

    ab = _ab_pair_index(fb)
    eta_ab = t.component(ab)
    ph = frobenius_phi(eta_ab)
    for i, pr in enumerate(fb.pairs):
        index = g.order // len(pr.U)
        if index == 1:
            continue
        target = scalar_embed(rings[i], series_power(ph, index // g.p))
        ok = in_j_ideal(t.component(i) - target)
        core_ok &= ok
        records.append(CongruenceReport(
            name=f"Jcong {pr.pair_id}", ok=ok,
            detail="" if ok else "component differs from the Frobenius power mod J",
        ))

    fa_ok = True
    fac_ok = True
    for key, sub in _artin_keys(fc):
        if len(sub) == g.order:
            continue
        i = fb.pair_index(sub)
        ring = rings[i]
        desc = artin_I_descriptor(fc, key)
        index = g.order // len(sub)
        target = scalar_embed(ring, series_power(ph, index // g.p))
        ok = _i_congruent_with_slack(t.component(i), target, desc, ring)
        if isinstance(key, tuple):
            fac_ok &= ok
        else:
            fa_ok &= ok
        records.append(CongruenceReport(
            name=f"Icong {ring.pair_id}", ok=ok,
            detail="" if ok else "additional congruence fails",
        ))

    if not core_ok:
        verdict = "out"
    elif fa_ok and fac_ok:
        verdict = "psi"
    else:
        verdict = "psi-prime"
    return PsiReport(verdict=verdict, records=records,
                     fa_only_verdict="psi" if (core_ok and fa_ok) else
                     ("psi-prime" if core_ok else "out"))


def _artin_keys(fc: ArtinFamilyC):
    out = [(m.h, m.subgroup) for m in fc.base.members]
    out += [(("c", m.h), m.subgroup) for m in fc.extra]
    return out


def _i_congruent_with_slack(comp, target, desc, ring):
    for u in range(ring.group.order):
        shifted = target * GroupRingElement.from_element(
            ring.group, target.budget, u, known_precision=target.known_precision
        )
        try:
            cert = desc.contains(comp - shifted)
        except PrecisionExhausted:
            raise
        if cert.member:
            return True
    return False


# ---------------------------------------------------------------------------
# localized Psi membership
# ---------------------------------------------------------------------------


def _as_localized(comp):
    if isinstance(comp, LocalizedUnit):
        return comp
    return LocalizedUnit.from_integral(comp)


def psi_membership_localized(t: ThetaTuple, fc: ArtinFamilyC = None) -> PsiReport:
    """The localized lattice: same conditions with J_S / I_S.

    A fraction n / (p^A d) with d S-invertible lies in J_S exactly when
    aug(n) lies in p^(A+1) Lambda, and in the I_S-span exactly when the
    lattice coordinates of n are divisible by p^A (up to the unit d, which
    never changes p-content).  For integral tuples (A = 0, d = 1) this is
    literally the integral check, so verdicts agree by construction.
    """
    fb = t.family
    g = fb.group
    if fc is None:
        fc = artin_family_c(g)
    rings = _pair_rings(fb)
    records = []
    core_ok = True

    comps = {i: _as_localized(t.component(i)) for i in t.components}
    core_open = False

    def run(check):
        """True / False / None: None means undecidable at this truncation."""
        try:
            return check()
        except PrecisionExhausted:
            return None

    def record(name, res):
        records.append(CongruenceReport(
            name=name, ok=bool(res), decided=res is not None,
            detail="" if res is not None else "undecidable at this truncation",
        ))
        return res

    for (i, j) in fb.tcc_edges:
        sup, sub = fb.pairs[i], fb.pairs[j]
        if not set(sup.V) <= set(sub.U):
            continue
        mid = pair_ring(g, sub.U, sup.V)

        def ncc(i=i, j=j, mid=mid):
            lhs = norm_to_subpair_localized(comps[i], rings[i], mid)
            rhs = _loc(canonical_project(comps[j].num, rings[j], mid),
                       comps[j].den, comps[j].pshift)
            return _localized_slack_equal(lhs, rhs, mid)

        res = record(f"NCC_S {sup.pair_id}->{sub.pair_id}", run(ncc))
        core_ok &= res is not False
        core_open |= res is None

    for (i, j, a) in fb.conj_links:

        def ccc(i=i, j=j, a=a):
            lhs = _loc(conjugation_iso(comps[i].num, rings[i], rings[j], a),
                       comps[i].den, comps[i].pshift)
            return _localized_slack_equal(lhs, comps[j], rings[j])

        res = record(f"CCC_S {fb.pairs[i].pair_id}->{fb.pairs[j].pair_id}", run(ccc))
        core_ok &= res is not False
        core_open |= res is None

    ab = _ab_pair_index(fb)
    eta_ab = comps[ab]
    # phi of a localized abelian component: phi(num) / (p^pshift phi(den))
    ph_num = eta_ab.num.aug().frobenius()
    ph_den = eta_ab.den.frobenius()
    ph_shift = eta_ab.pshift
    for i, pr in enumerate(fb.pairs):
        index = g.order // len(pr.U)
        if index == 1:
            continue
        k = index // g.p

        def jc(i=i, k=k):
            target = _phi_power_target(rings[i], ph_num, ph_den, ph_shift, k)
            return _in_j_ideal_shifted(comps[i] - target)

        res = record(f"Jcong_S {pr.pair_id}", run(jc))
        core_ok &= res is not False
        core_open |= res is None

    fa_ok = True
    fac_ok = True
    extra_open = False
    for key, sub in _artin_keys(fc):
        if len(sub) == g.order:
            continue
        i = fb.pair_index(sub)
        ring = rings[i]
        desc = artin_I_descriptor(fc, key)
        index = g.order // len(sub)
        k = index // g.p

        def ic(i=i, k=k, ring=ring, desc=desc):
            target = _phi_power_target(ring, ph_num, ph_den, ph_shift, k)
            return _i_congruent_with_slack_localized(comps[i], target, desc, ring)

        res = record(f"Icong_S {ring.pair_id}", run(ic))
        if isinstance(key, tuple):
            fac_ok &= res is not False
        else:
            fa_ok &= res is not False
        extra_open |= res is None

    if not core_ok:
        verdict = "out"
    elif core_open or (fa_ok and fac_ok and extra_open):
        verdict = "undecided"
    elif fa_ok and fac_ok:
        verdict = "psi"
    else:
        verdict = "psi-prime"
    if not core_ok:
        fa_verdict = "out"
    elif core_open or (fa_ok and extra_open):
        fa_verdict = "undecided"
    else:
        fa_verdict = "psi" if fa_ok else "psi-prime"
    return PsiReport(verdict=verdict, records=records, fa_only_verdict=fa_verdict)


def _phi_power_target(ring: PairRing, ph_num: TruncatedSeries,
                      ph_den: TruncatedSeries, ph_shift: int, k: int) -> LocalizedUnit:
    dpow, dshift = scalar_power_reduced(ph_den, k)
    return _loc(scalar_embed(ring, series_power(ph_num, k)), dpow,
                dshift + k * ph_shift)


def _den_is_unit(x: LocalizedUnit) -> bool:
    return x.pshift <= 0 and x.den.constant_is_unit()


def _in_j_ideal_shifted(x: LocalizedUnit) -> bool:
    """x = n / (p^A d) lies in J_S if aug(n) is divisible by p^(A+1).

    The divisibility is sufficient for membership (d is a unit of the
    localization, so it never changes p-content).  A negative answer is only
    conclusive when the denominator is a genuine unit of the integral ring;
    otherwise the T-truncation may hide the decisive coefficients, and the
    question is undecidable at this truncation.
    """
    a = x.num.aug()
    if a.known_precision <= x.pshift:
        raise PrecisionExhausted("J_S membership needs more digits than remain")
    if a.min_valuation() >= x.pshift + 1:
        return True
    if _den_is_unit(x):
        return False
    raise PrecisionExhausted("J_S non-membership cannot be certified here")


def _i_congruent_with_slack_localized(comp: LocalizedUnit, target: LocalizedUnit,
                                      desc, ring: PairRing) -> bool:
    """I_S-membership of comp - target * [u] for some group slack u.

    Integral lattice coordinates of the numerator, divisible by the p-shift,
    certify membership (the scalar denominator is a unit of the localization).
    Failure to find such coordinates is only conclusive over genuine unit
    denominators; otherwise the answer is undecidable at this truncation.
    """
    conclusive = True
    for u in range(ring.group.order):
        shifted = _loc(
            target.num * GroupRingElement.from_element(
                ring.group, target.budget, u,
                known_precision=target.num.known_precision,
            ),
            target.den, target.pshift,
        )
        diff = comp - shifted
        cert = desc.contains(diff.num)
        if not cert.member:
            conclusive &= _den_is_unit(diff)
            continue
        if diff.pshift == 0:
            return True
        if any(c.known_precision <= diff.pshift for c in cert.coords):
            conclusive = False
            continue
        if all(c.min_valuation() >= diff.pshift for c in cert.coords):
            return True
        conclusive &= _den_is_unit(diff)
    if not conclusive:
        raise PrecisionExhausted("I_S non-membership cannot be certified here")
    return False


def _localized_slack(lhs: LocalizedUnit, rhs: LocalizedUnit, ring: PairRing):
    """The group element u with lhs = rhs * [u] at precision, or None."""
    kp = min(lhs.num.known_precision, rhs.num.known_precision)
    off = min(lhs.pshift, rhs.pshift)
    if (lhs.pshift - off) + (rhs.pshift - off) >= kp:
        raise PrecisionExhausted("equality in the localized ring needs more digits")
    a = lhs.num.series_mul(rhs.den).mul_p_power(rhs.pshift - off)
    c = rhs.num.series_mul(lhs.den).mul_p_power(lhs.pshift - off)
    return group_element_slack(a, c, ring)


def _localized_slack_equal(lhs: LocalizedUnit, rhs: LocalizedUnit, ring: PairRing):
    return _localized_slack(lhs, rhs, ring) is not None


# ---------------------------------------------------------------------------
# character evaluation
# ---------------------------------------------------------------------------


def evaluate_at_character(x, ring: PairRing, chi, gamma_exp: int, r: int, kappa_gamma: int):
    """Evaluate an element of Lambda(U/V)(_S) at a character.

    chi maps each element of the finite quotient to an exponent of the p-th
    root of unity; gamma goes to zeta^gamma_exp * kappa_gamma^r, so T
    evaluates to that value minus 1.  Localized inputs return INFINITY when
    the denominator evaluates to a non-unit.
    """
    b = x.budget if isinstance(x, GroupRingElement) else x.num.budget
    p = b.p
    a_grp = ring.group
    for u in range(a_grp.order):
        for v in range(a_grp.order):
            if (chi[u] + chi[v] - chi[a_grp.mul(u, v)]) % p:
                raise BadCharacter("character table violates the homomorphism law")
    kref = pow(kappa_gamma % p ** b.M, r, p ** b.M)
    zg = CyclotomicValue.zeta_power(p, b.M, gamma_exp)
    t = CyclotomicValue(p, b.M, [c * kref for c in zg.coords]) - CyclotomicValue.from_integer(p, b.M, 1)

    def eval_integral(el: GroupRingElement):
        acc = CyclotomicValue(p, b.M, [])
        for u, c in enumerate(el.coeffs):
            if not c.is_zero:
                acc = acc + evaluate_series_cyclotomic(c, t) * CyclotomicValue.zeta_power(p, b.M, chi[u])
        return acc

    if isinstance(x, GroupRingElement):
        return eval_integral(x)
    num = eval_integral(x.num)
    den = evaluate_series_cyclotomic(x.den, t)
    if not den.is_unit():
        return INFINITY
    return num * den.invert()
