"""Logarithms on truncated group rings and the integral logarithm.

The convergence domains are the ideals whose mod-p reductions are nilpotent:
1 + J (augmentation in p), 1 + I_U (trace lattices), and the full 1-unit
part of Lambda(G) after splitting off a Teichmueller constant.  The integral
logarithm is log(x) - (1/p) * phi(log x) computed at class level with an
exact-divisibility certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .class_algebra import (
    ConjVector,
    GroupRingElement,
    SubmoduleDescriptor,
    _flat_values,
    _from_flat_scaled,
    _ring_mul_flat,
    in_j_ideal,
    pair_ring,
)
from .errors import (
    IntegralityFailure,
    NotAUnit,
    NotInImage,
    OutOfDomain,
    PrecisionExhausted,
)
from .precision_core import (
    PrecisionBudget,
    TruncatedSeries,
    _exp_flat,
    _log_flat,
)


def ring_log(x: GroupRingElement) -> GroupRingElement:
    """log of an element of 1 + m (maximal ideal); terminating by nilpotency."""
    b = x.budget
    one = GroupRingElement.one(x.group, b, x.known_precision)
    y = x - one
    if not y.is_integral:
        raise OutOfDomain("log requires an integral argument")
    aug0 = y.aug().nums[0]
    if aug0 % (b.p ** (b.B + 1)):
        raise OutOfDomain("argument is not a 1-unit (augmentation != 1 mod p)")
    kp = y.known_precision
    flat = _flat_values(y)
    out = _log_flat(
        flat,
        lambda a, c, mod: _ring_mul_flat(a, c, x.group.table, b.n, mod),
        b.p,
        b.B,
        kp,
        cap_hint=x.group.order,
    )
    return _from_flat_scaled(x.group, b, out, kp)


def ring_exp(x: GroupRingElement) -> GroupRingElement:
    """exp on a group ring; the argument must lie in p * (integral group ring)."""
    b = x.budget
    if not b.exp_ready:
        raise OutOfDomain("denominator budget too small for exp")
    flat = _flat_values(x)
    out = _exp_flat(
        flat,
        lambda a, c, mod: _ring_mul_flat(a, c, x.group.table, b.n, mod),
        b.p,
        b.B,
        x.known_precision,
        cap_hint=x.group.order,
    )
    return _from_flat_scaled(x.group, b, out, x.known_precision)


def log_on_one_plus_J(x: GroupRingElement) -> GroupRingElement:
    """log on 1 + J_{U,V}; the image is certified integral."""
    one = GroupRingElement.one(x.group, x.budget, x.known_precision)
    if not in_j_ideal(x - one):
        raise OutOfDomain("argument is not congruent to 1 modulo J")
    out = ring_log(x)
    if not out.is_integral:
        raise IntegralityFailure("log of a 1+J element came out non-integral")
    return out


def log_on_one_plus_I(x: GroupRingElement, desc: SubmoduleDescriptor):
    """log: 1 + I_U -> I_U with membership certificates on both ends."""
    one = GroupRingElement.one(x.group, x.budget, x.known_precision)
    cert_in = desc.contains(x - one)
    if not cert_in.member:
        raise OutOfDomain(f"argument - 1 is outside {desc.name}: {cert_in.reason}")
    out = ring_log(x)
    cert_out = desc.contains(out)
    if not cert_out.member:
        raise IntegralityFailure(f"log image escaped {desc.name}: {cert_out.reason}")
    return out, cert_out


def exp_on_I(x: GroupRingElement, desc: SubmoduleDescriptor):
    """exp: I_U -> 1 + I_U with membership certificates on both ends."""
    cert_in = desc.contains(x)
    if not cert_in.member:
        raise OutOfDomain(f"argument is outside {desc.name}: {cert_in.reason}")
    out = ring_exp(x)
    one = GroupRingElement.one(x.group, x.budget, out.known_precision)
    cert_out = desc.contains(out - one)
    if not cert_out.member:
        raise IntegralityFailure(f"exp image escaped 1 + {desc.name}: {cert_out.reason}")
    return out, cert_out


def teichmueller(p: int, K: int, a: int) -> int:
    """The (p-1)-st root of unity congruent to a mod p, mod p^K."""
    if a % p == 0:
        raise NotAUnit("no Teichmueller lift of a non-unit")
    mod = p ** K
    x = a % mod
    for _ in range(K + 1):
        x = pow(x, p, mod)
    return x


@dataclass
class IntegralLogResult:
    value: ConjVector
    known_precision: int
    certificate: dict


def integral_log(x: GroupRingElement) -> IntegralLogResult:
    """Gamma_G(x) = log(x) - (1/p) phi(log x) on classes, for a unit x."""
    b = x.budget
    if not x.is_unit():
        raise NotAUnit("integral log needs a unit of Lambda(G)")
    kp = x.known_precision
    K = kp + b.B
    a0 = (x.aug().nums[0] // b.scale()) % b.p
    zeta = teichmueller(b.p, K, a0)
    u = x.scalar_mul(pow(zeta, -1, b.p ** K))
    L = ring_log(u)
    cv = ConjVector.from_group_ring(L)
    num = cv.scalar_mul(b.p) - cv.frobenius_classes()
    try:
        value = num.mul_p_power(-1)
    except PrecisionExhausted as e:
        raise IntegralityFailure(f"p log(x) - phi(log x) not divisible by p: {e}")
    if not all(c.is_integral for c in value.coeffs):
        raise IntegralityFailure("integral log value has denominators")
    cert = {
        "teichmueller": zeta % b.p,
        "log_terms_integral": L.is_integral,
    }
    return IntegralLogResult(value=value, known_precision=value.known_precision, certificate=cert)


def omega_at_level(y: ConjVector, j: int):
    """The multiplicative shadow: exponents in G^(f,ab) x Gamma/Gamma^(p^j).

    Returns (ab_ring, ab_element_index, gamma_exponent mod p^j).
    Only the augmentation (T = 0) and the linear T-coefficient of the class
    coefficients matter at this level.
    """
    g = y.group
    b = y.budget
    kp = y.known_precision
    if kp < max(j, 1):
        raise PrecisionExhausted(f"omega at level {j} needs {j} digits, have {kp}")
    if not all(c.is_integral for c in y.coeffs):
        raise OutOfDomain("omega requires an integral class vector")
    ab_ring = pair_ring(g, tuple(range(g.order)), g.commutator_subgroup())
    s = b.scale()
    ab_elem = 0
    gamma_exp = 0
    pj = b.p ** j
    classes = g.conjugacy_classes()
    for idx, cl in enumerate(classes):
        c = y.coeffs[idx]
        e0 = (c.nums[0] // s) % g.p
        if e0:
            img = ab_ring.project_global(cl[0])
            for _ in range(e0):
                ab_elem = ab_ring.group.mul(ab_elem, img)
        gamma_exp += c.nums[1] // s
    return ab_ring, ab_elem, gamma_exp % pj


def gamma_budget_series_intlog(x: TruncatedSeries) -> TruncatedSeries:
    """Gamma_Gamma on Lambda(Gamma): log(x) - (1/p) phi(log x) for scalar units."""
    b = x.budget
    if not x.is_p_unit():
        raise NotAUnit("scalar integral log needs a unit")
    K = x.known_precision + b.B
    a0 = (x.nums[0] // b.scale()) % b.p
    zeta = teichmueller(b.p, K, a0)
    u = x.scalar_mul(pow(zeta, -1, b.p ** K))
    L = u.log()
    num = L.scalar_mul(b.p) - L.frobenius()
    return num.mul_p_power(-1)


def intlog_invert_abelian(y: TruncatedSeries) -> TruncatedSeries:
    """Solve Gamma_Gamma(eta) = y for scalar series with vanishing T-coefficient.

    The solution is normalized by a vanishing linear log coefficient (the
    gamma-power ambiguity in the kernel); exp of the solved log series is
    returned.
    """
    b = y.budget
    p, n = b.p, b.n
    kp = y.known_precision
    mod = p ** (kp + b.B)
    if y.nums[1] % mod:
        raise NotInImage("T-coefficient must vanish for an integral-log image")
    # substitution polynomial s = (1+T)^p - 1 and its powers, value level
    from math import comb

    s_poly = [0] + [comb(p, i) % mod for i in range(1, min(p, n - 1) + 1)]
    s_poly += [0] * (n - len(s_poly))
    powers = [[1] + [0] * (n - 1)]
    for _ in range(1, n):
        prev = powers[-1]
        nxt = [0] * n
        for u in range(n):
            if prev[u]:
                for v in range(n - u):
                    if s_poly[v]:
                        nxt[u + v] = (nxt[u + v] + prev[u] * s_poly[v]) % mod
        powers.append(nxt)
    c = [0] * n  # scaled numerators of the log series x
    inv_pm1 = pow(p - 1, -1, mod)
    c[0] = (y.nums[0] * p * inv_pm1) % mod
    for m in range(2, n):
        contrib = 0
        for k in range(m):
            if c[k]:
                contrib += c[k] * powers[k][m]
        if contrib % p:
            raise PrecisionExhausted("inverter hit a non-exact division by p")
        rhs = (y.nums[m] + contrib // p) % mod
        c[m] = (rhs * pow(1 - p ** (m - 1), -1, mod)) % mod
    x = TruncatedSeries(b, c, max(kp - 1, 1))
    return x.exp()
