"""Truncated arithmetic over Z_p[[T]] with explicit precision bookkeeping.

All computations happen modulo (p^M, T^n) with an extra denominator allowance
p^B: a series coefficient is stored as a canonical integer numerator in
[0, p^(kp+B)) representing numerator / p^B, where kp (``known_precision``)
is the number of reliable p-adic digits of the value.  Operations that divide
by p reduce kp; nothing ever rounds silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .errors import (
    BudgetMismatch,
    NotAUnit,
    NotSInvertible,
    OutOfDomain,
    PrecisionExhausted,
)
from .linalg import solve_mod_prime_power, vp

_INFINITY = "INFINITY"


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class PrecisionBudget:
    """Working precision: coefficients mod p^M, series mod T^n, denominators p^-B."""

    p: int
    M: int
    n: int
    B: int

    def __post_init__(self):
        if not _is_prime(self.p) or self.p == 2:
            raise OutOfDomain(f"p must be an odd prime, got {self.p}")
        if self.M < 1 or self.n < 1 or self.B < 0:
            raise OutOfDomain("require M >= 1, n >= 1, B >= 0")

    @property
    def exp_ready(self) -> bool:
        """Whether the denominator allowance suffices for exponentials."""
        return self.B >= (self.n - 1) // (self.p - 1)

    def modulus(self, kp: int) -> int:
        return self.p ** (kp + self.B)

    def scale(self) -> int:
        return self.p ** self.B


def _polymul(a, b, n):
    out = [0] * n
    for i, ai in enumerate(a):
        if ai:
            for j in range(min(len(b), n - i)):
                if b[j]:
                    out[i + j] += ai * b[j]
    return out


class TruncatedSeries:
    """Element of p^-B Z_p[[T]] mod (p^known_precision, T^n)."""

    __slots__ = ("budget", "nums", "known_precision")

    def __init__(self, budget: PrecisionBudget, nums, known_precision=None):
        kp = budget.M if known_precision is None else known_precision
        if kp < 1:
            raise PrecisionExhausted("no reliable digits left")
        kp = min(kp, budget.M)
        mod = budget.p ** (kp + budget.B)
        nums = list(nums)[: budget.n]
        nums += [0] * (budget.n - len(nums))
        object.__setattr__(self, "budget", budget)
        object.__setattr__(self, "nums", tuple(c % mod for c in nums))
        object.__setattr__(self, "known_precision", kp)

    def __setattr__(self, *a):
        raise AttributeError("TruncatedSeries is immutable")

    # ---------- constructors ----------

    @classmethod
    def from_coeffs(cls, budget, coeffs, known_precision=None):
        """Build from integer coefficient values (no denominators)."""
        s = budget.scale()
        return cls(budget, [c * s for c in coeffs], known_precision)

    @classmethod
    def zero(cls, budget, known_precision=None):
        return cls(budget, [], known_precision)

    @classmethod
    def one(cls, budget, known_precision=None):
        return cls.from_coeffs(budget, [1], known_precision)

    @classmethod
    def gamma(cls, budget, known_precision=None):
        """The group-like element 1 + T."""
        return cls.from_coeffs(budget, [1, 1], known_precision)

    # ---------- inspection ----------

    def coeff_value(self, i: int) -> Fraction:
        return Fraction(self.nums[i], self.budget.scale())

    def coeff_values(self):
        return [self.coeff_value(i) for i in range(self.budget.n)]

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.nums)

    def denominator_exponent(self) -> int:
        """Largest d with p^-d genuinely appearing among stored coefficients."""
        b = self.budget
        d = 0
        for c in self.nums:
            if c:
                d = max(d, b.B - vp(c, b.p, b.B))
        return d

    @property
    def is_integral(self) -> bool:
        return self.denominator_exponent() == 0

    def min_valuation(self) -> int:
        """Lower bound for the valuation of the stored representative."""
        b = self.budget
        cap = self.known_precision + b.B
        v = cap
        for c in self.nums:
            v = min(v, vp(c, b.p, cap))
        return v - b.B

    def constant_is_unit(self) -> bool:
        b = self.budget
        return self.nums[0] % (b.p ** (b.B + 1)) == b.scale() % (b.p ** (b.B + 1))

    def is_p_unit(self) -> bool:
        """Unit of Lambda: integral with unit constant coefficient."""
        return self.is_integral and self.nums[0] % (self.budget.p ** (self.budget.B + 1)) != 0

    def is_s_invertible(self) -> bool:
        """Not in p*Lambda: some coefficient is a p-adic unit (and integral)."""
        b = self.budget
        if not self.is_integral:
            return False
        return any(c and vp(c, b.p, b.B + 1) == b.B for c in self.nums)

    # ---------- ring operations ----------

    def _check(self, other):
        if self.budget != other.budget:
            raise BudgetMismatch("operands built with different budgets")

    def __add__(self, other):
        self._check(other)
        kp = min(self.known_precision, other.known_precision)
        return TruncatedSeries(self.budget, [a + b for a, b in zip(self.nums, other.nums)], kp)

    def __sub__(self, other):
        self._check(other)
        kp = min(self.known_precision, other.known_precision)
        return TruncatedSeries(self.budget, [a - b for a, b in zip(self.nums, other.nums)], kp)

    def __neg__(self):
        return TruncatedSeries(self.budget, [-a for a in self.nums], self.known_precision)

    def scalar_mul(self, c: int):
        return TruncatedSeries(self.budget, [c * a for a in self.nums], self.known_precision)

    def __mul__(self, other):
        self._check(other)
        b = self.budget
        da, db = self.denominator_exponent(), other.denominator_exponent()
        kp = min(self.known_precision - db, other.known_precision - da)
        if kp < 1:
            raise PrecisionExhausted("product has no reliable digits")
        raw = _polymul(self.nums, other.nums, b.n)
        s = b.scale()
        out = []
        for c in raw:
            if c % s:
                raise PrecisionExhausted("denominator budget exceeded in product")
            out.append(c // s)
        return TruncatedSeries(b, out, kp)

    def shift(self, k: int):
        """Multiply by T^k."""
        return TruncatedSeries(self.budget, [0] * k + list(self.nums), self.known_precision)

    def divide_exact(self, m: int):
        """Divide by a nonzero integer; exact at numerator level or fails loudly."""
        b = self.budget
        v = vp(m, b.p, b.M + b.B)
        unit = m // (b.p ** v)
        mod = b.p ** (self.known_precision + b.B)
        inv = pow(unit % mod, -1, mod)
        nums = [(c * inv) % mod for c in self.nums]
        if v:
            pv = b.p ** v
            if any(c % pv for c in nums):
                raise PrecisionExhausted(f"cannot certify divisibility by p^{v}")
            nums = [c // pv for c in nums]
            if self.known_precision - v < 1:
                raise PrecisionExhausted("division by p exhausted precision")
        return TruncatedSeries(b, nums, self.known_precision - v)

    def mul_p_power(self, k: int):
        """Multiply by p^k (k may be negative: exact division required)."""
        if k >= 0:
            return TruncatedSeries(
                self.budget, [c * self.budget.p ** k for c in self.nums], self.known_precision
            )
        return self.divide_exact(self.budget.p ** (-k))

    def invert(self):
        """Inverse of a unit of Lambda (unit constant coefficient)."""
        b = self.budget
        if not self.is_integral:
            raise NotAUnit("non-integral element")
        kp = self.known_precision
        mod = b.p ** kp
        s = b.scale()
        u = [(c // s) % mod for c in self.nums]
        if u[0] % b.p == 0:
            raise NotAUnit("constant coefficient not a p-adic unit")
        g = [0] * b.n
        g[0] = pow(u[0], -1, mod)
        for k in range(1, b.n):
            acc = 0
            for i in range(1, k + 1):
                acc += u[i] * g[k - i]
            g[k] = (-g[0] * acc) % mod
        return TruncatedSeries(b, [c * s for c in g], kp)

    def frobenius(self):
        """The ring map T -> (1+T)^p - 1 (gamma -> gamma^p)."""
        b = self.budget
        mod = b.p ** (self.known_precision + b.B)
        sub = [comb(b.p, i) % mod for i in range(1, min(b.p, b.n - 1) + 1)]
        out = [self.nums[0]]
        out += [0] * (b.n - 1)
        power = [1] + [0] * (b.n - 1)  # sub^i, value level
        for i in range(1, b.n):
            power = [c % mod for c in _polymul(power, [0] + sub, b.n)]
            if all(c == 0 for c in power):
                break
            ai = self.nums[i]
            if ai:
                for j in range(b.n):
                    out[j] += ai * power[j]
        return TruncatedSeries(b, out, self.known_precision)

    def evaluate_gamma_power_basis(self, j: int):
        """Coefficients a_i with series = sum a_i (1+T)^i, i in [0, p^j).

        Only valid when the stored polynomial degree is below p^j, i.e. the
        truncated representative can be read as an exact polynomial in T.
        """
        b = self.budget
        q = b.p ** j
        if b.n > q:
            raise OutOfDomain("level too small for faithful polynomial reading")
        mod = b.p ** (self.known_precision + b.B)
        # Solve sum a_i (1+T)^i = series, triangular in reverse degree order.
        rem = list(self.nums)
        a = [0] * q
        for deg in range(b.n - 1, -1, -1):
            a[deg] = rem[deg] % mod
            if a[deg]:
                for t in range(deg + 1):
                    rem[t] = (rem[t] - a[deg] * comb(deg, t)) % mod
        return a

    # ---------- comparisons ----------

    def equal_at_precision(self, other) -> bool:
        self._check(other)
        b = self.budget
        mod = b.p ** (min(self.known_precision, other.known_precision) + b.B)
        return all((x - y) % mod == 0 for x, y in zip(self.nums, other.nums))

    def congruent_mod_p_power(self, other, k: int) -> bool:
        """Values agree modulo p^k (requires k <= joint known precision)."""
        self._check(other)
        kp = min(self.known_precision, other.known_precision)
        if k > kp:
            raise PrecisionExhausted(f"cannot test congruence mod p^{k} at precision {kp}")
        mod = self.budget.p ** (k + self.budget.B)
        return all((x - y) % mod == 0 for x, y in zip(self.nums, other.nums))

    def reduce_precision(self, kp: int):
        return TruncatedSeries(self.budget, self.nums, min(kp, self.known_precision))

    def __eq__(self, other):
        return (
            isinstance(other, TruncatedSeries)
            and self.budget == other.budget
            and self.known_precision == other.known_precision
            and self.nums == other.nums
        )

    def __hash__(self):
        return hash((self.budget, self.known_precision, self.nums))

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.nums):
            if c:
                terms.append(f"{Fraction(c, self.budget.scale())}*T^{i}")
        body = " + ".join(terms) if terms else "0"
        return f"<series {body} (kp={self.known_precision})>"

    # ---------- transcendental operations ----------

    def log(self):
        """log of a 1-unit (constant coefficient = 1 mod p, integral input)."""
        b = self.budget
        if not self.is_integral:
            raise OutOfDomain("log requires an integral 1-unit")
        if not self.constant_is_unit():
            raise OutOfDomain("log requires constant coefficient = 1 mod p")
        s = b.scale()
        kp = self.known_precision
        y = [c // s for c in self.nums]
        y[0] -= 1
        out = _log_flat(y, lambda a, c, mod: _polymul_mod(a, c, b.n, mod), b.p, b.B, kp)
        return TruncatedSeries(b, out, kp)

    def exp(self):
        """exp; requires constant coefficient in pZ_p and B >= floor((n-1)/(p-1)).

        Computed exactly on the stored representative (the T-positive part is
        nilpotent, the constant is a classically convergent p-adic exp run to
        an analytic tail bound).  If the result carries denominators p^-d the
        reported precision drops by d.
        """
        b = self.budget
        p, n, B = b.p, b.n, b.B
        if not b.exp_ready:
            raise OutOfDomain("denominator budget too small for exp")
        if self.nums[0] % (p ** (B + 1)):
            raise OutOfDomain("exp requires constant coefficient in pZ_p")
        kp = self.known_precision
        vals = [Fraction(c, b.scale()) for c in self.nums]
        x0 = vals[0]
        m_stop = 1 + -((kp + B) * (p - 1) // -(p - 2))
        e0 = Fraction(1)
        t = Fraction(1)
        for m in range(1, m_stop + 1):
            t = t * x0 / m
            e0 += t
        xp = [Fraction(0)] + vals[1:]
        poly = [Fraction(1)] + [Fraction(0)] * (n - 1)
        term = list(poly)
        for m in range(1, n):
            nxt = [Fraction(0)] * n
            for i in range(1, n):
                if xp[i]:
                    for j in range(n - i):
                        nxt[i + j] += xp[i] * term[j]
            term = [c / m for c in nxt]
            poly = [a + c for a, c in zip(poly, term)]
        mod = p ** (kp + B)
        nums = []
        for c in poly:
            c = c * e0 * b.scale()
            den = c.denominator
            if den % p == 0:
                raise PrecisionExhausted("exp result exceeds the denominator budget")
            nums.append(c.numerator * pow(den, -1, mod) % mod)
        out = TruncatedSeries(b, nums, kp)
        d = out.denominator_exponent()
        if d:
            out = TruncatedSeries(b, out.nums, kp - d)
        return out


def _polymul_mod(a, c, n, mod):
    out = [0] * n
    for i, ai in enumerate(a):
        if ai:
            for j in range(min(len(c), n - i)):
                if c[j]:
                    out[i + j] += ai * c[j]
    return [x % mod for x in out]


def _term_cap(p, digits, size):
    """Iteration cap for log/exp loops: generous and loud on overflow."""
    return p * (digits + 4) + 4 * size + 16


def _log_flat(y, mul, p, B, kp, cap_hint=0):
    """log(1 + y) for an integral flat vector y in the convergence ideal.

    ``mul`` multiplies two flat integer vectors modulo ``mod``.  Returns the
    scaled (by p^B) numerator vector mod p^(kp+B).  Output precision is kp:
    log is an isometry-like map on its domain for p odd.
    """
    size = len(y)
    H = 1
    while p ** H < _term_cap(p, kp + B, max(size, cap_hint)):
        H += 1
    work = p ** (kp + H)
    out_mod = p ** (kp + B)
    pB = p ** B
    power = [c % work for c in y]
    acc = [0] * size
    m = 1
    cap = _term_cap(p, kp + B + H, max(size, cap_hint))
    while any(power):
        v = vp(m, p, H)
        unit = m // p**v
        inv = pow(unit, -1, out_mod)
        pv = p ** v
        sign = 1 if m % 2 else -1
        for i, c in enumerate(power):
            t = c * pB
            if t % pv:
                raise PrecisionExhausted("log term not exactly divisible")
            acc[i] = (acc[i] + sign * inv * (t // pv)) % out_mod
        m += 1
        if m > cap:
            raise PrecisionExhausted("log did not terminate within the cap")
        power = mul(power, y, work)
    return acc


def _exp_flat(x_vals, mul, p, B, kp, cap_hint=0):
    """exp of an integral flat vector with every coefficient in pZ_p.

    ``x_vals`` are value-level integers.  The term x^m/m! then has valuation
    at least m - v_p(m!) >= (m-1)(p-2)/(p-1), so running to a fixed analytic
    bound m_stop covers the whole tail mod p^(kp+B) -- no peeking at the
    current term, which can shrink and then grow back at multiples of p.
    Returns scaled (by p^B) numerators mod p^(kp+B); output precision kp.
    """
    size = len(x_vals)
    if any(c % p for c in x_vals):
        raise OutOfDomain("exp requires every coefficient in pZ_p")
    out_mod = p ** (kp + B)
    acc = [0] * size
    acc[0] = p ** B % out_mod
    m_stop = 1 + -((kp + B) * (p - 1) // -(p - 2))
    fact_v = sum(m_stop // p**i for i in range(1, 40) if p**i <= m_stop)
    V = kp + B + fact_v + 4  # validity: term numerators correct mod p^V
    # term value = nums / p^scale; each strip of a p costs one validity digit
    nums = [1] + [0] * (size - 1)
    scale = 0
    for m in range(1, m_stop + 1):
        nums = mul(nums, x_vals, p**V)
        v = vp(m, p, V)
        scale += v
        inv = pow(m // p**v, -1, p**V)
        nums = [(c * inv) % p**V for c in nums]
        while scale > 0 and all(c % p == 0 for c in nums):
            nums = [c // p for c in nums]
            V -= 1
            scale -= 1
        if scale > B:
            raise PrecisionExhausted("exp term exceeds the denominator budget")
        if V - scale < kp + B:
            raise PrecisionExhausted("exp ran out of working digits")
        lift = p ** (B - scale)
        for i, c in enumerate(nums):
            acc[i] = (acc[i] + c * lift) % out_mod
    return acc


def _geom_inv_flat(w, mul, p, K, size, cap_hint=0):
    """(1 + w)^{-1} = sum (-w)^k for w in the maximal ideal; value-level mod p^K."""
    mod = p ** K
    acc = [0] * size
    acc[0] = 1
    power = [c % mod for c in w]
    k = 0
    cap = _term_cap(p, K, max(size, cap_hint))
    while any(power):
        k += 1
        if k > cap:
            raise PrecisionExhausted("geometric inverse did not terminate")
        sign = 1 if k % 2 == 0 else -1
        for i, c in enumerate(power):
            acc[i] = (acc[i] + sign * c) % mod
        power = mul(power, w, mod)
    return acc


def series_divide_exact(num: TruncatedSeries, den: TruncatedSeries):
    """Solve den * q = num over the truncated ring; None when no q exists.

    The solution, when den is not a unit, is only determined up to the
    truncation ideal; any representative is returned.  Precision of q is the
    joint precision minus the p-valuation consumed by the pivots (bounded by
    the reported known_precision rule below).
    """
    if num.budget != den.budget:
        raise BudgetMismatch("operands built with different budgets")
    b = num.budget
    kp = min(num.known_precision, den.known_precision)
    K = kp + b.B
    s = b.scale()
    if not den.is_integral or not num.is_integral:
        raise OutOfDomain("exact division works on integral operands")
    dvals = [(c // s) for c in den.nums]
    nvals = [(c // s) for c in num.nums]
    n = b.n
    # Toeplitz system: sum_j dvals[i-j] q_j = nvals[i]
    A = [[(dvals[i - j] if 0 <= i - j < n else 0) for j in range(n)] for i in range(n)]
    sol = solve_mod_prime_power(A, nvals, b.p, kp)
    if sol is None:
        return None
    return TruncatedSeries.from_coeffs(b, sol, kp)


class LocalizedElement:
    """Fraction num/den of truncated series with den not in p*Lambda."""

    __slots__ = ("num", "den")

    def __init__(self, num: TruncatedSeries, den: TruncatedSeries):
        if num.budget != den.budget:
            raise BudgetMismatch("numerator and denominator budgets differ")
        if not den.is_s_invertible():
            raise NotSInvertible("denominator lies in p*Lambda")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *a):
        raise AttributeError("LocalizedElement is immutable")

    @classmethod
    def integral(cls, x: TruncatedSeries):
        return cls(x, TruncatedSeries.one(x.budget, x.known_precision))

    def __add__(self, other):
        return LocalizedElement(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other):
        return LocalizedElement(self.num * other.den - other.num * self.den, self.den * other.den)

    def __mul__(self, other):
        return LocalizedElement(self.num * other.num, self.den * other.den)

    def invert(self):
        if not self.num.is_s_invertible():
            raise NotSInvertible("numerator lies in p*Lambda")
        return LocalizedElement(self.den, self.num)

    def equal_at_precision(self, other) -> bool:
        return (self.num * other.den).equal_at_precision(other.num * self.den)

    def as_integral(self):
        """Return an integral representative, or None when den does not divide num."""
        return series_divide_exact(self.num, self.den)

    def __repr__(self):
        return f"<loc ({self.num!r}) / ({self.den!r})>"


class CyclotomicValue:
    """Element of Z_p[zeta_p] = Z_p[X]/(1 + X + ... + X^(p-1)), coords mod p^M."""

    __slots__ = ("p", "M", "coords")

    def __init__(self, p: int, M: int, coords):
        mod = p ** M
        coords = list(coords)[: p - 1]
        coords += [0] * (p - 1 - len(coords))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "coords", tuple(c % mod for c in coords))

    def __setattr__(self, *a):
        raise AttributeError("CyclotomicValue is immutable")

    @classmethod
    def from_integer(cls, p, M, c):
        return cls(p, M, [c])

    @classmethod
    def zeta_power(cls, p, M, k):
        k %= p
        if k < p - 1:
            coords = [0] * (p - 1)
            coords[k] = 1
            return cls(p, M, coords)
        return cls(p, M, [-1] * (p - 1))

    def _check(self, other):
        if self.p != other.p or self.M != other.M:
            raise BudgetMismatch("cyclotomic operands disagree on (p, M)")

    def __add__(self, other):
        self._check(other)
        return CyclotomicValue(self.p, self.M, [a + b for a, b in zip(self.coords, other.coords)])

    def __sub__(self, other):
        self._check(other)
        return CyclotomicValue(self.p, self.M, [a - b for a, b in zip(self.coords, other.coords)])

    def __neg__(self):
        return CyclotomicValue(self.p, self.M, [-a for a in self.coords])

    def __mul__(self, other):
        self._check(other)
        p = self.p
        # X is a primitive p-th root of unity: X^p = 1 and
        # X^(p-1) = -(1 + X + ... + X^(p-2)).
        raw = [0] * p
        for i, a in enumerate(self.coords):
            if a:
                for j, b in enumerate(other.coords):
                    if b:
                        raw[(i + j) % p] += a * b
        top = raw[p - 1]
        out = [raw[k] - top for k in range(p - 1)]
        return CyclotomicValue(p, self.M, out)

    @property
    def is_zero(self):
        return all(c == 0 for c in self.coords)

    def is_unit(self) -> bool:
        """Unit iff nonzero in the residue field, i.e. image at X=1 is a p-unit."""
        return sum(self.coords) % self.p != 0

    def invert(self):
        p, M = self.p, self.M
        d = p - 1
        # Solve (self) * y = 1 via the multiplication matrix.
        cols = []
        for j in range(d):
            basis = CyclotomicValue.zeta_power(p, M, j)
            cols.append((self * basis).coords)
        A = [[cols[j][i] for j in range(d)] for i in range(d)]
        b = [1] + [0] * (d - 1)
        sol = solve_mod_prime_power(A, b, p, M)
        if sol is None:
            raise NotAUnit("cyclotomic value is not invertible at this precision")
        return CyclotomicValue(p, M, sol)

    def __eq__(self, other):
        return (
            isinstance(other, CyclotomicValue)
            and (self.p, self.M) == (other.p, other.M)
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((self.p, self.M, self.coords))

    def __repr__(self):
        return f"<cyc {list(self.coords)} mod {self.p}^{self.M}>"


def evaluate_series_cyclotomic(series: TruncatedSeries, t: CyclotomicValue) -> CyclotomicValue:
    """Evaluate an integral series at T = t with t in the maximal ideal.

    The reliable precision of the result is limited by the T-truncation; the
    caller is responsible for interpreting it at the budget's M.
    """
    b = series.budget
    if not series.is_integral:
        raise OutOfDomain("evaluation requires an integral series")
    s = b.scale()
    acc = CyclotomicValue(t.p, t.M, [])
    power = CyclotomicValue.from_integer(t.p, t.M, 1)
    for i in range(b.n):
        c = (series.nums[i] // s) % (t.p ** t.M)
        if c:
            acc = acc + CyclotomicValue(t.p, t.M, [c * x for x in power.coords])
        power = power * t
    return acc


INFINITY = _INFINITY
