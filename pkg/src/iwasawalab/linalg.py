"""Exact linear algebra modulo a prime power.

Z/p^K is a chain ring, so Gaussian elimination with minimal-valuation
pivoting decides solvability of integer linear systems exactly.  This is the
workhorse behind submodule-membership certificates and exact series division.
"""

from __future__ import annotations


def vp(x: int, p: int, cap: int) -> int:
    """p-adic valuation of x, capped at ``cap`` (and for x == 0)."""
    if x == 0:
        return cap
    v = 0
    while v < cap and x % p == 0:
        x //= p
        v += 1
    return v


def solve_mod_prime_power(A, b, p: int, K: int):
    """Solve A x = b over Z/p^K.  Returns a solution list or None.

    ``A`` is a list of m rows of k integers, ``b`` a list of m integers.
    The returned solution is one representative; free coordinates are 0.
    """
    mod = p ** K
    m = len(A)
    k = len(A[0]) if m else 0
    rows = [[A[i][j] % mod for j in range(k)] + [b[i] % mod] for i in range(m)]
    pivots = []  # (row, col, valuation)
    top = 0
    for col in range(k):
        best, bestv = -1, K
        for i in range(top, m):
            v = vp(rows[i][col], p, K)
            if v < bestv:
                best, bestv = i, v
                if v == 0:
                    break
        if best < 0:
            continue
        rows[top], rows[best] = rows[best], rows[top]
        piv = rows[top][col]
        unit = piv // (p ** bestv)
        inv_unit = pow(unit, -1, mod)
        rows[top] = [(x * inv_unit) % mod for x in rows[top]]
        pv = p ** bestv
        for i in range(top + 1, m):
            if rows[i][col]:
                factor = rows[i][col] // pv
                rows[i] = [(rows[i][j] - factor * rows[top][j]) % mod for j in range(k + 1)]
        pivots.append((top, col, bestv))
        top += 1
        if top == m:
            break
    for i in range(top, m):
        if rows[i][k] % mod:
            return None
    x = [0] * k
    for row, col, v in reversed(pivots):
        rhs = rows[row][k]
        for c in range(col + 1, k):
            rhs -= rows[row][c] * x[c]
        rhs %= mod
        pv = p ** v
        if rhs % pv:
            return None
        x[col] = (rhs // pv) % mod
    # Safety: verify (cheap at these sizes).
    for i in range(m):
        acc = 0
        for j in range(k):
            acc += A[i][j] * x[j]
        if (acc - b[i]) % mod:
            return None
    return x
