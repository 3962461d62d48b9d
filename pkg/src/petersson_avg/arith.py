"""Exact integer arithmetic: gcd-based helpers, divisor counts, totients, unit groups.

Inputs in this project stay at desk scale (well below 1e10), so factorization is
plain trial division over a 2-3-5 wheel.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

Factorization = tuple[tuple[int, int], ...]

_WHEEL = (4, 2, 4, 2, 4, 6, 2, 6)


def _check_positive(n: int, name: str = "n") -> None:
    if n < 1:
        raise ValueError(f"{name} must be a positive integer, got {n}")


@lru_cache(maxsize=1 << 16)
def factorize(n: int) -> Factorization:
    """Return ((p1, e1), (p2, e2), ...) with p1 < p2 < ... and prod p**e == n."""
    _check_positive(n)
    out: list[tuple[int, int]] = []
    for p in (2, 3, 5):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
    p, i = 7, 0
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += _WHEEL[i]
        i = (i + 1) & 7
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def mod_inverse(x: int, c: int) -> int:
    """Inverse of x modulo c via extended Euclid; mod_inverse(x, 1) == 0.

    Raises ValueError when gcd(x, c) > 1.
    """
    _check_positive(c, "c")
    if c == 1:
        return 0
    a, b = x % c, c
    u0, u1 = 1, 0
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        u0, u1 = u1, u0 - q * u1
    if a != 1:
        raise ValueError(f"{x} is not invertible modulo {c} (gcd = {a})")
    return u0 % c


def divisor_count(n: int) -> int:
    _check_positive(n)
    return math.prod(e + 1 for _, e in factorize(n))


def euler_phi(n: int) -> int:
    _check_positive(n)
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def units_mod(c: int) -> list[int]:
    """Ascending units in [1, c]; units_mod(1) == [1] stands for the trivial class."""
    _check_positive(c, "c")
    if c == 1:
        return [1]
    return [x for x in range(1, c) if math.gcd(x, c) == 1]


@lru_cache(maxsize=256)
def unit_inverse_table(c: int) -> tuple[np.ndarray, np.ndarray]:
    """Units x of Z/c (as residues, 1 -> 0 for c == 1) and their inverses, as int64 arrays.

    Inverses come from x**(phi(c) - 1) by vectorized square-and-multiply, which is
    exact while c**2 fits in int64.
    """
    _check_positive(c, "c")
    if c == 1:
        z = np.zeros(1, dtype=np.int64)
        return z, z.copy()
    if c > 3_000_000_000:
        raise ValueError(f"modulus {c} too large for int64 inverse table")
    x = np.arange(1, c, dtype=np.int64)
    for p, _ in factorize(c):
        x = x[x % p != 0]
    e = euler_phi(c) - 1
    result = np.ones_like(x)
    base = x.copy()
    while e:
        if e & 1:
            result = result * base % c
        base = base * base % c
        e >>= 1
    x.setflags(write=False)
    result.setflags(write=False)
    return x, result


def divisor_count_table(limit: int) -> np.ndarray:
    """d(k) for 0 <= k <= limit (entry 0 unused)."""
    size = 1 << max(10, (limit).bit_length())
    return _divisor_count_table(size)[: limit + 1]


@lru_cache(maxsize=4)
def _divisor_count_table(limit: int) -> np.ndarray:
    # hyperbola pairing: each k <= sqrt(n) dividing n accounts for k and n/k
    d = np.zeros(limit + 1, dtype=np.int64)
    r = math.isqrt(limit)
    for k in range(1, r + 1):
        d[k * k :: k] += 2
        d[k * k] -= 1
    d.setflags(write=False)
    return d


def divisor_count_of_multiples(N: int, b_max: int) -> np.ndarray:
    """Float array of d(N*b) for b = 1..b_max."""
    _check_positive(N, "N")
    size = 1 << max(10, b_max.bit_length())
    return _divisor_count_of_multiples(N, size)[:b_max]


@lru_cache(maxsize=16)
def _divisor_count_of_multiples(N: int, size: int) -> np.ndarray:
    out = divisor_count_table(size)[1:] * float(divisor_count(N))
    for p, e in factorize(N):
        v = np.zeros(size, dtype=np.int64)  # v[b-1] = v_p(b)
        pk = p
        while pk <= size:
            v[pk - 1 :: pk] += 1
            pk *= p
        # d(N b) / (d(N) d(b)) picks up (e + f + 1) / ((e + 1)(f + 1)) at p, f = v_p(b)
        out *= (e + v + 1) / ((e + 1) * (v + 1))
    out = np.rint(out)
    out.setflags(write=False)
    return out
