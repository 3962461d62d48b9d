from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from petersson_avg.arith import (
    divisor_count,
    divisor_count_of_multiples,
    divisor_count_table,
    euler_phi,
    factorize,
    mod_inverse,
    unit_inverse_table,
    units_mod,
)


def test_mod_inverse_examples():
    assert mod_inverse(3, 7) == 5
    assert mod_inverse(1, 12) == 1
    assert mod_inverse(5, 1) == 0
    with pytest.raises(ValueError):
        mod_inverse(2, 4)


def test_divisor_count_examples():
    assert divisor_count(1) == 1
    assert divisor_count(12) == 6
    assert divisor_count(400) == 15
    assert divisor_count(400) == sum(1 for d in range(1, 401) if 400 % d == 0)
    with pytest.raises(ValueError):
        divisor_count(0)


def test_euler_phi_examples():
    assert euler_phi(1) == 1
    assert euler_phi(7) == 6
    assert euler_phi(400) == 160 == sum(1 for k in range(1, 401) if math.gcd(k, 400) == 1)
    with pytest.raises(ValueError):
        euler_phi(0)


def test_units_mod_examples():
    assert units_mod(1) == [1]
    assert units_mod(8) == [1, 3, 5, 7]
    assert units_mod(5) == [1, 2, 3, 4]


def test_brute_force_up_to_10000():
    d = [0] * 10001
    for k in range(1, 10001):
        for j in range(k, 10001, k):
            d[j] += 1
    phi = list(range(10001))
    for p in range(2, 10001):
        if phi[p] == p:
            for j in range(p, 10001, p):
                phi[j] -= phi[j] // p
    assert all(divisor_count(n) == d[n] for n in range(1, 10001))
    assert all(euler_phi(n) == phi[n] for n in range(1, 10001))
    table = divisor_count_table(10000)
    assert list(table[1:]) == d[1:]


def test_multiplicativity_random_pairs():
    rng = random.Random(1)
    done = 0
    while done < 1000:
        a, b = rng.randint(1, 1000), rng.randint(1, 1000)
        if math.gcd(a, b) != 1:
            continue
        assert divisor_count(a * b) == divisor_count(a) * divisor_count(b)
        assert euler_phi(a * b) == euler_phi(a) * euler_phi(b)
        done += 1


def test_mod_inverse_round_trip():
    for c in range(1, 501):
        for x in units_mod(c):
            assert (x * mod_inverse(x, c)) % c == 1 % c


@given(st.integers(min_value=1, max_value=10**8))
@settings(max_examples=200, deadline=None)
def test_factorization_invariants(n):
    f = factorize(n)
    assert math.prod(p**e for p, e in f) == n
    primes = [p for p, _ in f]
    assert primes == sorted(set(primes))
    assert all(all(p % k for k in range(2, math.isqrt(p) + 1)) for p in primes if p < 10**6)


def test_unit_inverse_table_matches_pow():
    for c in (1, 2, 9, 400, 997, 1200):
        x, inv = unit_inverse_table(c)
        if c == 1:
            continue
        assert list(x) == units_mod(c)
        assert all(int(i) == pow(int(u), -1, c) for u, i in zip(x, inv))


@pytest.mark.parametrize("N", [400, 401, 997, 1200])
def test_divisor_count_of_multiples(N):
    got = divisor_count_of_multiples(N, 3000)
    assert all(int(got[b - 1]) == divisor_count(N * b) for b in range(1, 3001))
