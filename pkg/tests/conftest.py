from __future__ import annotations

import cmath
import math

import pytest


def brute_kloosterman(m: int, n: int, c: int) -> complex:
    """Independent S(m, n; c): complex exponentials with Python's built-in modular inverse."""
    if c == 1:
        return 1.0
    total = 0j
    for x in range(1, c):
        if math.gcd(x, c) == 1:
            total += cmath.exp(2j * math.pi * (m * x + n * pow(x, -1, c)) / c)
    return total


@pytest.fixture
def brute_s():
    return brute_kloosterman
