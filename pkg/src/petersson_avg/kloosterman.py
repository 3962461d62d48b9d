"""Kloosterman sums S(m, n; c), the Weil bound, and the character-twisted sums

    S(c) = sum_{n >= 1} chi(n) exp(-2 pi n / A) S(m, n; c)

computed by direct truncated summation and by resumming the n-series over
residues (a geometric series in eps_y = 2 pi (-1/A + i y / c)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .arith import divisor_count, divisor_count_of_multiples, euler_phi, unit_inverse_table
from .special import divisor_dirichlet_tail

if TYPE_CHECKING:
    from .petersson import AveragingParams

KLOOSTERMAN_CACHE_SIZE = 1 << 20
DEFAULT_REL_TOL = 1e-18


class KloostermanKey(NamedTuple):
    m_red: int
    n_red: int
    c: int

    @classmethod
    def normalized(cls, m: int, n: int, c: int) -> KloostermanKey:
        """Reduce mod c and order the pair; S(m, n; c) = S(n, m; c)."""
        if c < 1:
            raise ValueError(f"modulus c must be >= 1, got {c}")
        a, b = m % c, n % c
        return cls(min(a, b), max(a, b), c)


@lru_cache(maxsize=64)
def _cos_table(c: int) -> np.ndarray:
    t = np.cos(2 * np.pi * np.arange(c) / c)
    t.setflags(write=False)
    return t


@lru_cache(maxsize=KLOOSTERMAN_CACHE_SIZE)
def _kloosterman_cached(key: KloostermanKey) -> float:
    m, n, c = key
    if c == 1:
        return 1.0
    x, xinv = unit_inverse_table(c)
    idx = (m * x + n * xinv) % c
    return math.fsum(_cos_table(c)[idx])


def kloosterman_sum(m: int, n: int, c: int) -> float:
    """S(m, n; c) = sum over units x of cos(2 pi (m x + n x^-1) / c); S(m, n; 1) = 1."""
    return _kloosterman_cached(KloostermanKey.normalized(m, n, c))


@lru_cache(maxsize=48)
def kloosterman_row(m: int, c: int) -> np.ndarray:
    """S(m, k; c) for k = 0..c-1 as one FFT of y -> e(m y^-1 / c) over the units."""
    if c == 1:
        row = np.ones(1)
    else:
        y, yinv = unit_inverse_table(c)
        g = np.zeros(c, dtype=np.complex128)
        phase = 2 * np.pi * ((m % c) * yinv % c) / c
        g[y] = np.cos(phase) + 1j * np.sin(phase)
        row = np.fft.ifft(g).real * c
    row.setflags(write=False)
    return row


def weil_bound(m: int, n: int, c: int) -> float:
    """(m, n, c)^(1/2) d(c) c^(1/2)."""
    g = math.gcd(math.gcd(m, n), c)
    return divisor_count(c) * math.sqrt(g * c)


# ---------------------------------------------------------------- twisted sums


@dataclass(frozen=True)
class TwistedSumValue:
    c: int
    value: complex
    method: str  # "direct" | "closed_form"
    tail_radius: float = 0.0


def default_n_max(A: float, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Smallest n with exp(-2 pi n / A) < rel_tol."""
    return max(1, math.ceil(A * math.log(1.0 / rel_tol) / (2 * math.pi)))


def geometric_tail(A: float, start: int) -> float:
    """sum_{n >= start} exp(-2 pi n / A)."""
    return math.exp(-2 * math.pi * start / A) / -math.expm1(-2 * math.pi / A)


def _check_c(c: int, params: AveragingParams) -> None:
    if c < 1 or c % params.N:
        raise ValueError(f"c = {c} is not a positive multiple of N = {params.N}")


def twisted_sum_direct(c: int, params: AveragingParams, n_max: int | None = None) -> TwistedSumValue:
    """Truncated sum over n <= n_max, with the Weil bound times the exact geometric tail."""
    _check_c(c, params)
    A = params.A
    if n_max is None:
        n_max = default_n_max(A)
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    chi = params.chi
    if n_max == 0:
        value = 0j
    else:
        n = np.arange(1, n_max + 1)
        terms = chi.values[n % chi.modulus] * np.exp(-2 * np.pi * n / A) * kloosterman_row(params.m, c)[n % c]
        value = complex(np.sum(terms))
    tail = math.sqrt(math.gcd(params.m, c) * c) * divisor_count(c) * geometric_tail(A, n_max + 1)
    return TwistedSumValue(c, value, "direct", tail)


def twisted_sum_closed(c: int, params: AveragingParams) -> TwistedSumValue:
    """Exact resummation over residues:

        S(c) = sum_{x unit} e(m x / c) (1 - e^{q eps_y})^-1 sum_{a=1}^q chi(a) e^{a eps_y},  y = x^-1.
    """
    _check_c(c, params)
    q = params.q
    if params.N_divides_q:
        raise ValueError(f"N = {params.N} divides q = {q}: the resummation denominator vanishes")
    A = params.A
    x, y = unit_inverse_table(c)
    damp = -2 * np.pi / A
    # q * eps_y reduced so that its imaginary part lies in [-pi, pi]
    f = (q * y) % c
    f = np.where(2 * f > c, f - c, f)
    qeps = q * damp + 2j * np.pi * f / c
    denom = -np.expm1(qeps)
    if np.min(np.abs(denom)) < 1e-15:
        raise ArithmeticError("divergent geometric resummation: |1 - e^{q eps_y}| < 1e-15")
    inner = np.zeros(len(y), dtype=np.complex128)
    chi_vals = params.chi.values
    for a in range(1, q + 1):
        ca = chi_vals[a % q]
        if ca == 0:
            continue
        ph = 2 * np.pi * ((a * y) % c) / c
        inner += ca * math.exp(a * damp) * (np.cos(ph) + 1j * np.sin(ph))
    mph = 2 * np.pi * ((params.m % c) * x % c) / c
    value = complex(np.sum((np.cos(mph) + 1j * np.sin(mph)) * inner / denom))
    return TwistedSumValue(c, value, "closed_form", 0.0)


def _small_range(c, params: AveragingParams):
    return (2 / math.pi) * euler_phi(params.q) * c * np.log(c)


def twisted_sum_bounds(c: int, params: AveragingParams) -> tuple[float, float]:
    """(2/pi) phi(q) c log c and (1/6) A m^(1/2) c^(1/2) d(c), valid for c > 400."""
    _check_c(c, params)
    if c <= 400:
        raise ValueError(f"the twisted-sum bounds are derived for c > 400, got c = {c}")
    small = float(_small_range(c, params))
    large = params.A / 6 * math.sqrt(params.m * c) * divisor_count(c)
    return small, large


# ---------------------------------------------------------------- weighted c-tails

# largest b for which d(N b) is tabulated when summing the min-branch structure
MAX_BRANCH_B = 1 << 22


@dataclass(frozen=True)
class TwistedTail:
    """Upper bound for sum_{b > b_from} c^-2 |S(c)|, c = N b, split at ``b_split``.

    ``finite`` covers b_from < b <= b_split term by term; ``remainder`` bounds the
    rest through d(N b) <= d(N) d(b) and the zeta(3/2)^2 difference.
    """

    b_from: int
    b_split: int
    finite: float
    remainder: float

    @property
    def total(self) -> float:
        return self.finite + self.remainder


def branch_split(params: AveragingParams) -> int:
    """A b beyond which the large-range branch is (mostly) the smaller one."""
    N, m, q = params.N, params.m, params.q
    A6 = params.A / 6
    b = 1 << 10
    while b < MAX_BRANCH_B:
        bb = np.arange(b // 2 + 1, b + 1)
        c = N * bb.astype(np.float64)
        d = divisor_count_of_multiples(N, b)[b // 2 :]
        large = A6 * np.sqrt(m * c) * d
        small = (2 / math.pi) * euler_phi(q) * c * np.log(c)
        if np.mean(large < small) > 0.9:
            break
        b *= 2
    return b


def min_branch_terms(params: AveragingParams, b_hi: int, geometric_factor: float) -> np.ndarray:
    """min(small-range, large-range) / c^2 for b = 1..b_hi, with the large branch scaled by
    ``geometric_factor`` in place of A/6 (pass A/6 for the stated bound)."""
    N, m = params.N, params.m
    c = N * np.arange(1, b_hi + 1, dtype=np.float64)
    d = divisor_count_of_multiples(N, b_hi)
    large = geometric_factor * np.sqrt(m * c) * d
    if not params.small_range_valid:
        return large / (c * c)
    small = _small_range(c, params)
    return np.minimum(small, large) / (c * c)


def twisted_tail(params: AveragingParams, b_from: int, geometric_factor: float | None = None,
                 b_split: int | None = None) -> TwistedTail:
    """Rigorous bound on sum_{b > b_from} c^-2 |S(c)| (requires the theorem hypotheses).

    The small-range branch needs c > 400, N not dividing q and A >= 30 q; with
    ``geometric_factor`` defaulting to the exact (1 - e^{-2 pi / A})^-1 <= A / 6
    every term sits below the matching term of the stated proposition bound.
    """
    if geometric_factor is None:
        geometric_factor = 1.0 / -math.expm1(-2 * math.pi / params.A)
    if b_split is None:
        b_split = branch_split(params)
    b_split = max(b_split, b_from)
    if b_split > b_from:
        terms = min_branch_terms(params, b_split, geometric_factor)[b_from:]
        if params.small_range_valid and params.N * (b_from + 1) <= 400:
            # small-range branch unavailable at c <= 400
            c = params.N * np.arange(b_from + 1, b_split + 1, dtype=np.float64)
            d = divisor_count_of_multiples(params.N, b_split)[b_from:]
            low = c <= 400
            terms = terms.copy()
            terms[low] = (geometric_factor * np.sqrt(params.m * c) * d / (c * c))[low]
        finite = math.fsum(terms) * (1 + 1e-12)
    else:
        finite = 0.0
    N = params.N
    rem = geometric_factor * math.sqrt(params.m) * N**-1.5 * divisor_count(N) * divisor_dirichlet_tail(1.5, b_split)
    return TwistedTail(b_from, b_split, finite, rem)
