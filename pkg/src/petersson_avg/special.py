"""Special functions with controlled error.

J1 is evaluated piecewise: ascending series (x <= 8), Miller backward
recurrence (8 < x <= 25) and the Hankel expansion (x > 25).  The series alone
loses about six digits near x = 18, which would break the 1e-12 contract, hence
the middle band.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .arith import divisor_count_table

J1_MAX_ARG = 1.0e6
_SERIES_MAX = 8.0
_MILLER_MAX = 25.0


@dataclass(frozen=True)
class Enclosure:
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not self.lower <= self.upper:
            raise ValueError(f"empty enclosure [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


# ---------------------------------------------------------------- Bessel J1


def _check_j1_domain(x: np.ndarray) -> None:
    if x.size and (np.nanmin(x) < 0 or not np.all(np.isfinite(x)) or x.max() > J1_MAX_ARG):
        raise ValueError(f"bessel_j1 needs 0 <= x <= {J1_MAX_ARG:g}")


def _series_terms_needed(xmax: float) -> int:
    h = 0.5 * xmax
    term, k = h, 0
    while k < 2 or term > 1e-18 * max(h, 1e-300) or k < h:
        k += 1
        term *= h * h / (k * (k + 1))
        if term == 0.0:
            break
    return k + 1


def _j1_series(x: np.ndarray) -> np.ndarray:
    if x.size == 0:
        return np.zeros(0)
    q = -0.25 * x * x
    term = 0.5 * x
    total = term.copy()
    for k in range(1, _series_terms_needed(float(x.max()))):
        term = term * q / (k * (k + 1))
        total += term
    return total


def _j1_miller(x: np.ndarray) -> np.ndarray:
    if x.size == 0:
        return np.zeros(0)
    xmax = float(x.max())
    top = 2 * int((xmax + 30.0 + 4.0 * math.sqrt(xmax)) / 2) + 2
    inv = 2.0 / x
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-30)
    norm = cur.copy()  # top order is even
    j1 = np.zeros_like(x)
    for k in range(top, 0, -1):
        prev = k * inv * cur - nxt  # J_{k-1}
        nxt, cur = cur, prev
        if k - 1 == 1:
            j1 = cur.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += cur
        big = np.abs(cur) > 1e250
        if big.any():
            s = np.where(big, 1e-250, 1.0)
            cur *= s
            nxt *= s
            norm *= s
            j1 *= s
    norm = 2.0 * norm + cur  # J0 + 2 * sum of even orders
    return j1 / norm


def _hankel_coefficients(limit: int = 60) -> list[float]:
    mu = 4.0
    out = [1.0]
    a = 1.0
    for k in range(1, limit):
        a *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
        out.append(a)
    return out


_HANKEL = _hankel_coefficients()


def _j1_hankel(x: np.ndarray) -> np.ndarray:
    if x.size == 0:
        return np.zeros(0)
    # First omitted term bounds the remainder for real x once 2k > nu - 1/2.
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    inv = 1.0 / x
    active = np.ones(x.shape, dtype=bool)
    prev_mag = np.full_like(x, np.inf)
    for k, a in enumerate(_HANKEL):
        mag = np.abs(a) * inv**k
        active &= (mag < prev_mag) & (prev_mag > 1e-18)
        if not active.any():
            break
        val = np.where(active, a * inv**k, 0.0)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * val
        else:
            q += sign * val
        prev_mag = mag
    s, c = np.sin(x), np.cos(x)
    # cos(x - 3pi/4) and sin(x - 3pi/4) without reducing x - 3pi/4 in floating point
    cos_chi = (s - c) / math.sqrt(2.0)
    sin_chi = -(s + c) / math.sqrt(2.0)
    return np.sqrt(2.0 / (math.pi * x)) * (p * cos_chi - q * sin_chi)


def bessel_j1_array(x) -> np.ndarray:
    """Vectorized J1 on an array of arguments in [0, 1e6]."""
    x = np.asarray(x, dtype=np.float64)
    _check_j1_domain(x)
    out = np.empty_like(x)
    lo = x <= _SERIES_MAX
    hi = x > _MILLER_MAX
    mid = ~lo & ~hi
    out[lo] = _j1_series(x[lo])
    out[mid] = _j1_miller(x[mid])
    out[hi] = _j1_hankel(x[hi])
    return out


def bessel_j1_taylor_remainder(x) -> np.ndarray:
    """J1(x) - x/2 on an array, summed from the x^3 term up where x <= 8 so that
    small arguments keep full relative accuracy."""
    x = np.asarray(x, dtype=np.float64)
    _check_j1_domain(x)
    out = np.empty_like(x)
    lo = x <= _SERIES_MAX
    xl = x[lo]
    if xl.size:
        q = -0.25 * xl * xl
        term = 0.5 * xl * q / 2.0
        total = term.copy()
        for k in range(2, _series_terms_needed(float(xl.max()))):
            term = term * q / (k * (k + 1))
            total += term
        out[lo] = total
    xh = x[~lo]
    out[~lo] = bessel_j1_array(xh) - 0.5 * xh
    return out


def bessel_j1(x: float) -> float:
    """J1(x) for 0 <= x <= 1e6, absolute error below 1e-12."""
    x = float(x)
    if x < 0 or x > J1_MAX_ARG or not math.isfinite(x):
        raise ValueError(f"bessel_j1 needs 0 <= x <= {J1_MAX_ARG:g}, got {x}")
    if x <= _SERIES_MAX:
        # scalar path: exact-rounded accumulation of the series terms
        q = -0.25 * x * x
        term = 0.5 * x
        terms = [term]
        for k in range(1, _series_terms_needed(x)):
            term *= q / (k * (k + 1))
            terms.append(term)
        return math.fsum(terms)
    return float(bessel_j1_array(np.array([x]))[0])


def bessel_j1_oracle(x: float, tol: float = 1e-12) -> float:
    """J1 from Bessel's integral (1/pi) int_0^pi cos(t - x sin t) dt by adaptive quadrature.

    Independent of :func:`bessel_j1`; raises RuntimeError when QUADPACK's error
    estimate stays above ``tol``.
    """
    if x < 0 or tol <= 0:
        raise ValueError("need x >= 0 and tol > 0")
    limit = 200 + int(4 * x)
    val, err = integrate.quad(
        lambda t: math.cos(t - x * math.sin(t)),
        0.0,
        math.pi,
        epsabs=0.25 * tol * math.pi,
        epsrel=0.0,
        limit=limit,
    )
    if not err <= tol * math.pi:
        raise RuntimeError(f"quadrature did not reach tol={tol:g} at x={x:g} (est. {err:g})")
    return val / math.pi


# ---------------------------------------------------------------- zeta


def _power_sum(s: float, B: int, chunk: int = 1 << 22) -> tuple[float, float]:
    """(sum_{n<=B} n**-s, rounding allowance)."""
    parts = []
    for start in range(1, B + 1, chunk):
        n = np.arange(start, min(start + chunk, B + 1), dtype=np.float64)
        parts.append(float(np.sum(n ** (-s))))
    total = math.fsum(parts)
    # pow: a few ulp per term; pairwise sum: log2(chunk) ulp of the chunk sum
    return total, 32 * np.finfo(float).eps * total


def zeta_enclosure(s: float, tol: float) -> Enclosure:
    """Rigorous bracket of zeta(s), s > 1, of width <= tol.

    With f(x) = x**-s convex and decreasing, the tail beyond B obeys
    int_B^inf f - f(B)/2 <= sum_{n>B} f(n) <= int_{B+1/2}^inf f.
    """
    if s <= 1:
        raise ValueError(f"zeta_enclosure needs s > 1, got {s}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    # bracket width is about -f'(B)/8 = s * B**(-s-1) / 8
    B = 16
    while s * B ** (-s - 1) / 8 > 0.5 * tol:
        B *= 2
    partial, pad = _power_sum(s, B)
    if pad > 0.25 * tol:
        raise ValueError(f"tolerance {tol:g} below floating-point resolution")
    lower = partial + B ** (1 - s) / (s - 1) - 0.5 * B ** (-s) - pad
    upper = partial + (B + 0.5) ** (1 - s) / (s - 1) + pad
    enc = Enclosure(float(lower), float(upper))
    if enc.width > tol:
        raise RuntimeError(f"zeta enclosure width {enc.width:g} exceeds tol {tol:g}")
    return enc


_ZETA_TOL = 1e-12
_zeta_memo: dict[float, Enclosure] = {}
_zeta_lock = threading.Lock()


def zeta_constant(s: float) -> Enclosure:
    """Process-wide memoized zeta(s) enclosure at width 1e-12."""
    enc = _zeta_memo.get(s)
    if enc is None:
        with _zeta_lock:
            enc = _zeta_memo.get(s)
            if enc is None:
                enc = zeta_enclosure(s, _ZETA_TOL)
                _zeta_memo[s] = enc
    return enc


def zeta_upper(s: float) -> float:
    return zeta_constant(s).upper


# ---------------------------------------------------------------- |1 - e^z|


def _expm1_complex(z: complex) -> complex:
    if abs(z) < 1e-3:
        # five Taylor terms leave a relative error below |z|**5 / 720
        return z * (1 + z / 2 * (1 + z / 3 * (1 + z / 4 * (1 + z / 5))))
    return complex(np.expm1(z))


def one_minus_exp_ratio(z: complex) -> float:
    """|1 - e^z| / |z| for z != 0."""
    z = complex(z)
    if z == 0:
        raise ValueError("one_minus_exp_ratio is undefined at z = 0")
    return abs(_expm1_complex(z)) / abs(z)


@lru_cache(maxsize=64)
def divisor_dirichlet_tail(s: float, B: int) -> float:
    """Upper bound for sum_{b > B} d(b) b**-s, as zeta(s)**2 minus the partial sum."""
    if B < 1:
        return zeta_upper(s) ** 2
    d = divisor_count_table(B)[1:]
    partial = math.fsum(d * np.arange(1, B + 1, dtype=np.float64) ** (-s))
    pad = 8 * np.finfo(float).eps * partial
    return max(zeta_upper(s) ** 2 - partial + pad, 0.0)
