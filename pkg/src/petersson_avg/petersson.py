"""Geometric side of the Petersson formula for weight 2, level N.

(a_m, a_n) = 4 pi sqrt(mn) delta_{mn} - 8 pi^2 sqrt(mn) sum_{N | c} c^-1 S(m, n; c) J1(4 pi sqrt(mn) / c)

and the averaged value

(a_m, A(x)) = sum_n chi(n) (a_m, a_n) n^-1 exp(-2 pi n / x),  x = A = sigma N log N.

Every finite evaluation is returned as a :class:`SumWithTail`: the true infinite
sum lies within ``tail_radius`` of ``value``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arith import divisor_count
from .characters import DirichletCharacter, conductor
from .kloosterman import (
    DEFAULT_REL_TOL,
    default_n_max,
    geometric_tail,
    kloosterman_row,
    kloosterman_sum,
    twisted_tail,
)
from .special import bessel_j1, bessel_j1_array, bessel_j1_taylor_remainder, divisor_dirichlet_tail, zeta_upper

PI = math.pi
WORKERS_ENV = "AVG_WORKERS"
SCAN_REL_TOL = 1e-12


class TheoremHypothesisError(ValueError):
    """Raised when parameters fall outside the hypotheses of the main estimate."""


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True)
class AveragingParams:
    N: int
    m: int
    chi: DirichletCharacter
    sigma: float

    def __post_init__(self) -> None:
        if self.N < 1 or self.m < 1:
            raise ValueError("N and m must be positive integers")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def q(self) -> int:
        # modulus of chi; every periodicity argument runs mod q
        return self.chi.modulus

    @property
    def conductor(self) -> int:
        return conductor(self.chi)

    @property
    def A(self) -> float:
        return self.sigma * self.N * math.log(self.N)

    @property
    def M(self) -> int:
        return self.q * self.q * self.N

    @property
    def N_divides_q(self) -> bool:
        return self.q % self.N == 0

    @property
    def small_range_valid(self) -> bool:
        """Whether the (2/pi) phi(q) c log c bound on the twisted sums applies."""
        return not self.N_divides_q and self.A >= 30 * self.q

    def theorem_violations(self) -> list[str]:
        q, N = self.q, self.N
        out = []
        if N < 400:
            out.append(f"N ≥ 400 (got N = {N})")
        if self.N_divides_q:
            out.append(f"N ∤ q (got N = {N}, q = {q})")
        lo, hi = q * q / (2 * PI), N * q / math.log(N)
        if not lo <= self.sigma <= hi:
            out.append(f"q²/2π ≤ σ ≤ Nq/log N (got σ = {self.sigma:g}, window [{lo:g}, {hi:g}])")
        return out

    def require_theorem_hypotheses(self) -> None:
        bad = self.theorem_violations()
        if bad:
            raise TheoremHypothesisError("theorem hypotheses violated: " + "; ".join(bad))


SIGMA_RULES = ("q-squared", "max-window", "min-window")


def sigma_from_rule(rule: str | float, N: int, q: int) -> float:
    """Resolve a sigma rule: a number, ``q-squared``, ``max-window`` (N q / log N) or
    ``min-window`` (max(1.01 q^2 / (2 pi), 1))."""
    if isinstance(rule, (int, float)):
        return float(rule)
    if rule == "q-squared":
        return float(q * q)
    if rule == "max-window":
        return N * q / math.log(N)
    if rule == "min-window":
        return max(q * q / (2 * PI) * 1.01, 1.0)
    try:
        return float(rule)
    except ValueError:
        raise ValueError(f"unknown sigma rule {rule!r}; expected a number or one of {SIGMA_RULES}") from None


# ---------------------------------------------------------------- truncation


@dataclass(frozen=True)
class TruncationPolicy:
    """Cutoffs n <= n_max and c = N b with b <= b_max.

    ``shared`` uses exactly these cutoffs everywhere; ``adaptive`` additionally
    raises b_max until every c <= 2 pi sqrt(m n_max) is included.  ``n_max=None``
    derives the cutoff from ``rel_tol``.
    """

    n_max: int | None = None
    b_max: int = 16
    mode: str = "shared"
    rel_tol: float = DEFAULT_REL_TOL

    def __post_init__(self) -> None:
        if self.mode not in ("shared", "adaptive"):
            raise ValueError(f"mode must be 'shared' or 'adaptive', got {self.mode!r}")
        if self.b_max < 1:
            raise ValueError("b_max must be >= 1")
        if self.n_max is not None and self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")

    def resolve(self, params: AveragingParams) -> tuple[int, int]:
        n_max = self.n_max if self.n_max is not None else default_n_max(params.A, self.rel_tol)
        n_max = max(n_max, params.m)
        b_max = self.b_max
        if self.mode == "adaptive":
            b_max = max(b_max, coverage_b(params, n_max))
        return n_max, b_max


def coverage_b(params: AveragingParams, n_max: int) -> int:
    """Largest b with N b <= 2 pi sqrt(m n_max)."""
    return int(2 * PI * math.sqrt(params.m * n_max) / params.N)


@dataclass(frozen=True)
class SumWithTail:
    value: complex
    tail_radius: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", complex(self.value))
        object.__setattr__(self, "tail_radius", float(self.tail_radius))
        if not self.tail_radius >= 0:
            raise ValueError("tail_radius must be non-negative")

    @property
    def abs_upper(self) -> float:
        return abs(self.value) + self.tail_radius

    @property
    def abs_lower(self) -> float:
        return max(0.0, abs(self.value) - self.tail_radius)

    def __add__(self, other: SumWithTail) -> SumWithTail:
        return SumWithTail(self.value + other.value, self.tail_radius + other.tail_radius)

    def __sub__(self, other: SumWithTail) -> SumWithTail:
        return SumWithTail(self.value - other.value, self.tail_radius + other.tail_radius)

    def __neg__(self) -> SumWithTail:
        return SumWithTail(-self.value, self.tail_radius)

    def contains(self, z: complex) -> bool:
        return abs(z - self.value) <= self.tail_radius


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def _ordered_map(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def exact_sum(values) -> complex:
    """Correctly rounded sum of complex numbers; independent of order and grouping."""
    vals = list(values)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


# ---------------------------------------------------------------- inner products


def inner_product(m: int, n: int, N: int, policy: TruncationPolicy | None = None) -> SumWithTail:
    """(a_m, a_n) from the c-sum over c = N b, b <= policy.b_max."""
    if min(m, n, N) < 1:
        raise ValueError("m, n, N must be positive")
    policy = policy or TruncationPolicy()
    B = policy.b_max
    mn = m * n
    arg = 4 * PI * math.sqrt(mn)
    terms = []
    for b in range(1, B + 1):
        c = N * b
        terms.append(kloosterman_sum(m, n, c) * bessel_j1(arg / c) / c)
    value = -8 * PI**2 * math.sqrt(mn) * math.fsum(terms)
    if m == n:
        value += 4 * PI * m
    g = math.gcd(m, n)
    # |J1(a)| <= a/2 and the Weil bound leave 16 pi^3 (m,n)^1/2 mn sum_{b>B} (Nb)^-3/2 d(Nb)
    tail = 16 * PI**3 * math.sqrt(g) * mn * N**-1.5 * divisor_count(N) * divisor_dirichlet_tail(1.5, B)
    return SumWithTail(complex(value), tail * (1 + 1e-12) + 1e-14 * abs(value))


def inner_product_bound(m: int, n: int, N: int) -> float:
    """8 zeta(3/2)^2 pi^2 (m,n)^(1/2) mn N^(-3/2) d(N), with the zeta enclosure's upper end."""
    if min(m, n, N) < 1:
        raise ValueError("m, n, N must be positive")
    return 8 * zeta_upper(1.5) ** 2 * PI**2 * math.sqrt(math.gcd(m, n)) * m * n * N**-1.5 * divisor_count(N)


def main_term(params: AveragingParams) -> complex:
    """4 pi chi(m) exp(-2 pi m / A)."""
    return 4 * PI * params.chi(params.m) * math.exp(-2 * PI * params.m / params.A)


def b_functional_bound(params: AveragingParams) -> float:
    """30 (400/399)^3 e^{2 pi} q^2 m^{3/2} N^{-1/2} d(N) N^{-2 pi sigma / q^2}."""
    N, q, m, s = params.N, params.q, params.m, params.sigma
    if N < 400:
        raise TheoremHypothesisError(f"theorem hypotheses violated: N >= 400 (got N = {N})")
    if not s > q * q / (2 * PI):
        raise TheoremHypothesisError(f"theorem hypotheses violated: σ > q²/2π (got σ = {s:g})")
    return (30 * (400 / 399) ** 3 * math.exp(2 * PI) * q * q * m**1.5 * N**-0.5 * divisor_count(N)
            * N ** (-2 * PI * s / (q * q)))


# ---------------------------------------------------------------- shared-index engine


@dataclass(frozen=True)
class GeometricSide:
    """Finite sums over n <= n_max, b <= b_max (all scaled by 8 pi^2 sqrt(m)).

    ``total`` is the full geometric term, so (a_m, A) = main - total on this index
    set.  The split pieces follow c <= 2 pi sqrt(mn) (E1, E3) versus c > 2 pi sqrt(mn)
    (E2 from J1(a) - a/2, E2sum from a/2); ``E3up`` is the a/2 piece over all c,
    summed independently of the split.
    """

    n_max: int
    b_max: int
    total: complex
    E1: complex
    E2: complex
    E2sum: complex
    E3: complex
    E3up: complex
    per_b_E3up: tuple[complex, ...] = field(repr=False, default=())

    @property
    def E1sum(self) -> complex:
        return self.E2sum + self.E2


def _pieces_for_b(params: AveragingParams, b: int, n: np.ndarray, w: np.ndarray, arg: np.ndarray):
    c = params.N * b
    S = kloosterman_row(params.m, c)[n % c]
    x = arg / c
    J = bessel_j1_array(x)
    t = w * S / c
    half = 0.5 * x
    near = x >= 2.0  # c <= 2 pi sqrt(mn)
    far = ~near
    g = t * J
    lin = t * half
    return (
        complex(np.sum(g)),
        complex(np.sum(g[near])),
        complex(np.sum(t[far] * bessel_j1_taylor_remainder(x[far]))),
        complex(np.sum(lin[far])),
        complex(np.sum(lin[near])),
        complex(np.sum(lin)),
    )


@lru_cache(maxsize=32)
def _geometric_side_cached(params: AveragingParams, n_max: int, b_max: int, workers: int) -> GeometricSide:
    n = np.arange(1, n_max + 1)
    chi = params.chi
    w = chi.values[n % chi.modulus] * np.exp(-2 * PI * n / params.A) / np.sqrt(n)
    arg = 4 * PI * np.sqrt(params.m * n.astype(np.float64))
    rows = _ordered_map(lambda b: _pieces_for_b(params, b, n, w, arg), list(range(1, b_max + 1)), workers)
    scale = 8 * PI**2 * math.sqrt(params.m)
    cols = [scale * exact_sum(r[k] for r in rows) for k in range(6)]
    return GeometricSide(n_max, b_max, *cols, per_b_E3up=tuple(scale * r[5] for r in rows))


def geometric_side(params: AveragingParams, n_max: int, b_max: int, workers: int | None = None) -> GeometricSide:
    # results do not depend on the worker count; keep it out of the cache key
    return _geometric_side_cached(params, n_max, b_max, 1) if resolve_workers(workers) == 1 else \
        _geometric_side_cached.__wrapped__(params, n_max, b_max, resolve_workers(workers))


def weighted_geometric_tail(A: float, start: int) -> float:
    """sum_{n >= start} n exp(-2 pi n / A)."""
    r = math.exp(-2 * PI / A)
    one_minus = -math.expm1(-2 * PI / A)
    return r**start * (start - (start - 1) * r) / one_minus**2


def n_tail_envelope(params: AveragingParams, n_max: int) -> float:
    """Bound for sum_{n > n_max} |chi(n) (a_m, a_n)| n^-1 e^{-2 pi n / A} (needs n_max >= m)."""
    N, m = params.N, params.m
    env = 16 * PI**3 * m**1.5 * N**-1.5 * divisor_count(N) * zeta_upper(1.5) ** 2
    return env * geometric_tail(params.A, n_max + 1)


def c_tail_envelope(params: AveragingParams, n_max: int, b_max: int) -> float:
    """Bound for the discarded c = N b, b > b_max, part of the n <= n_max geometric sum."""
    N, m, A = params.N, params.m, params.A
    dN = divisor_count(N)
    head = geometric_tail(A, 1) - geometric_tail(A, n_max + 1)
    if b_max < coverage_b(params, n_max):
        # some c beyond b_max still have J1 arguments >= 2; fall back to |J1(a)| <= a/2 throughout
        return 16 * PI**3 * m**1.5 * head * N**-1.5 * dN * divisor_dirichlet_tail(1.5, b_max)
    # all discarded c exceed 2 pi sqrt(mn): linear part via the twisted sums, cubic remainder separately
    lin = twisted_tail(params, b_max).total
    lin += math.sqrt(m) * geometric_tail(A, n_max + 1) * N**-1.5 * dN * divisor_dirichlet_tail(1.5, b_max)
    nweight = weighted_geometric_tail(A, 1) - weighted_geometric_tail(A, n_max + 1)
    cubic = 32 * PI**5 * m**2.5 * N**-3.5 * dN * nweight * divisor_dirichlet_tail(3.5, b_max)
    return 16 * PI**3 * m * lin + cubic


def approx_average(params: AveragingParams, policy: TruncationPolicy | None = None,
                   workers: int | None = None) -> SumWithTail:
    """(a_m, A(sigma N log N)) on the policy's index set, with a rigorous tail radius."""
    policy = policy or TruncationPolicy()
    n_max, b_max = policy.resolve(params)
    side = geometric_side(params, n_max, b_max, workers)
    value = main_term(params) - side.total
    tail = n_tail_envelope(params, n_max) + c_tail_envelope(params, n_max, b_max)
    return SumWithTail(value, tail * (1 + 1e-12) + 1e-12 * abs(value))
