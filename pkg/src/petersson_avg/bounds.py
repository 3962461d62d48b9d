"""Error terms E1, E2, E3, E3up of the averaged value, the closed-form bounds on
them, and the certificates and scans built on top.

Two kinds of check are kept apart:

* identities are tested on one shared finite index set, where they are exact
  rearrangements and hold to rounding;
* magnitudes are tested with enclosures, value plus a rigorous tail radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import divisor_count, euler_phi
from .characters import DirichletCharacter
from .kloosterman import (
    branch_split,
    geometric_tail,
    min_branch_terms,
    twisted_sum_closed,
    twisted_sum_direct,
    twisted_tail,
)
from .petersson import (
    PI,
    AveragingParams,
    SumWithTail,
    TheoremHypothesisError,
    TruncationPolicy,
    _ordered_map,
    approx_average,
    b_functional_bound,
    coverage_b,
    exact_sum,
    geometric_side,
    main_term,
    resolve_workers,
    sigma_from_rule,
    weighted_geometric_tail,
)
from .special import divisor_dirichlet_tail, zeta_upper

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
IDENTITY_RTOL = 1e-9


def verdict(value_abs: float, tail: float, bound: float) -> str:
    """pass iff |v| + tail <= bound; fail iff |v| - tail > bound; otherwise inconclusive."""
    if value_abs + tail <= bound:
        return PASS
    if value_abs - tail > bound:
        return FAIL
    return INCONCLUSIVE


# ---------------------------------------------------------------- error terms


@dataclass(frozen=True)
class ErrorTermReport:
    n_max: int
    b_max: int
    E1: SumWithTail
    E2: SumWithTail
    E3: SumWithTail
    E3up: SumWithTail  # closed-form twisted sums, all n, b <= b_max
    E3up_shared: complex  # same sum on the shared (n_max, b_max) index set
    E2_difference: complex  # E1sum - E2sum on the shared index set
    total: complex
    e1_support_start: float
    e3_support_start: float
    e1_covered: bool
    e3_covered: bool
    c_range_covered: bool

    @property
    def E2sum(self) -> complex:
        return self.E3up_shared - self.E3.value

    @property
    def E1sum(self) -> complex:
        return self.E2sum + self.E2.value

    @property
    def e2_self_check(self) -> float:
        return abs(self.E2.value - self.E2_difference)


def _uncovered_e1(params: AveragingParams, n_max: int, b_max: int) -> float:
    # n <= n_max whose range c <= 2 pi sqrt(mn) reaches beyond N b_max; |S / c| <= 1, |J1| <= 1
    n = np.arange(1, n_max + 1, dtype=np.float64)
    extra = np.floor(2 * PI * np.sqrt(params.m * n) / params.N) - b_max
    mask = extra > 0
    if not mask.any():
        return 0.0
    r = np.exp(-2 * PI * n[mask] / params.A)
    return 8 * PI**2 * math.sqrt(params.m) * math.fsum(r / np.sqrt(n[mask]) * extra[mask])


def _first_uncovered_n(params: AveragingParams, b_max: int) -> int:
    # smallest n with 2 pi sqrt(mn) >= N (b_max + 1)
    t = params.N * (b_max + 1) / (2 * PI)
    return max(1, math.ceil(t * t / params.m))


def error_terms(params: AveragingParams, policy: TruncationPolicy | None = None,
                workers: int | None = None) -> ErrorTermReport:
    policy = policy or TruncationPolicy()
    n0, B = policy.resolve(params)
    N, m, A = params.N, params.m, params.A
    dN = divisor_count(N)
    side = geometric_side(params, n0, B, workers)
    geo_tail = geometric_tail(A, n0 + 1)

    # E1: |S| <= c, |J1| <= 1 and at most 2 pi sqrt(mn) / N admissible c per n
    e1_tail = 16 * PI**3 * m / N * geo_tail + _uncovered_e1(params, n0, B)

    # E3: Weil bound and d(Nb) <= d(N) d(b)
    weil = 16 * PI**3 * m**1.5 * N**-1.5 * dN
    e3_tail = weil * zeta_upper(1.5) ** 2 * geo_tail
    n_unc = _first_uncovered_n(params, B)
    if n_unc <= n0:
        e3_tail += weil * divisor_dirichlet_tail(1.5, B) * (geometric_tail(A, n_unc) - geo_tail)

    # E2: |J1(a) - a/2| <= a^3 / 16 with the Weil bound
    cubic = 32 * PI**5 * m**2.5 * N**-3.5 * dN
    e2_tail = cubic * zeta_upper(3.5) ** 2 * weighted_geometric_tail(A, n0 + 1)
    e2_tail += cubic * (weighted_geometric_tail(A, 1) - weighted_geometric_tail(A, n0 + 1)) \
        * divisor_dirichlet_tail(3.5, B)

    # E3up from the exact resummation over residues
    vals = [twisted_sum_closed(N * b, params).value / (N * b) ** 2 for b in range(1, B + 1)]
    e3up = 16 * PI**3 * m * exact_sum(vals)
    e3up_tail = 16 * PI**3 * m * twisted_tail(params, B).total

    pad = 1e-12
    e1_start = (N / (2 * PI * math.sqrt(m))) ** 2
    return ErrorTermReport(
        n_max=n0,
        b_max=B,
        E1=SumWithTail(side.E1, e1_tail * (1 + pad) + pad * abs(side.E1)),
        E2=SumWithTail(side.E2, e2_tail * (1 + pad) + pad * abs(side.E2)),
        E3=SumWithTail(side.E3, e3_tail * (1 + pad) + pad * abs(side.E3)),
        E3up=SumWithTail(e3up, e3up_tail * (1 + pad) + pad * abs(e3up)),
        E3up_shared=side.E3up,
        E2_difference=(side.total - side.E1) - (side.E3up - side.E3),
        total=side.total,
        e1_support_start=e1_start,
        e3_support_start=e1_start,
        e1_covered=n0 > e1_start,
        e3_covered=n0 >= e1_start,
        c_range_covered=B >= coverage_b(params, n0),
    )


def e3up_direct(params: AveragingParams, b_max: int, n_max: int | None = None) -> SumWithTail:
    """E3up over b <= b_max from truncated direct twisted sums (spot-check path)."""
    vals, tail = [], 0.0
    for b in range(1, b_max + 1):
        c = params.N * b
        t = twisted_sum_direct(c, params, n_max)
        vals.append(t.value / c**2)
        tail += t.tail_radius / c**2
    scale = 16 * PI**3 * params.m
    return SumWithTail(scale * exact_sum(vals), scale * tail)


# ---------------------------------------------------------------- closed-form bounds


@dataclass(frozen=True)
class EU3Bound:
    """16 pi^3 m sum_c min[...], split as a finite part over b <= b_split and a remainder
    bound; the true value lies in [finite, finite + remainder]."""

    b_split: int
    finite: float
    remainder: float
    per_b: np.ndarray = field(repr=False, compare=False)

    @property
    def upper(self) -> float:
        return self.finite + self.remainder

    def small_branch_at(self, c: float, params: AveragingParams) -> float:
        return (2 / PI) * euler_phi(params.q) * math.log(c) / c

    def large_branch_at(self, c: int, params: AveragingParams) -> float:
        return params.A / 6 * math.sqrt(params.m) * c**-1.5 * divisor_count(c)


@dataclass(frozen=True)
class PropositionBounds:
    ab: float
    e1: float
    e2: float
    e3: float
    eu3: EU3Bound
    e2_derivation: float  # the intermediate Weil/zeta(7/2)^2 line, with its d(N) factor

    def as_dict(self) -> dict:
        return {"ab": self.ab, "e1": self.e1, "e2": self.e2, "e3": self.e3,
                "eu3": self.eu3.finite, "eu3_upper": self.eu3.upper, "e2_derivation": self.e2_derivation}


def _check_bound_hypotheses(params: AveragingParams) -> None:
    bad = []
    N, q, s = params.N, params.q, params.sigma
    if N < 400:
        bad.append(f"N ≥ 400 (got N = {N})")
    if not s > q * q / (2 * PI):
        bad.append(f"σ > q²/2π (got σ = {s:g}, q = {q})")
    if params.N_divides_q:
        bad.append(f"N ∤ q (got N = {N}, q = {q})")
    if bad:
        raise TheoremHypothesisError("theorem hypotheses violated: " + "; ".join(bad))


def eu3_bound(params: AveragingParams, b_split: int | None = None) -> EU3Bound:
    if b_split is None:
        b_split = branch_split(params)
    terms = min_branch_terms(params, b_split, params.A / 6)
    scale = 16 * PI**3 * params.m
    finite = scale * math.fsum(terms)
    N = params.N
    rem = scale * params.A / 6 * math.sqrt(params.m) * N**-1.5 * divisor_count(N) * divisor_dirichlet_tail(1.5, b_split)
    return EU3Bound(b_split, finite, rem, scale * terms)


def proposition_bounds(params: AveragingParams) -> PropositionBounds:
    _check_bound_hypotheses(params)
    N, m, s = params.N, params.m, params.sigma
    L = math.log(N)
    decay = math.exp(-N / (2 * PI * m * s * L))
    e1 = 16 / 3 * PI**3 * m**1.5 * s * L * decay
    e2 = 8 / 9 * PI**5 * zeta_upper(3.5) ** 2 * m**2.5 * s * s * N**-1.5 * L * L
    e3 = 8 / 3 * zeta_upper(1.5) ** 2 * PI**3 * s * m**1.5 * N**-0.5 * L * divisor_count(N) * decay
    r = math.exp(-2 * PI / params.A)
    e2_derivation = (32 * PI**5 * m**2.5 * N**-3.5 * divisor_count(N) * zeta_upper(3.5) ** 2
                     * r / (-math.expm1(-2 * PI / params.A)) ** 2)
    return PropositionBounds(b_functional_bound(params), e1, e2, e3, eu3_bound(params), e2_derivation)


# ---------------------------------------------------------------- certificate


@dataclass(frozen=True)
class TermCheck:
    name: str
    value_abs: float
    tail_radius: float
    bound: float
    verdict: str
    compared: float | None = None  # left side actually tested, when not |v| + tail

    @property
    def computed_upper(self) -> float:
        return self.value_abs + self.tail_radius

    @property
    def lhs(self) -> float:
        return self.computed_upper if self.compared is None else self.compared


@dataclass(frozen=True)
class BoundCertificate:
    N: int
    m: int
    q: int
    chi_index: int
    conductor: int
    sigma: float
    A: float
    n_max: int
    b_max: int
    hypotheses: dict
    main_term: complex
    average: SumWithTail
    identity_residual: float
    identity_tolerance: float
    e2_self_check: float
    checks: tuple[TermCheck, ...]
    bounds: PropositionBounds
    L_enclosure: SumWithTail  # disk containing (a_m, L_chi)
    coverage: dict

    @property
    def identity_ok(self) -> bool:
        return self.identity_residual <= self.identity_tolerance

    @property
    def verdicts(self) -> dict[str, str]:
        out = {c.name: c.verdict for c in self.checks}
        out["identity"] = PASS if self.identity_ok else FAIL
        out["e2_self_check"] = PASS if self.e2_self_check <= 1e-9 * (1 + abs(self.main_term)) else FAIL
        return out

    @property
    def overall(self) -> str:
        vs = set(self.verdicts.values())
        if FAIL in vs:
            return FAIL
        if INCONCLUSIVE in vs:
            return INCONCLUSIVE
        return PASS

    @property
    def deviation(self) -> float:
        return abs(self.average.value - self.main_term)


def _eu3_check(report: ErrorTermReport, params: AveragingParams, bound: EU3Bound) -> TermCheck:
    # Beyond b_max each tail term sits below the matching bound term, so comparing
    # |v| + (our tail over b_max < b <= b_split) against the bound over b <= b_split
    # cancels the two unknown remainders and is still sound.
    tail = twisted_tail(params, report.b_max, b_split=bound.b_split)
    scale = 16 * PI**3 * params.m
    v = abs(report.E3up.value)
    matched = v + scale * tail.finite * (1 + 1e-12) + 1e-12 * v
    if matched <= bound.finite:
        outcome = PASS
    elif v - report.E3up.tail_radius > bound.upper:
        outcome = FAIL
    else:
        outcome = INCONCLUSIVE
    return TermCheck("E3up", v, report.E3up.tail_radius, bound.finite, outcome, matched)


def verify_theorem(params: AveragingParams, policy: TruncationPolicy | None = None,
                   workers: int | None = None) -> BoundCertificate:
    params.require_theorem_hypotheses()
    policy = policy or TruncationPolicy()
    report = error_terms(params, policy, workers)
    bounds = proposition_bounds(params)
    avg = approx_average(params, policy, workers)
    mt = main_term(params)

    recombined = mt - report.E3up_shared + report.E3.value - report.E2.value - report.E1.value
    residual = abs(avg.value - recombined)
    tol = IDENTITY_RTOL * (1 + abs(mt))

    checks = (
        TermCheck("E1", abs(report.E1.value), report.E1.tail_radius, bounds.e1,
                  verdict(abs(report.E1.value), report.E1.tail_radius, bounds.e1)),
        TermCheck("E2", abs(report.E2.value), report.E2.tail_radius, bounds.e2,
                  verdict(abs(report.E2.value), report.E2.tail_radius, bounds.e2)),
        TermCheck("E3", abs(report.E3.value), report.E3.tail_radius, bounds.e3,
                  verdict(abs(report.E3.value), report.E3.tail_radius, bounds.e3)),
        _eu3_check(report, params, bounds.eu3),
    )
    enclosure = SumWithTail(avg.value, avg.tail_radius + bounds.ab)
    hyp = {
        "N >= 400": params.N >= 400,
        "N does not divide q": not params.N_divides_q,
        "sigma window": params.q**2 / (2 * PI) <= params.sigma <= params.N * params.q / math.log(params.N),
        "A >= 300": params.A >= 300,
    }
    coverage = {
        "e1_covered": report.e1_covered,
        "e3_covered": report.e3_covered,
        "c_range_covered": report.c_range_covered,
        "e1_support_start": report.e1_support_start,
    }
    return BoundCertificate(
        N=params.N, m=params.m, q=params.q, chi_index=params.chi.index, conductor=params.conductor,
        sigma=params.sigma, A=params.A, n_max=report.n_max, b_max=report.b_max, hypotheses=hyp,
        main_term=mt, average=avg, identity_residual=residual, identity_tolerance=tol,
        e2_self_check=report.e2_self_check, checks=checks, bounds=bounds,
        L_enclosure=enclosure, coverage=coverage,
    )


# ---------------------------------------------------------------- scans


@dataclass(frozen=True)
class ScanRow:
    N: int
    sigma: float
    deviation: float
    tail_radius: float
    theorem_bound_total: float
    N_times_deviation: float
    error: str = ""


def _scan_one(N: int, m: int, chi: DirichletCharacter, sigma_rule, policy: TruncationPolicy) -> ScanRow:
    try:
        sigma = sigma_from_rule(sigma_rule, N, chi.modulus)
        params = AveragingParams(N, m, chi, sigma)
        params.require_theorem_hypotheses()
        avg = approx_average(params, policy, workers=1)
        dev = abs(avg.value - main_term(params))
        pb = proposition_bounds(params)
        total = pb.ab + pb.e1 + pb.e2 + pb.e3 + pb.eu3.upper
        return ScanRow(N, sigma, dev, avg.tail_radius, total, N * dev)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        nan = float("nan")
        return ScanRow(N, nan, nan, nan, nan, nan, f"{type(exc).__name__}: {exc}")


def scan_levels(levels, m: int, chi: DirichletCharacter, sigma_rule="q-squared",
                policy: TruncationPolicy | None = None, workers: int | None = None) -> list[ScanRow]:
    """One row per level, in input order; a failing level records its error and the scan continues."""
    policy = policy or TruncationPolicy(rel_tol=1e-12)
    return _ordered_map(lambda N: _scan_one(N, m, chi, sigma_rule, policy), list(levels), resolve_workers(workers))


def strictly_decreasing(rows: list[ScanRow]) -> bool:
    devs = [r.deviation for r in rows]
    return all(b < a for a, b in zip(devs, devs[1:]))


def band_ratio(rows: list[ScanRow]) -> float:
    v = [r.N_times_deviation for r in rows]
    return max(v) / min(v)


@dataclass(frozen=True)
class FDeltaStep:
    m: int
    distance_lower: float
    distance_upper: float
    status: str  # "certified", "exceeded", "inconclusive"


@dataclass(frozen=True)
class FDeltaResult:
    N: int
    delta: float
    m_star: int
    marker: str  # "range exhausted", "exceeded beyond", "inconclusive beyond"
    trail: tuple[FDeltaStep, ...]


def f_delta_scan(N: int, delta: float, chi: DirichletCharacter, sigma_rule="q-squared",
                 policy: TruncationPolicy | None = None, m_max: int = 10,
                 workers: int | None = None) -> FDeltaResult:
    """Largest m* <= m_max with |(a_m, L_chi) - 4 pi chi(m)| <= delta certified for every m <= m*."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    policy = policy or TruncationPolicy()
    sigma = sigma_from_rule(sigma_rule, N, chi.modulus)
    trail = []
    for m in range(1, m_max + 1):
        params = AveragingParams(N, m, chi, sigma)
        params.require_theorem_hypotheses()
        avg = approx_average(params, policy, workers)
        radius = avg.tail_radius + b_functional_bound(params)
        centre = abs(avg.value - 4 * PI * chi(m))
        lo, hi = max(0.0, centre - radius), centre + radius
        if hi <= delta:
            trail.append(FDeltaStep(m, lo, hi, "certified"))
            continue
        status = "exceeded" if lo > delta else INCONCLUSIVE
        trail.append(FDeltaStep(m, lo, hi, status))
        return FDeltaResult(N, delta, m - 1, f"{status} beyond", tuple(trail))
    return FDeltaResult(N, delta, m_max, "range exhausted", tuple(trail))
