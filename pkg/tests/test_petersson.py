from __future__ import annotations

import math
import random

import pytest
from scipy.special import j1

from petersson_avg.arith import divisor_count
from petersson_avg.characters import character, principal_character
from petersson_avg.kloosterman import kloosterman_sum
from petersson_avg.petersson import (
    AveragingParams,
    SumWithTail,
    TheoremHypothesisError,
    TruncationPolicy,
    approx_average,
    b_functional_bound,
    geometric_side,
    inner_product,
    inner_product_bound,
    main_term,
    sigma_from_rule,
)
from petersson_avg.special import zeta_upper

ZETA_3_2_UPPER = 2.6123754


def _p(N=400, m=1, q=1, idx=0, sigma=1.0):
    return AveragingParams(N, m, character(q, idx), sigma)


def test_params_derived():
    p = _p()
    assert math.isclose(p.A, 400 * math.log(400))
    assert p.M == 400
    p = _p(N=401, q=4, idx=1, sigma=16.0)
    assert p.M == 16 * 401 and p.q == 4 and p.conductor == 4
    assert p.theorem_violations() == []


def test_hypothesis_guard_messages():
    with pytest.raises(TheoremHypothesisError, match="N ≥ 400"):
        _p(N=200).require_theorem_hypotheses()
    with pytest.raises(TheoremHypothesisError, match="σ"):
        _p(q=5, idx=1, sigma=1.0).require_theorem_hypotheses()
    with pytest.raises(ValueError):
        AveragingParams(400, 0, principal_character(1), 1.0)


def test_sigma_rules():
    assert sigma_from_rule("q-squared", 400, 3) == 9.0
    assert math.isclose(sigma_from_rule("max-window", 400, 3), 1200 / math.log(400))
    assert sigma_from_rule("min-window", 400, 1) == 1.0
    assert sigma_from_rule(2.5, 400, 1) == 2.5
    with pytest.raises(ValueError):
        sigma_from_rule("wide", 400, 1)


def test_inner_product_bound_examples():
    ref = 8 * ZETA_3_2_UPPER**2 * math.pi**2 * 400**-1.5 * 15
    assert math.isclose(inner_product_bound(1, 1, 400), ref, rel_tol=1e-7)
    assert math.isclose(inner_product_bound(1, 2, 400), 2 * ref, rel_tol=1e-7)
    assert inner_product_bound(1, 1, 800) < inner_product_bound(1, 1, 400)


def test_inner_product_direct_sum():
    N, B = 400, 16
    r = inner_product(1, 1, N, TruncationPolicy(b_max=B))
    ref = 4 * math.pi - 8 * math.pi**2 * sum(
        kloosterman_sum(1, 1, N * b) * j1(4 * math.pi / (N * b)) / (N * b) for b in range(1, B + 1))
    assert abs(r.value - ref) < 1e-12
    assert abs(r.value - 4 * math.pi) <= inner_product_bound(1, 1, N) + r.tail_radius


def test_inner_product_symmetry_bit_identical():
    pol = TruncationPolicy(b_max=24)
    for m, n in ((1, 2), (3, 7), (5, 11)):
        assert inner_product(m, n, 401, pol) == inner_product(n, m, 401, pol)


def test_inner_product_tail_honesty():
    rng = random.Random(7)
    for _ in range(20):
        m, n, N, B = rng.randint(1, 6), rng.randint(1, 6), rng.randint(400, 1200), rng.randint(2, 16)
        a = inner_product(m, n, N, TruncationPolicy(b_max=B))
        b = inner_product(m, n, N, TruncationPolicy(b_max=2 * B))
        assert abs(a.value - b.value) < a.tail_radius


def test_main_term_examples():
    p = _p()
    assert math.isclose(main_term(p).real, 4 * math.pi * math.exp(-2 * math.pi / (400 * math.log(400))))
    assert abs(main_term(p) - 12.5335) < 1e-4
    assert main_term(_p(m=2, q=4, idx=1, sigma=16.0)) == 0
    assert abs(main_term(_p(sigma=1e12)) - 4 * math.pi) < 1e-9


def test_b_functional_bound():
    p = _p()
    ref = 30 * (400 / 399) ** 3 * math.exp(2 * math.pi) * 400**-0.5 * 15 * 400 ** (-2 * math.pi)
    assert math.isclose(b_functional_bound(p), ref, rel_tol=1e-14)
    assert b_functional_bound(_p(sigma=2.0)) < b_functional_bound(p)
    with pytest.raises(TheoremHypothesisError):
        b_functional_bound(_p(N=399))


def test_geometric_side_matches_scalar_path():
    p = _p(N=401, m=2, q=4, idx=1, sigma=16.0)
    side = geometric_side(p, 300, 5)
    ref = 0
    for n in range(1, 301):
        amn = -8 * math.pi**2 * math.sqrt(2 * n) * sum(
            kloosterman_sum(2, n, 401 * b) * j1(4 * math.pi * math.sqrt(2 * n) / (401 * b)) / (401 * b)
            for b in range(1, 6))
        ref += p.chi(n) * amn / n * math.exp(-2 * math.pi * n / p.A)
    assert abs(side.total + ref) < 1e-13


def test_approx_average_identity_and_enclosure():
    p = _p()
    pol = TruncationPolicy(b_max=16)
    avg = approx_average(p, pol)
    side = geometric_side(p, *pol.resolve(p))
    recombined = main_term(p) - side.E3up + side.E3 - side.E2 - side.E1
    assert abs(avg.value - recombined) <= 1e-9 * (1 + abs(avg.value))
    # the larger index set stays within the smaller one's tail radius
    big = approx_average(p, TruncationPolicy(b_max=64))
    assert abs(big.value - avg.value) <= avg.tail_radius


def test_deviation_shrinks_400_to_800():
    pol = TruncationPolicy(b_max=16, rel_tol=1e-12)
    d400 = abs(approx_average(_p(N=400), pol).value - main_term(_p(N=400)))
    d800 = abs(approx_average(_p(N=800), pol).value - main_term(_p(N=800)))
    assert d800 < d400


def test_workers_do_not_change_results():
    p = _p(N=401, q=3, idx=1, sigma=2.0)
    a = approx_average(p, TruncationPolicy(b_max=12), workers=1)
    b = approx_average(p, TruncationPolicy(b_max=12), workers=4)
    assert a == b


def test_policy_validation():
    with pytest.raises(ValueError):
        TruncationPolicy(mode="lazy")
    with pytest.raises(ValueError):
        TruncationPolicy(b_max=0)
    p = _p(m=3)
    n, b = TruncationPolicy(mode="adaptive", b_max=1).resolve(p)
    assert 400 * b <= 2 * math.pi * math.sqrt(3 * n) < 400 * (b + 1)


def test_sum_with_tail():
    s = SumWithTail(1 + 1j, 0.5)
    assert s.contains(1.2 + 1j) and not s.contains(2)
    assert (s + s).tail_radius == 1.0 and (s - s).value == 0
    with pytest.raises(ValueError):
        SumWithTail(0, -1)
    assert zeta_upper(1.5) >= 2.612375348685488
