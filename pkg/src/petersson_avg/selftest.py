"""Invariant suite behind ``avg selftest``; fixed seeds, runs in a few seconds."""

from __future__ import annotations

import math
import random

import numpy as np

from .bounds import PASS, verify_theorem
from .characters import character, enumerate_characters, principal_character
from .kloosterman import kloosterman_sum, twisted_sum_closed, twisted_sum_direct, weil_bound
from .petersson import AveragingParams, inner_product, inner_product_bound
from .special import bessel_j1, bessel_j1_oracle, one_minus_exp_ratio, zeta_enclosure


def _weil(rng: random.Random):
    worst = -math.inf
    for _ in range(400):
        m, n, c = rng.randint(1, 20), rng.randint(1, 20), rng.randint(1, 300)
        worst = max(worst, abs(kloosterman_sum(m, n, c)) - weil_bound(m, n, c))
    return worst <= 1e-8, f"max |S| - Weil = {worst:.3g} over 400 random triples"


def _symmetry(rng: random.Random):
    ok = True
    for _ in range(200):
        m, n, c = rng.randint(-50, 50), rng.randint(-50, 50), rng.randint(1, 200)
        ok &= kloosterman_sum(m, n, c) == kloosterman_sum(n, m, c) == kloosterman_sum(m + c, n - c, c)
    return ok, "S(m,n;c) = S(n,m;c) = S(m+c,n-c;c) exactly on 200 triples"


def _bessel(rng: random.Random):
    xs = [rng.uniform(0, 200) for _ in range(60)]
    err = max(abs(bessel_j1(x) - bessel_j1_oracle(x, 1e-12)) for x in xs)
    return err <= 1e-10, f"max |J1 - quadrature| = {err:.3g} on 60 points"


def _taylor(rng: random.Random):
    a = np.array([rng.uniform(1e-6, 20) for _ in range(500)])
    viol = max(abs(bessel_j1(x) - x / 2) - x**3 / 16 for x in a)
    return viol <= 0, "|J1(a) - a/2| <= a^3/16 on 500 points"


def _ratio(rng: random.Random):
    vals = [one_minus_exp_ratio(complex(rng.uniform(-2 * math.pi / 30, 0), rng.uniform(-math.pi, math.pi)))
            for _ in range(500)]
    return 0.5 <= min(vals) and max(vals) <= 1, f"ratio in [{min(vals):.4f}, {max(vals):.4f}]"


def _zeta(rng: random.Random):
    enc = zeta_enclosure(2.0, 1e-9)
    return enc.contains(math.pi**2 / 6), f"zeta(2) in [{enc.lower!r}, {enc.upper!r}]"


def _characters(rng: random.Random):
    ok = True
    for q in (rng.randint(2, 60) for _ in range(5)):
        chars = enumerate_characters(q)
        mat = np.array([c.values for c in chars])
        gram = mat @ mat.conj().T
        ok &= np.allclose(gram, chars[0].phi * np.eye(len(chars)), atol=1e-9)
    return bool(ok), "orthogonality on 5 random moduli"


def _twisted(rng: random.Random):
    p = AveragingParams(401, 1, principal_character(1), 1.0)
    d, c = twisted_sum_direct(802, p), twisted_sum_closed(802, p)
    diff = abs(d.value - c.value)
    return diff <= d.tail_radius + 1e-9, f"direct vs closed at (401, 1, 802): {diff:.3g}"


def _lemma(rng: random.Random):
    ok = True
    for m, n in ((1, 1), (1, 2), (2, 3)):
        r = inner_product(m, n, 401)
        diag = 4 * math.pi * m if m == n else 0.0
        ok &= abs(r.value - diag) <= inner_product_bound(m, n, 401) + r.tail_radius
    return ok, "inner-product bound at N = 401 for three pairs"


def _certificate(rng: random.Random):
    cert = verify_theorem(AveragingParams(400, 1, character(1, 0), 1.0))
    return cert.overall == PASS, f"certificate at N = 400: {cert.overall}, residual {cert.identity_residual:.2e}"


CHECKS = {
    "weil_bound": _weil,
    "kloosterman_symmetry": _symmetry,
    "bessel_oracle": _bessel,
    "bessel_taylor": _taylor,
    "exp_ratio": _ratio,
    "zeta_enclosure": _zeta,
    "character_orthogonality": _characters,
    "twisted_sums": _twisted,
    "inner_product_bound": _lemma,
    "theorem_certificate": _certificate,
}


def run_selftest(seed: int = 0) -> dict[str, tuple[bool, str]]:
    out = {}
    for name, fn in CHECKS.items():
        rng = random.Random(f"{seed}:{name}")
        try:
            ok, msg = fn(rng)
        except Exception as exc:  # a crashing check is a failed check
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        out[name] = (bool(ok), msg)
    return out
