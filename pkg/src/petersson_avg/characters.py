"""Dirichlet characters mod q built from the CRT decomposition of (Z/q)^*.

Each character is stored as an integer exponent table: chi(n) = exp(2 pi i e(n) / phi(q)),
with e(n) = -1 marking non-units.  Complex values are produced only at evaluation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .arith import euler_phi, factorize

MAX_MODULUS = 10**6


@dataclass(frozen=True)
class _CyclicFactor:
    order: int
    log: np.ndarray  # discrete log of n mod q in this factor, -1 off the units


def _primitive_root_mod_p(p: int) -> int:
    if p == 2:
        return 1
    rs = [r for r, _ in factorize(p - 1)]
    for g in range(2, p):
        if all(pow(g, (p - 1) // r, p) != 1 for r in rs):
            return g
    raise ArithmeticError(f"no primitive root mod {p}")


def _cyclic_log(modulus: int, gen: int, order: int) -> np.ndarray:
    log = np.full(modulus, -1, dtype=np.int64)
    v = 1
    for j in range(order):
        log[v] = j
        v = v * gen % modulus
    return log


@lru_cache(maxsize=64)
def _group_factors(q: int) -> tuple[_CyclicFactor, ...]:
    """Cyclic factors of (Z/q)^*, ordered by prime; 2^k (k >= 3) gives <-1> x <5>."""
    residues = np.arange(q, dtype=np.int64)
    factors: list[_CyclicFactor] = []
    for p, k in factorize(q) if q > 1 else ():
        pk = p**k
        r = residues % pk
        if p == 2:
            if k == 1:
                continue
            if k == 2:
                factors.append(_CyclicFactor(2, _cyclic_log(4, 3, 2)[r]))
                continue
            half = 2 ** (k - 2)
            t_log = _cyclic_log(pk, 5, half)
            sign = np.full(pk, -1, dtype=np.int64)
            tee = np.full(pk, -1, dtype=np.int64)
            odd = np.arange(1, pk, 2)
            plus = t_log[odd] >= 0
            sign[odd[plus]] = 0
            tee[odd[plus]] = t_log[odd[plus]]
            minus_idx = odd[~plus]
            sign[minus_idx] = 1
            tee[minus_idx] = t_log[(pk - minus_idx) % pk]
            factors.append(_CyclicFactor(2, sign[r]))
            factors.append(_CyclicFactor(half, tee[r]))
            continue
        g = _primitive_root_mod_p(p)
        if k > 1 and pow(g, p - 1, p * p) == 1:
            g += p
        order = pk // p * (p - 1)
        factors.append(_CyclicFactor(order, _cyclic_log(pk, g, order)[r]))
    return tuple(factors)


def _quarter_exact(num: int, den: int) -> complex:
    num %= den
    if (4 * num) % den == 0:
        return (1, 1j, -1, -1j)[4 * num // den]
    ang = 2 * math.pi * num / den
    return complex(math.cos(ang), math.sin(ang))


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    """Character mod ``modulus`` with exponent tuple ``exponents`` (one per cyclic factor)."""

    modulus: int
    index: int
    exponents: tuple[int, ...]

    @cached_property
    def phi(self) -> int:
        return euler_phi(self.modulus)

    @cached_property
    def exponent_table(self) -> np.ndarray:
        """e(n) for n in [0, q): chi(n) = exp(2 pi i e(n) / phi(q)); -1 off the units."""
        q, phi = self.modulus, self.phi
        if q == 1:
            return np.zeros(1, dtype=np.int64)
        e = np.zeros(q, dtype=np.int64)
        unit = np.ones(q, dtype=bool)
        for f, a in zip(_group_factors(q), self.exponents):
            unit &= f.log >= 0
            e += a * np.where(f.log >= 0, f.log, 0) * (phi // f.order)
        # gcd(n, q) > 1 also when a prime with a trivial factor divides n (the 2 in 2 * odd)
        unit &= np.gcd(np.arange(q), q) == 1
        e %= phi
        e[~unit] = -1
        e.setflags(write=False)
        return e

    @cached_property
    def values(self) -> np.ndarray:
        phi = self.phi
        table = {int(k): _quarter_exact(int(k), phi) for k in np.unique(self.exponent_table) if k >= 0}
        out = np.array([table.get(int(k), 0j) for k in self.exponent_table], dtype=np.complex128)
        out.setflags(write=False)
        return out

    @cached_property
    def order(self) -> int:
        e = self.exponent_table
        g = math.gcd(self.phi, *(int(k) for k in np.unique(e[e >= 0])))
        return self.phi // g

    @property
    def is_principal(self) -> bool:
        return not any(self.exponents)

    @property
    def is_real(self) -> bool:
        return self.order <= 2

    def __call__(self, n: int) -> complex:
        return char_eval(self, n)

    def __repr__(self) -> str:
        return f"DirichletCharacter(modulus={self.modulus}, index={self.index}, order={self.order})"


def _factor_orders(q: int) -> list[int]:
    return [f.order for f in _group_factors(q)]


def _check_modulus(q: int) -> None:
    if q < 1 or q > MAX_MODULUS:
        raise ValueError(f"modulus must lie in [1, {MAX_MODULUS}], got {q}")


def character(q: int, index: int) -> DirichletCharacter:
    """The character with lexicographic ``index`` among exponent tuples; 0 is principal."""
    _check_modulus(q)
    orders = _factor_orders(q)
    total = math.prod(orders)
    if not 0 <= index < total:
        raise ValueError(f"character index {index} out of range [0, {total}) for q={q}")
    exps = []
    rem = index
    for o in reversed(orders):
        rem, a = divmod(rem, o)
        exps.append(a)
    return DirichletCharacter(q, index, tuple(reversed(exps)))


def enumerate_characters(q: int) -> list[DirichletCharacter]:
    _check_modulus(q)
    orders = _factor_orders(q)
    return [
        DirichletCharacter(q, i, tuple(exps))
        for i, exps in enumerate(itertools.product(*(range(o) for o in orders)))
    ]


def principal_character(q: int) -> DirichletCharacter:
    return character(q, 0)


def char_eval(chi: DirichletCharacter, n: int) -> complex:
    return complex(chi.values[n % chi.modulus])


def is_induced_from(chi: DirichletCharacter, d: int) -> bool:
    """True when chi(n) = 1 for every unit n = 1 (mod d), i.e. chi factors through (Z/d)^*."""
    q = chi.modulus
    if q % d:
        return False
    n = np.arange(1, q + 1, d) % q
    e = chi.exponent_table[n]
    units = e >= 0
    return bool(np.all(e[units] == 0))


def conductor(chi: DirichletCharacter) -> int:
    q = chi.modulus
    for d in sorted(_divisors(q)):
        if is_induced_from(chi, d):
            return d
    return q


def is_primitive(chi: DirichletCharacter) -> bool:
    return conductor(chi) == chi.modulus


def _divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return divs
