"""
Exact sums of square roots.

A RadicalSum stores sum(coeff * sqrt(radicand)) with rational coefficients and
squarefree integer radicands. Equality is decided symbolically; ordering falls back
to interval enclosures with directed rounding at doubling precision.
"""
import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from numbers import Rational
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Tuple, Union

from mpmath.libmp import (
    fone,
    from_int,
    from_rational,
    fzero,
    mpf_add,
    mpf_mul,
    mpf_sign,
    mpf_sqrt,
    round_ceiling,
    round_floor,
    to_rational,
)
from sympy import primerange

from .errors import DomainError, IndeterminateComparisonError
from .settings import settings

logger = logging.getLogger(__name__)

RationalLike = Union[int, Fraction, Rational]


class Ordering(IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@lru_cache(maxsize=None)
def squarefree_split(n: int, bound: int) -> Tuple[int, int]:
    """Split n into (s, f) with n == s*s*f.

    Trial division runs over the primes up to ``bound``; whatever cofactor is
    left stays inside f as an atom unless it is a perfect square.
    """
    if n < 0:
        raise DomainError(f"negative radicand {n}")
    if n in (0, 1):
        return 1, n
    square, free, rest = 1, 1, n
    for prime in primerange(2, bound + 1):
        if prime * prime > rest:
            break
        exponent = 0
        while rest % prime == 0:
            rest //= prime
            exponent += 1
        square *= prime ** (exponent // 2)
        if exponent % 2:
            free *= prime
    root = math.isqrt(rest)
    if root * root == rest:
        square *= root
    else:
        free *= rest
    return square, free


def exact_fraction(value) -> Fraction:
    """Fraction with builtin int parts, whichever integer backend produced ``value``."""
    if isinstance(value, Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    return Fraction(value)


def _canonical_term(coeff: Fraction, radicand: Fraction) -> Tuple[Fraction, int]:
    # sqrt(a/b) = sqrt(a*b) / b
    if radicand < 0:
        raise DomainError(f"negative radicand {radicand}")
    if coeff == 0 or radicand == 0:
        return Fraction(0), 1
    product = radicand.numerator * radicand.denominator
    square, free = squarefree_split(product, settings.factor_bound)
    return coeff * Fraction(square, radicand.denominator), free


@dataclass(frozen=True)
class RadicalSum:
    """Canonical sum of (coeff, radicand) terms, radicands ascending, radicand 1 first."""

    terms: Tuple[Tuple[Fraction, int], ...] = ()

    @classmethod
    def from_terms(cls, pairs: Iterable[Tuple[RationalLike, RationalLike]]) -> "RadicalSum":
        merged: Dict[int, Fraction] = {}
        for coeff, radicand in pairs:
            c, f = _canonical_term(exact_fraction(coeff), exact_fraction(radicand))
            if c:
                merged[f] = merged.get(f, Fraction(0)) + c
        return cls._from_map(merged)

    @classmethod
    def _from_map(cls, merged: Dict[int, Fraction]) -> "RadicalSum":
        return cls(tuple((merged[f], f) for f in sorted(merged) if merged[f] != 0))

    @classmethod
    def rational(cls, value: RationalLike) -> "RadicalSum":
        value = exact_fraction(value)
        return cls(((value, 1),)) if value else cls()

    @classmethod
    def sqrt(cls, value: RationalLike) -> "RadicalSum":
        return cls.from_terms([(1, value)])

    @classmethod
    def zero(cls) -> "RadicalSum":
        return cls()

    @classmethod
    def coerce(cls, value: Union["RadicalSum", RationalLike]) -> "RadicalSum":
        if isinstance(value, RadicalSum):
            return value
        if isinstance(value, Rational):
            return cls.rational(value)
        raise TypeError(f"cannot use {type(value).__name__} as an exact value")

    def _as_map(self) -> Dict[int, Fraction]:
        return {f: c for c, f in self.terms}

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_rational(self) -> bool:
        return all(f == 1 for _, f in self.terms)

    def to_rational(self) -> Fraction:
        if not self.is_rational:
            raise DomainError(f"{self} is irrational")
        return self.terms[0][0] if self.terms else Fraction(0)

    def __add__(self, other):
        try:
            other = RadicalSum.coerce(other)
        except TypeError:
            return NotImplemented
        merged = self._as_map()
        for c, f in other.terms:
            merged[f] = merged.get(f, Fraction(0)) + c
        return RadicalSum._from_map(merged)

    __radd__ = __add__

    def __neg__(self) -> "RadicalSum":
        return RadicalSum(tuple((-c, f) for c, f in self.terms))

    def __sub__(self, other):
        try:
            other = RadicalSum.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Rational):
            scale = exact_fraction(other)
            if scale == 0:
                return RadicalSum()
            return RadicalSum(tuple((c * scale, f) for c, f in self.terms))
        if not isinstance(other, RadicalSum):
            return NotImplemented
        return RadicalSum.from_terms(
            (c1 * c2, f1 * f2) for c1, f1 in self.terms for c2, f2 in other.terms
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Rational):
            return NotImplemented
        return self * (1 / exact_fraction(other))

    def __lt__(self, other):
        return compare_radical_sums(self, RadicalSum.coerce(other)) is Ordering.LESS

    def __le__(self, other):
        return compare_radical_sums(self, RadicalSum.coerce(other)) is not Ordering.GREATER

    def __gt__(self, other):
        return compare_radical_sums(self, RadicalSum.coerce(other)) is Ordering.GREATER

    def __ge__(self, other):
        return compare_radical_sums(self, RadicalSum.coerce(other)) is not Ordering.LESS

    def __float__(self) -> float:
        return sum((float(c) * math.sqrt(f) for c, f in self.terms), 0.0)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = [str(c) if f == 1 else f"{c}*sqrt({f})" for c, f in self.terms]
        return " + ".join(parts)

    def to_pairs(self) -> List[List[str]]:
        return [[str(c), str(f)] for c, f in self.terms]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Iterable[str]]) -> "RadicalSum":
        return cls.from_terms((Fraction(c), Fraction(r)) for c, r in pairs)


def _term_bounds(coeff: Fraction, radicand: int, bits: int):
    if radicand == 1:
        root_lo = root_hi = fone
    else:
        exact = from_int(radicand)
        root_lo = mpf_sqrt(exact, bits, round_floor)
        root_hi = mpf_sqrt(exact, bits, round_ceiling)
    c_lo = from_rational(coeff.numerator, coeff.denominator, bits, round_floor)
    c_hi = from_rational(coeff.numerator, coeff.denominator, bits, round_ceiling)
    if coeff > 0:
        return mpf_mul(c_lo, root_lo, bits, round_floor), mpf_mul(c_hi, root_hi, bits, round_ceiling)
    return mpf_mul(c_lo, root_hi, bits, round_floor), mpf_mul(c_hi, root_lo, bits, round_ceiling)


@lru_cache(maxsize=65536)
def _bounds(terms: Tuple[Tuple[Fraction, int], ...], bits: int):
    lo, hi = fzero, fzero
    for coeff, radicand in terms:
        term_lo, term_hi = _term_bounds(coeff, radicand, bits)
        lo = mpf_add(lo, term_lo, bits, round_floor)
        hi = mpf_add(hi, term_hi, bits, round_ceiling)
    return lo, hi


def enclosure(value: RadicalSum, bits: int) -> Tuple[Fraction, Fraction]:
    """Rational interval [lo, hi] containing value, computed at ``bits`` of precision."""
    lo, hi = _bounds(value.terms, bits)
    (p_lo, q_lo), (p_hi, q_hi) = to_rational(lo), to_rational(hi)
    return Fraction(int(p_lo), int(q_lo)), Fraction(int(p_hi), int(q_hi))


def _two_term_sign(terms) -> Optional[int]:
    (c1, f1), (c2, f2) = terms
    if (c1 > 0) == (c2 > 0):
        return 1 if c1 > 0 else -1
    # c1*sqrt(f1) + c2*sqrt(f2) with opposite signs: compare squares
    left, right = c1 * c1 * f1, c2 * c2 * f2
    if left == right:
        return 0
    dominant = c1 if left > right else c2
    return 1 if dominant > 0 else -1


def sign(value: RadicalSum, max_bits: Optional[int] = None) -> int:
    terms = value.terms
    if not terms:
        return 0
    signs = {c > 0 for c, _ in terms}
    if len(signs) == 1:
        return 1 if terms[0][0] > 0 else -1
    if len(terms) == 2:
        return _two_term_sign(terms)
    cap = max_bits or settings.precision_bits
    bits = min(settings.precision_start_bits, cap)
    while True:
        lo, hi = _bounds(terms, bits)
        if mpf_sign(lo) > 0:
            return 1
        if mpf_sign(hi) < 0:
            return -1
        if bits >= cap:
            raise IndeterminateComparisonError(value, 0, bits)
        bits = min(bits * 2, cap)
        logger.debug(f"Refining sign of {len(terms)}-term sum at {bits} bits")


def compare_radical_sums(a: RadicalSum, b: RadicalSum, max_bits: Optional[int] = None) -> Ordering:
    """Exact ordering of two radical sums.

    Raises IndeterminateComparisonError when the precision cap is reached
    before the interval enclosure of a - b excludes zero.
    """
    if a.is_rational and b.is_rational:
        left, right = a.to_rational(), b.to_rational()
        return Ordering.LESS if left < right else Ordering.GREATER if left > right else Ordering.EQUAL
    try:
        return Ordering(sign(a - b, max_bits))
    except IndeterminateComparisonError as exc:
        raise IndeterminateComparisonError(a, b, exc.bits) from None


def rational_between(lo: RadicalSum, hi: RadicalSum, max_bits: Optional[int] = None) -> Fraction:
    """Return a rational q with lo < q < hi."""
    if compare_radical_sums(lo, hi, max_bits) is not Ordering.LESS:
        raise DomainError(f"empty interval between {lo} and {hi}")
    if lo.is_rational and hi.is_rational:
        return (lo.to_rational() + hi.to_rational()) / 2
    cap = max_bits or settings.precision_bits
    bits = min(settings.precision_start_bits, cap)
    while True:
        _, lo_upper = enclosure(lo, bits)
        hi_lower, _ = enclosure(hi, bits)
        if lo_upper < hi_lower:
            return (lo_upper + hi_lower) / 2
        if bits >= cap:
            raise IndeterminateComparisonError(lo, hi, bits, "rationalizing threshold")
        bits = min(bits * 2, cap)


def lower_rational(value: RadicalSum, max_bits: Optional[int] = None) -> Fraction:
    """A positive rational not exceeding a positive value."""
    if sign(value, max_bits) <= 0:
        raise DomainError(f"{value} is not positive")
    if value.is_rational:
        return value.to_rational()
    cap = max_bits or settings.precision_bits
    bits = min(settings.precision_start_bits, cap)
    while True:
        lower, _ = enclosure(value, bits)
        if lower > 0:
            return lower
        if bits >= cap:
            raise IndeterminateComparisonError(value, 0, bits, "lower bound")
        bits = min(bits * 2, cap)


def ceil_sqrt_ratio(numerator_sq: RationalLike, denominator_sq: RationalLike) -> int:
    """Smallest integer t >= 0 with t**2 * denominator_sq >= numerator_sq."""
    ratio = exact_fraction(numerator_sq) / exact_fraction(denominator_sq)
    if ratio < 0:
        raise DomainError(f"negative ratio {ratio}")
    t = math.isqrt(ratio.numerator // ratio.denominator)
    while t * t < ratio:
        t += 1
    while t > 0 and (t - 1) * (t - 1) >= ratio:
        t -= 1
    return t
