"""Exact rational arithmetic with explicit bit-cost accounting.

A value is a pair (num, den) with den >= 1, gcd(|num|, den) = 1, and the sign
carried on the numerator; zero is 0/1.  Binary operations use plain
cross-multiplication; the n-ary sum and max rescale every term onto the single
common denominator prod(den_j) so the whole fold costs one normalization.
"""

from __future__ import annotations

import re
from math import gcd
from typing import Iterable, Sequence

from .errors import DomainError
from .intkernel import Ordering

_RAT_RE = re.compile(r"(-?(?:0|[1-9][0-9]*))(?:/([1-9][0-9]*))?\Z")


class Rat:
    """An exact rational in canonical form."""

    __slots__ = ("num", "den")

    def __init__(self, num: int, den: int = 1):
        if den < 1:
            raise DomainError(f"denominator must be >= 1, got {den}")
        if num == 0:
            den = 1
        else:
            g = gcd(num, den)
            if g > 1:
                num //= g
                den //= g
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def _raw(cls, num: int, den: int) -> "Rat":
        """Wrap an already-canonical pair without re-reducing."""
        self = object.__new__(cls)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        return self

    @classmethod
    def from_string(cls, text: str) -> "Rat":
        m = _RAT_RE.fullmatch(text) if isinstance(text, str) else None
        if m is None or m.group(1) == "-0":
            raise DomainError(f"not a rational literal: {text!r}")
        num = int(m.group(1))
        den = int(m.group(2)) if m.group(2) else 1
        return cls(num, den)

    def __setattr__(self, name, value):
        raise AttributeError("Rat is immutable")

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "Rat") -> "Rat":
        a1, b1, a2, b2 = self.num, self.den, other.num, other.den
        return Rat(a1 * b2 + b1 * a2, b1 * b2)

    def __sub__(self, other: "Rat") -> "Rat":
        a1, b1, a2, b2 = self.num, self.den, other.num, other.den
        return Rat(a1 * b2 - b1 * a2, b1 * b2)

    def __mul__(self, other: "Rat") -> "Rat":
        return Rat(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "Rat") -> "Rat":
        if other.num == 0:
            raise DomainError("division by zero rational")
        num, den = self.num * other.den, self.den * other.num
        if den < 0:
            num, den = -num, -den
        return Rat(num, den)

    def __neg__(self) -> "Rat":
        return Rat._raw(-self.num, self.den)

    def __abs__(self) -> "Rat":
        return Rat._raw(abs(self.num), self.den)

    # -- order ------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Rat):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __lt__(self, other: "Rat") -> bool:
        return self.num * other.den < other.num * self.den

    def __le__(self, other: "Rat") -> bool:
        return self.num * other.den <= other.num * self.den

    def __gt__(self, other: "Rat") -> bool:
        return self.num * other.den > other.num * self.den

    def __ge__(self, other: "Rat") -> bool:
        return self.num * other.den >= other.num * self.den

    # -- misc ---------------------------------------------------------------

    @property
    def sign(self) -> int:
        return (self.num > 0) - (self.num < 0)

    def __bool__(self) -> bool:
        return self.num != 0

    def __str__(self) -> str:
        if self.den == 1:
            return str(self.num)
        return f"{self.num}/{self.den}"

    def __repr__(self) -> str:
        return f"Rat({self.num}, {self.den})"


RAT_ZERO = Rat._raw(0, 1)
RAT_ONE = Rat._raw(1, 1)


def rat_normalize(num: int, den: int) -> Rat:
    """Canonicalize a raw pair; den <= 0 is a domain error."""
    return Rat(num, den)


def rat_add(x: Rat, y: Rat) -> Rat:
    return x + y


def rat_mul(x: Rat, y: Rat) -> Rat:
    return x * y


def rat_div(x: Rat, y: Rat) -> Rat:
    return x / y


def rat_cmp(x: Rat, y: Rat) -> Ordering:
    lhs = x.num * y.den
    rhs = y.num * x.den
    if lhs < rhs:
        return Ordering.LT
    if lhs > rhs:
        return Ordering.GT
    return Ordering.EQ


def rat_sum(xs: Sequence[Rat]) -> Rat:
    """Exact sum over the common denominator B = prod(den_j)."""
    if len(xs) == 0:
        raise DomainError("rat_sum of an empty list")
    if len(xs) == 1:
        return xs[0]
    big = 1
    for x in xs:
        big *= x.den
    num = 0
    for x in xs:
        num += x.num * (big // x.den)
    return Rat(num, big)


def rat_max(xs: Sequence[Rat]) -> Rat:
    """Exact max via the same common-denominator rescaling as rat_sum."""
    if len(xs) == 0:
        raise DomainError("rat_max of an empty list")
    big = 1
    for x in xs:
        big *= x.den
    best = xs[0].num * (big // xs[0].den)
    for x in xs[1:]:
        scaled = x.num * (big // x.den)
        if scaled > best:
            best = scaled
    return Rat(best, big)


def rat_prod(xs: Iterable[Rat]) -> Rat:
    num = 1
    den = 1
    for x in xs:
        num *= x.num
        den *= x.den
    return Rat(num, den)


def rat_bits(x: Rat) -> tuple[int, int]:
    """(numerator bits, denominator bits); zero reports (0, 1)."""
    return (abs(x.num).bit_length(), x.den.bit_length())


def rat_from_string(text: str) -> Rat:
    return Rat.from_string(text)


def rat_to_string(x: Rat) -> str:
    return str(x)
