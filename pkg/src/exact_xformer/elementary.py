"""Square root and exponential via exact rational series evaluation.

Both functions range-reduce, evaluate a truncated series in exact rational
arithmetic (no internal rounding anywhere), and reconstruct:

* sqrt: x = r * 2^k with r in [1/4, 1) and k even, then the binomial series
  for sqrt(r) around 1; the final p-bit result is decided by squaring the
  candidate breakpoints and comparing with r exactly, so it is the correctly
  rounded square root.
* exp: x = k * log2 + r with r in [0, log2), exp(r) by Taylor series, result
  exp(r) * 2^k; the log2 constant is a truncated series with a proven tail,
  and k is the exact rational floor of x over that constant, which keeps r
  inside [0, log2) unconditionally.  The returned float has relative error
  at most 2^-p (the series runs at roughly 2p bits because the final
  rounding already spends nearly the whole 2^-p allowance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError, FloatRangeError
from .pfloat import PFloat, _round_dyadic, _round_ratio, f_add, float_to_rat
from .rational import RAT_ONE, Rat


@dataclass(frozen=True)
class SeriesPlan:
    """A truncation choice: take `terms` terms, trust `remainder_bound`."""

    terms: int
    work_bits: int
    remainder_bound: Rat


@lru_cache(maxsize=None)
def sqrt_plan(bits: int) -> SeriesPlan:
    """Fewest binomial terms with tail 4*(3/4)^N <= 2^-(bits+3)."""
    if bits < 1:
        raise DomainError("sqrt_plan needs bits >= 1")
    n = 1
    pow3, pow4 = 3, 4
    scale = 1 << (bits + 5)
    while pow3 * scale > pow4:
        n += 1
        pow3 *= 3
        pow4 *= 4
    return SeriesPlan(n, bits, Rat(4 * pow3, pow4))


@lru_cache(maxsize=None)
def exp_plan(work_bits: int) -> SeriesPlan:
    """Fewest Taylor terms with tail 2*(3/4)^N / N! <= 2^-(work_bits+2).

    Valid for arguments in [0, log 2): the tail of sum r^i/i! after N terms
    is below 2 * r^N / N! once N >= 1, and r < 3/4.
    """
    if work_bits < 1:
        raise DomainError("exp_plan needs work_bits >= 1")
    n = 1
    pow3, pow4, fact = 3, 4, 1
    scale = 2 << (work_bits + 2)
    while pow3 * scale > pow4 * fact:
        n += 1
        pow3 *= 3
        pow4 *= 4
        fact *= n
    return SeriesPlan(n, work_bits, Rat(2 * pow3, pow4 * fact))


@lru_cache(maxsize=None)
def log2_const(bits: int) -> Rat:
    """Rational q with q <= log 2 <= q + 2^-bits, from sum 1/(i * 2^i).

    The series underestimates; truncating after N-1 = bits terms leaves a
    positive tail below 2^-(N-1) = 2^-bits.
    """
    if bits < 1:
        raise DomainError("log2_const needs bits >= 1")
    n_terms = bits + 1
    lcm = math.lcm(*range(1, n_terms)) if n_terms > 2 else 1
    den = lcm << (n_terms - 1)
    num = sum((lcm // i) << (n_terms - 1 - i) for i in range(1, n_terms))
    return Rat(num, den)


def _exp_series(r: Rat, terms: int) -> Rat:
    """Exact sum_{i<terms} r^i / i! for r >= 0, over one common denominator."""
    if terms == 1:
        return RAT_ONE
    a, b = r.num, r.den
    den = b ** (terms - 1) * math.factorial(terms - 1)
    term = den
    total = den
    for i in range(terms - 1):
        term = term * a // (b * (i + 1))  # exact: factorial and b-power remain
        if term == 0:
            break
        total += term
    return Rat(total, den)


def _sqrt_series(r: Rat, terms: int) -> Rat:
    """Exact sum_{i<terms} binom(1/2, i) (r-1)^i for r in [1/4, 1)."""
    a, b = r.num, r.den
    u_num = a - b  # (r - 1) has denominator b; nonpositive here
    term_num = 1
    total = 1
    den = 1
    for i in range(terms - 1):
        term_num = term_num * u_num * (1 - 2 * i)
        step = 2 * b * (i + 1)
        total = total * step + term_num
        den *= step
    return Rat(total, den)


def range_reduce_sqrt(x: PFloat) -> tuple[Rat, int]:
    """Write x = r * 2^k exactly with r in [1/4, 1) and k even."""
    if x.m <= 0:
        raise DomainError("square-root range reduction needs x > 0")
    p = x.p
    if (x.e + p) % 2 == 0:
        return Rat(x.m, 1 << p), x.e + p
    return Rat(x.m, 1 << (p + 1)), x.e + p + 1


def f_sqrt(x: PFloat) -> PFloat:
    """Correctly rounded square root (round to nearest, ties impossible)."""
    if x.m == 0:
        return PFloat(0, 0, x.p)
    if x.m < 0:
        raise DomainError("square root of a negative float")
    p = x.p
    r, k = range_reduce_sqrt(x)
    approx = _sqrt_series(r, sqrt_plan(p).terms)  # within 2^-(p+3) of sqrt(r)
    m = (approx.num * (1 << p) + approx.den // 2) // approx.den
    m = min(max(m, 1 << (p - 1)), (1 << p) - 1)
    # Exact correction: sqrt(r) is never a breakpoint (odd square versus a
    # dyadic), so comparing breakpoint squares with r settles the rounding.
    a, b = r.num, r.den
    rhs = a << (2 * p + 2)  # compare (2m +- 1)^2 * b against r * 2^(2p+2)
    while m > 1 << (p - 1) and (2 * m - 1) ** 2 * b > rhs:
        m -= 1
    while m < (1 << p) - 1 and (2 * m + 1) ** 2 * b < rhs:
        m += 1
    return _round_dyadic(m, k // 2 - p, p)


def f_exp(x: PFloat, p: int | None = None) -> PFloat:
    """exp(x) with relative error at most 2^-p, rounding included.

    The scaling integer k = floor(x / log 2) must land in [-2^p, 2^p)
    (FloatRangeError otherwise); this caps the log2-approximant precision
    and keeps results inside the exponent budget callers size p for.
    """
    p = x.p if p is None else p
    if x.m == 0:
        return _round_dyadic(1, 0, p)
    log_mag = x.e + abs(x.m).bit_length() - 1  # floor(log2 |x|)
    if log_mag >= p + 1:
        # |x| >= 2^(p+1) forces |k| >= 2^(p+1)/log2 > 2^p
        raise FloatRangeError(f"exp argument magnitude 2^{log_mag} puts k outside [-2^{p}, 2^{p})")
    w = 2 * p + 8
    if log_mag <= -(2 * p + 16):
        # exp(x) = 1 + x up to a relative 2^(2*log_mag + 2) <= 2^-(4p+30)
        return f_add(_round_dyadic(1, 0, p), _round_dyadic(x.m, x.e, p))
    bits = w + max(2, log_mag + 2) + 8
    lam = log2_const(bits)
    xr = float_to_rat(x)
    k = (xr.num * lam.den) // (xr.den * lam.num)  # exact floor(x / lam)
    if not -(1 << p) <= k < (1 << p):
        raise FloatRangeError(f"exp scaling k={k} outside [-2^{p}, 2^{p})")
    r = Rat(xr.num * lam.den - k * lam.num * xr.den, xr.den * lam.den)
    total = _exp_series(r, exp_plan(w).terms)
    return _round_ratio(total.num, total.den, k, p)


# --------------------------------------------------------------------------
# Rational-valued variants used by the error-budgeted evaluator.  Same
# series machinery, but the result stays rational with a stated relative
# error instead of being rounded to a float.
# --------------------------------------------------------------------------


def rat_floor_log2(x: Rat) -> int:
    if x.num == 0:
        raise DomainError("floor_log2 of zero")
    a, b = abs(x.num), x.den
    q = a.bit_length() - b.bit_length()
    if q >= 0:
        return q if a >= b << q else q - 1
    return q if a << -q >= b else q - 1


def rat_exp_approx(x: Rat, rel_bits: int) -> Rat:
    """A rational y with |y / exp(x) - 1| <= 2^-rel_bits.

    Materializes 2^|k| for k ~ x/log2, so callers keep |x| moderate (the
    budgeted evaluator shifts softmax scores by the row max first).
    """
    if rel_bits < 1:
        raise DomainError("rel_bits must be >= 1")
    if x.num == 0:
        return RAT_ONE
    w = rel_bits + 4
    log_mag = rat_floor_log2(x)
    if log_mag <= -(w + 8):
        return RAT_ONE + x
    bits = w + max(2, log_mag + 2) + 8
    lam = log2_const(bits)
    k = (x.num * lam.den) // (x.den * lam.num)
    r = Rat(x.num * lam.den - k * lam.num * x.den, x.den * lam.den)
    total = _exp_series(r, exp_plan(w).terms)
    if k >= 0:
        return Rat(total.num << k, total.den)
    return Rat(total.num, total.den << -k)


def rat_sqrt_approx(x: Rat, rel_bits: int) -> Rat:
    """A rational y with |y / sqrt(x) - 1| <= 2^-rel_bits, for x > 0."""
    if rel_bits < 1:
        raise DomainError("rel_bits must be >= 1")
    if x.num <= 0:
        raise DomainError("square root of a nonpositive rational")
    log_mag = rat_floor_log2(x)
    k = log_mag + 1 if log_mag % 2 else log_mag + 2
    # r = x * 2^-k lands in [1/4, 1), k even
    if k >= 0:
        r = Rat(x.num, x.den << k)
    else:
        r = Rat(x.num << -k, x.den)
    total = _sqrt_series(r, sqrt_plan(rel_bits + 2).terms)
    half_k = k // 2
    if half_k >= 0:
        return Rat(total.num << half_k, total.den)
    return Rat(total.num, total.den << -half_k)
