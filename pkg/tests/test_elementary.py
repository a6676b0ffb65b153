"""exp and sqrt on p-bit floats, plus their rational series cores.

f_exp carries a relative-error contract (within 2^-p of the true value);
f_sqrt is correctly rounded outright.  The checks here use interval
enclosures and squared-integer comparisons, never a binary float library.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exact_xformer import (
    DomainError,
    FloatRangeError,
    PFloat,
    Rat,
    f_exp,
    f_mul,
    f_sqrt,
    float_to_rat,
    log2_const,
    rat_exp_approx,
    rat_sqrt_approx,
    round_p,
)
from exact_xformer.elementary import exp_plan, range_reduce_sqrt, sqrt_plan
from exact_xformer.verify import exp_enclosure

# ln(2) to 30 places; any tighter published value agrees to this width
LOG2_30 = Rat(693147180559945309417232121458, 10**30)


def _pfloats(p, e_min, e_max):
    return st.builds(
        lambda s, m, e: PFloat(s * m, e, p),
        st.sampled_from((1, -1)),
        st.integers(min_value=1 << (p - 1), max_value=(1 << p) - 1),
        st.integers(min_value=e_min, max_value=e_max),
    )


# --- exp ----------------------------------------------------------------------


@pytest.mark.parametrize("p", [3, 8, 24])
def test_exp_of_zero_is_one(p):
    assert f_exp(PFloat.zero(p)) == round_p(Rat(1), p)
    assert round_p(Rat(1), p) == PFloat(1 << (p - 1), -(p - 1), p)


@given(_pfloats(8, -10, -1))
@settings(max_examples=150)
def test_exp_relative_error(x):
    y = float_to_rat(f_exp(x))
    lo, hi = exp_enclosure(float_to_rat(x), 64)
    tol = Rat(1, 1 << 8)
    assert y >= lo * (Rat(1) - tol)
    assert y <= hi * (Rat(1) + tol)


def test_exp_product_identity():
    # e^x * e^-x must land within the combined relative slack of 1
    one = Rat(1)
    p = 8
    for m, e in ((160, -2), (224, -4), (128, -1)):
        a = float_to_rat(f_exp(PFloat(m, e, p)))
        b = float_to_rat(f_exp(PFloat(-m, e, p)))
        slack = Rat(1, 1 << (p - 2))
        assert abs(a * b - one) <= slack


def test_exp_monotone_sample():
    p = 8
    xs = [PFloat(-200, -5, p), PFloat(-128, -7, p), PFloat(128, -7, p), PFloat(200, -5, p)]
    ys = [float_to_rat(f_exp(x)) for x in xs]
    for a, b in zip(ys, ys[1:]):
        assert a <= b


def test_exp_range_guards():
    # p=3 admits scaling exponents k in [-8, 8): 16 trips the magnitude
    # guard, 8 the exact k-range check, both signs
    for m, e in ((4, 2), (4, 1), (-4, 2), (-4, 1)):
        with pytest.raises(FloatRangeError):
            f_exp(PFloat(m, e, 3))
    # 5 is still inside (k = 7)
    assert f_exp(PFloat(5, 0, 3)) == PFloat(5, 5, 3)


def test_exp_tiny_argument_short_circuit():
    p = 8
    one = round_p(Rat(1), p)
    assert f_exp(PFloat(128, -200, p)) == one
    assert f_exp(PFloat(-128, -200, p)) == one


def test_exp_optional_working_precision():
    x = PFloat(160, -7, 8)
    assert f_exp(x) == f_exp(x, 8)


# --- log2 constant ---------------------------------------------------------------


def test_log2_const_agrees_with_published_value():
    d = log2_const(100) - LOG2_30
    assert abs(d) < Rat(1, 1 << 90)


def test_log2_const_successive_widths_agree():
    d = log2_const(64) - log2_const(128)
    assert abs(d) < Rat(1, 1 << 60)


# --- sqrt ------------------------------------------------------------------------


def test_sqrt_exact_values():
    assert f_sqrt(PFloat(4, 0, 3)) == PFloat(4, -1, 3)  # sqrt 4 = 2
    assert f_sqrt(PFloat(4, 2, 3)) == PFloat(4, 0, 3)  # sqrt 16 = 4
    assert f_sqrt(PFloat.zero(3)) == PFloat.zero(3)


def test_sqrt_rejects_negative():
    with pytest.raises(DomainError):
        f_sqrt(PFloat(-4, 0, 3))


@given(_pfloats(8, -30, 30).map(lambda x: PFloat(abs(x.m), x.e, x.p)))
@settings(max_examples=200)
def test_sqrt_result_brackets_true_root(x):
    """The true sqrt lies between the result's neighboring breakpoints.

    The breakpoint below halves its distance at a binade bottom; exact-tie
    direction is pinned separately against the squared-integer oracle.
    """
    r = f_sqrt(x)
    v = float_to_rat(x)
    m, e = r.m, r.e
    scale = Rat(1 << e) if e >= 0 else Rat(1, 1 << -e)
    low_gap = Rat(1, 4) if m == 1 << (x.p - 1) else Rat(1, 2)
    bp_lo = (Rat(m) - low_gap) * scale
    bp_hi = (Rat(m) + Rat(1, 2)) * scale
    assert bp_lo * bp_lo <= v <= bp_hi * bp_hi


@given(_pfloats(4, -20, 20).map(lambda x: PFloat(abs(x.m), x.e, x.p)))
def test_range_reduce_sqrt_identity(x):
    r, k = range_reduce_sqrt(x)
    assert k % 2 == 0
    assert Rat(1, 4) <= r < Rat(1)
    scale = Rat(1 << k) if k >= 0 else Rat(1, 1 << -k)
    assert r * scale == float_to_rat(x)


# --- series plans and rational cores ------------------------------------------------


@pytest.mark.parametrize("bits", [8, 16, 48, 96])
def test_series_plan_tail_bounds(bits):
    ep = exp_plan(bits)
    assert ep.remainder_bound <= Rat(1, 1 << (bits + 2))
    sp = sqrt_plan(bits)
    assert sp.remainder_bound <= Rat(1, 1 << (bits + 3))


@pytest.mark.parametrize(
    "x", [Rat(1, 3), Rat(-5, 7), Rat(3), Rat(-2), Rat(1, 1000)]
)
def test_rat_exp_approx_within_enclosure(x):
    bits = 48
    y = rat_exp_approx(x, bits)
    lo, hi = exp_enclosure(x, bits + 16)
    tol = Rat(1, 1 << bits)
    assert y >= lo * (Rat(1) - tol)
    assert y <= hi * (Rat(1) + tol)


@pytest.mark.parametrize("x", [Rat(2), Rat(1, 3), Rat(49, 4), Rat(7, 5)])
def test_rat_sqrt_approx_square_near_argument(x):
    bits = 48
    y = rat_sqrt_approx(x, bits)
    # |y/sqrt(x) - 1| <= 2^-bits implies |y^2/x - 1| <= 3*2^-bits
    assert abs(y * y - x) <= x * Rat(3, 1 << bits)
