"""End-to-end evaluation in the exact and p-bit regimes.

The exact regime (averaging attention) produces rationals a hand
computation can pin; the p-bit regime is checked against those rationals
through its stated precision, plus exact special cases where every float
step happens to be lossless.
"""

import pytest

from exact_xformer import (
    Decision,
    DomainError,
    EvalModeError,
    PFloat,
    Rat,
    TieError,
    ahardmax_weights,
    bit_growth_trace,
    embed_input,
    eval_ahat,
    eval_smat_pbit,
    f_div,
    f_sqrt,
    fit_loglog_slope,
    float_to_rat,
    layernorm_pbit,
    load_model,
    margin_recognize,
    recognize,
    round_p,
    softmax_pbit,
)
from exact_xformer.evaluator import MODES, EvalContext


@pytest.fixture(scope="module")
def majority():
    return load_model("majority")


@pytest.fixture(scope="module")
def uniform():
    return load_model("softmax-uniform")


# --- evaluation context ---------------------------------------------------------


def test_modes_tuple():
    assert MODES == ("ahat_exact", "smat_pbit", "smat_budgeted")


def test_context_validation():
    EvalContext("ahat_exact", 4)
    EvalContext("smat_pbit", 4, p=16)
    EvalContext("smat_budgeted", 4, epsilon=Rat(1, 8))
    with pytest.raises(EvalModeError):
        EvalContext("nope", 4)
    with pytest.raises(EvalModeError):
        EvalContext("smat_pbit", 4)  # needs p
    with pytest.raises(EvalModeError):
        EvalContext("smat_budgeted", 4)  # needs epsilon
    with pytest.raises(DomainError):
        EvalContext("ahat_exact", 0)


# --- exact averaging regime --------------------------------------------------------


def test_majority_values(majority):
    assert eval_ahat(majority, "1101")[0] == Rat(1, 4)
    assert eval_ahat(majority, "100")[0] == Rat(-1, 6)
    assert eval_ahat(majority, "1")[0] == Rat(1, 2)


def test_majority_value_is_count_margin(majority):
    for w in ("10110", "0001", "111", "01"):
        k, n = w.count("1"), len(w)
        assert eval_ahat(majority, w)[0] == Rat(2 * k - n, 2 * n)


def test_recognize_decisions(majority):
    ctx = EvalContext("ahat_exact", 4)
    assert recognize(majority, "1101", ctx) is Decision.ACCEPT
    assert recognize(majority, "100", EvalContext("ahat_exact", 3)) is Decision.REJECT
    with pytest.raises(TieError):
        recognize(majority, "10", EvalContext("ahat_exact", 2))


def test_margin_recognize(uniform):
    assert margin_recognize(uniform, "10", Rat(1, 8)) is Decision.BELOW_MARGIN
    assert margin_recognize(uniform, "110", Rat(1, 64)) is Decision.ACCEPT
    assert margin_recognize(uniform, "001", Rat(1, 64)) is Decision.REJECT


def test_embed_input_validates(majority):
    with pytest.raises(DomainError):
        embed_input(majority, "10x")
    with pytest.raises(DomainError):
        embed_input(majority, "")


# --- attention primitives ------------------------------------------------------------


def test_ahardmax_uniform_over_argmax_set():
    w = ahardmax_weights([Rat(1), Rat(2), Rat(2)])
    assert w == [Rat(0), Rat(1, 2), Rat(1, 2)]


def test_ahardmax_invariances():
    base = [Rat(1), Rat(5), Rat(5), Rat(-2)]
    shifted = [s + Rat(7, 3) for s in base]
    scaled = [s * Rat(3, 2) for s in base]
    assert ahardmax_weights(base) == ahardmax_weights(shifted)
    assert ahardmax_weights(base) == ahardmax_weights(scaled)
    with pytest.raises(DomainError):
        ahardmax_weights([])


def test_softmax_pbit_symmetric_scores_are_exact_halves():
    p = 8
    w = softmax_pbit([PFloat.zero(p), PFloat.zero(p)], p)
    assert w == [round_p(Rat(1, 2), p)] * 2


def test_softmax_pbit_monotone_in_score():
    p = 16
    zero = PFloat.zero(p)
    firsts = []
    for t in (round_p(Rat(1, 4), p), round_p(Rat(1), p), round_p(Rat(2), p)):
        firsts.append(float_to_rat(softmax_pbit([t, zero], p)[0]))
    assert firsts[0] < firsts[1] < firsts[2]
    assert all(Rat(1, 2) < f < Rat(1) for f in firsts)


def test_layernorm_pbit_two_point_composition():
    p = 8
    one, minus = round_p(Rat(1), p), round_p(Rat(-1), p)
    out = layernorm_pbit(
        [one, minus], [one, one], [PFloat.zero(p)] * 2, one, p
    )
    expected = f_div(one, f_sqrt(round_p(Rat(2), p)))
    assert out[0] == expected
    assert out[1] == PFloat(-expected.m, expected.e, p)
    # 1/sqrt(2) = 0.70710678...; the p=8 rounding sits within one ulp
    got = float_to_rat(out[0])
    assert abs(got - Rat(70710678, 10**8)) < Rat(1, 1 << (p - 1))


# --- p-bit softmax regime --------------------------------------------------------------


def test_smat_requires_softmax_heads(majority):
    with pytest.raises(EvalModeError):
        eval_smat_pbit(majority, "1101", 16)


@pytest.mark.parametrize("p", [16, 32])
def test_smat_uniform_scores_recover_exact_margin(uniform, p):
    # all scores equal: exp values coincide, the sum and divisions are
    # lossless, and the final margin is exactly k/n - 1/2
    assert eval_smat_pbit(uniform, "1101", p) == round_p(Rat(1, 4), p)
    assert eval_smat_pbit(uniform, "1", p) == round_p(Rat(1, 2), p)
    got = float_to_rat(eval_smat_pbit(uniform, "100", p))
    assert abs(got - Rat(-1, 6)) < Rat(1, 1 << (p - 6))


# --- bit growth ---------------------------------------------------------------------


def test_bit_growth_rows_shape(majority):
    rows = bit_growth_trace(majority, [4, 8, 16])
    assert [r["n"] for r in rows] == [4, 8, 16]
    for r in rows:
        assert set(r) == {"n", "embedding_bits", "layer_bits", "max_bits"}
        assert r["max_bits"] >= 1


def test_bit_growth_majority_is_flat(majority):
    rows = bit_growth_trace(majority, [4, 8, 16, 32, 64])
    slope = fit_loglog_slope(rows)
    assert abs(slope) < 0.3


def test_bit_growth_inverse_index_is_near_linear():
    rows = bit_growth_trace(load_model("inverse-index"), [4, 8, 16, 32, 64])
    assert [(r["n"], r["max_bits"]) for r in rows] == [
        (4, 6),
        (8, 12),
        (16, 24),
        (32, 53),
        (64, 93),
    ]
    assert 0.9 < fit_loglog_slope(rows) < 1.1


def test_fit_loglog_slope_needs_two_rows(majority):
    rows = bit_growth_trace(majority, [4])
    with pytest.raises(DomainError):
        fit_loglog_slope(rows)
