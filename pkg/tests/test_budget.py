"""Certified-error evaluation: site tolerances, perturbation lemmas, end-to-end bounds.

The reference for end-to-end checks is the p-bit evaluator at p=200, whose
own relative error (~2^-200 per operation over a handful of operations) is
negligible against every epsilon used here.
"""

import json

import pytest

from exact_xformer import (
    DomainError,
    Rat,
    eval_budgeted,
    eval_smat_pbit,
    float_to_rat,
    invsqrt_delta,
    layernorm_budgeted,
    load_model,
    parse_model,
    plan_budget,
    softmax_budgeted,
    sqrt_bounds,
)
from exact_xformer.budget import softmax_delta
from exact_xformer.model_ir import LayerNorm

EPS16 = Rat(1, 1 << 16)


def _directed_model():
    """Two symbols, identity q/k/v/o, so scores are 0/1 dot products and the
    softmax weights are genuinely non-uniform."""
    ident = [["1", "0"], ["0", "1"]]
    zero2 = [["0", "0"], ["0", "0"]]
    doc = {
        "format_version": 1,
        "alphabet": ["a", "b"],
        "dim": 2,
        "token_embeddings": {"a": ["1", "0"], "b": ["0", "1"]},
        "position_rule": {"kind": "none"},
        "layers": [
            {
                "heads": [
                    {
                        "kind": "softmax",
                        "masking": "none",
                        "w_q": ident,
                        "w_k": ident,
                        "w_v": ident,
                        "w_o": ident,
                    }
                ],
                "ffnn": {
                    "activation": "relu",
                    "w1": zero2,
                    "b1": ["0", "0"],
                    "w2": zero2,
                    "b2": ["0", "0"],
                },
                "layernorm_attn": None,
                "layernorm_ffnn": None,
                "residual_attn": False,
                "residual_ffnn": True,
            }
        ],
        "output_head": {"weights": ["1", "-1"], "bias": "1/8"},
    }
    return parse_model(json.dumps(doc))


# --- site tolerances -----------------------------------------------------------


def test_softmax_delta_form():
    assert softmax_delta(Rat(1)) == Rat(1, 16)
    assert softmax_delta(Rat(1, 4)) == Rat(1, 64)
    assert softmax_delta(Rat(100)) == Rat(1, 2)  # clamp


def test_invsqrt_delta_brackets_irrational_factor():
    # at c=1 the factor is 1/(3*sqrt(2)) = 0.23570...; the implementation
    # must under-approximate it but not by much
    eps = Rat(1, 1 << 20)
    d = invsqrt_delta(Rat(1), eps)
    assert Rat(2356, 10**4) * eps < d < Rat(2358, 10**4) * eps


def test_invsqrt_delta_clamps_at_half_c():
    assert invsqrt_delta(Rat(4), Rat(1000)) == Rat(2)
    assert invsqrt_delta(Rat(1, 4), Rat(1000)) == Rat(1, 8)


def test_invsqrt_delta_validates():
    with pytest.raises(DomainError):
        invsqrt_delta(Rat(0), Rat(1))
    with pytest.raises(DomainError):
        invsqrt_delta(Rat(1), Rat(0))


@pytest.mark.parametrize("x", [Rat(2), Rat(7, 3), Rat(1, 1000), Rat(10**12)])
def test_sqrt_bounds_invariants(x):
    lo, hi = sqrt_bounds(x, 96)
    assert Rat(0) < lo <= hi
    assert lo * lo <= x <= hi * hi
    assert (hi - lo) * Rat(1 << 90) < hi  # relative width well under 2^-90


# --- the budget plan --------------------------------------------------------------


def test_plan_budget_structure():
    m = load_model("softmax-uniform")
    b = plan_budget(m, 4, EPS16)
    assert b.epsilon == EPS16 and b.n == 4
    assert b.stage_tolerances[("output",)] == EPS16
    sm = b.site_deltas[("layer", 0, "head", 0, "softmax")]
    assert Rat(0) < sm <= softmax_delta(EPS16)


def test_plan_budget_tightens_with_epsilon():
    m = load_model("softmax-uniform")
    loose = plan_budget(m, 4, Rat(1, 1 << 8))
    tight = plan_budget(m, 4, Rat(1, 1 << 32))
    key = ("layer", 0, "head", 0, "softmax")
    assert tight.site_deltas[key] < loose.site_deltas[key]


# --- budgeted primitives --------------------------------------------------------------


def test_softmax_budgeted_sums_to_one_exactly():
    w = softmax_budgeted([Rat(1), Rat(0)], Rat(1, 1 << 30))
    assert sum(w, Rat(0)) == Rat(1)
    assert w[0] > w[1] > Rat(0)


def test_softmax_budgeted_uniform_is_exact():
    w = softmax_budgeted([Rat(3)] * 3, Rat(1, 100))
    assert w == [Rat(1, 3)] * 3


def test_softmax_budgeted_near_true_weights():
    # scores (1, 0): true weights (e/(e+1), 1/(e+1)); sandwich e between
    # rational bounds tight to 1e-8 and allow the site delta on top
    delta = Rat(1, 1 << 20)
    w = softmax_budgeted([Rat(1), Rat(0)], delta)
    e_lo, e_hi = Rat(271828182, 10**8), Rat(271828183, 10**8)
    lo = e_lo / (e_hi + Rat(1))
    hi = e_hi / (e_lo + Rat(1))
    assert lo - Rat(17) * delta <= w[0] <= hi + Rat(17) * delta


def test_layernorm_budgeted_tracks_exact_form():
    ln = LayerNorm(gamma=(Rat(1), Rat(1)), beta=(Rat(0), Rat(0)), c=Rat(1))
    eps = Rat(1, 1 << 24)
    delta = invsqrt_delta(Rat(1), eps)
    out = layernorm_budgeted([Rat(1), Rat(-1)], ln, delta)
    # exact result is +/- 1/sqrt(2); enclose via sqrt_bounds at high width
    lo, hi = sqrt_bounds(Rat(2), 200)
    assert Rat(1) / hi - eps <= out[0] <= Rat(1) / lo + eps
    assert out[1] == -out[0]


# --- end-to-end certificates ------------------------------------------------------------


def test_budgeted_uniform_scores_are_exact():
    m = load_model("softmax-uniform")
    assert eval_budgeted(m, "1101", EPS16) == Rat(1, 4)
    assert eval_budgeted(m, "10", EPS16) == Rat(0)


def test_budgeted_requires_softmax_heads():
    from exact_xformer import EvalModeError

    with pytest.raises(EvalModeError):
        eval_budgeted(load_model("majority"), "10", EPS16)


def test_budgeted_self_consistent_across_epsilons():
    m = _directed_model()
    coarse = eval_budgeted(m, "abba", EPS16)
    fine = eval_budgeted(m, "abba", Rat(1, 1 << 40))
    assert abs(coarse - fine) <= EPS16 + Rat(1, 1 << 39)


def test_budgeted_matches_high_precision_reference():
    m = _directed_model()
    ref = float_to_rat(eval_smat_pbit(m, "abba", 200))
    for k in (16, 64, 256):
        eps = Rat(1, 1 << k)
        got = eval_budgeted(m, "abba", eps)
        assert abs(got - ref) <= eps + Rat(1, 1 << 190)


def test_budgeted_length_one_is_exact():
    # a single position forces weight 1, so the whole pipeline is rational
    m = _directed_model()
    assert eval_budgeted(m, "a", EPS16) == Rat(1) + Rat(1, 8)
