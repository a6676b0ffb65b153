"""Exact and precision-tracked evaluation of small transformer models.

Three arithmetic regimes share one model format:

* exact rationals for average-hard-attention models (``eval_ahat``),
* ``p``-bit correctly rounded floats for softmax models (``eval_smat_pbit``),
* exact rationals with certified approximation sites whose error budgets
  are planned backward from a requested output tolerance (``eval_budgeted``).

The float layer (``PFloat``, ``round_p``, ``f_add`` ... ``f_sum_blocks``) and
the correctly rounded ``f_exp`` / ``f_sqrt`` are usable on their own.
"""

from .budget import (
    ErrorBudget,
    eval_budgeted,
    invsqrt_delta,
    layernorm_budgeted,
    plan_budget,
    softmax_budgeted,
    sqrt_bounds,
)
from .elementary import (
    f_exp,
    f_sqrt,
    log2_const,
    rat_exp_approx,
    rat_sqrt_approx,
)
from .errors import (
    DomainError,
    EvalModeError,
    FloatRangeError,
    ModelLoadError,
    TieError,
)
from .evaluator import (
    Decision,
    EvalTrace,
    ahardmax_weights,
    bit_growth_trace,
    embed_input,
    eval_ahat,
    eval_smat_pbit,
    fit_loglog_slope,
    layernorm_pbit,
    margin_recognize,
    recognize,
    softmax_pbit,
)
from .intkernel import Ordering
from .model_ir import (
    BUILTIN_MODELS,
    AttentionHead,
    FFNN,
    Layer,
    LayerNorm,
    Model,
    OutputHead,
    PositionRule,
    build_inverse_index_model,
    build_majority_model,
    build_softmax_uniform_model,
    load_model,
    parse_model,
    position_embedding,
    serialize_model,
)
from .pfloat import (
    PFloat,
    block_threshold,
    decimal_str,
    f_add,
    f_cmp,
    f_div,
    f_mul,
    f_neg,
    f_prod,
    f_sum_blocks,
    f_sum_oracle,
    float_to_rat,
    partition_blocks,
    round_p,
)
from .rational import (
    RAT_ONE,
    RAT_ZERO,
    Rat,
    rat_add,
    rat_bits,
    rat_cmp,
    rat_div,
    rat_from_string,
    rat_max,
    rat_mul,
    rat_prod,
    rat_sum,
    rat_to_string,
)
from .verify import SUITES, CaseFailure, SuiteResult, run_all, run_suite

__version__ = "0.1.0"

__all__ = [
    "AttentionHead",
    "BUILTIN_MODELS",
    "CaseFailure",
    "Decision",
    "DomainError",
    "ErrorBudget",
    "EvalModeError",
    "EvalTrace",
    "FFNN",
    "FloatRangeError",
    "Layer",
    "LayerNorm",
    "Model",
    "ModelLoadError",
    "Ordering",
    "OutputHead",
    "PFloat",
    "PositionRule",
    "RAT_ONE",
    "RAT_ZERO",
    "Rat",
    "SUITES",
    "SuiteResult",
    "TieError",
    "ahardmax_weights",
    "bit_growth_trace",
    "block_threshold",
    "build_inverse_index_model",
    "build_majority_model",
    "build_softmax_uniform_model",
    "decimal_str",
    "embed_input",
    "eval_ahat",
    "eval_budgeted",
    "eval_smat_pbit",
    "f_add",
    "f_cmp",
    "f_div",
    "f_exp",
    "f_mul",
    "f_neg",
    "f_prod",
    "f_sqrt",
    "f_sum_blocks",
    "f_sum_oracle",
    "fit_loglog_slope",
    "float_to_rat",
    "invsqrt_delta",
    "layernorm_budgeted",
    "layernorm_pbit",
    "load_model",
    "log2_const",
    "margin_recognize",
    "parse_model",
    "partition_blocks",
    "plan_budget",
    "position_embedding",
    "rat_add",
    "rat_bits",
    "rat_cmp",
    "rat_div",
    "rat_exp_approx",
    "rat_from_string",
    "rat_max",
    "rat_mul",
    "rat_prod",
    "rat_sqrt_approx",
    "rat_sum",
    "rat_to_string",
    "recognize",
    "round_p",
    "run_all",
    "run_suite",
    "serialize_model",
    "softmax_budgeted",
    "softmax_pbit",
    "sqrt_bounds",
]
