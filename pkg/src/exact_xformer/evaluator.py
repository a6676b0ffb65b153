"""Runs a transformer Model on a string under three arithmetic regimes.

ahat_exact    exact rationals end to end; attention is average-hard (equal
              weight on all score maximizers); forbids layernorm.
smat_pbit     every primitive is a p-bit float operation: two-ary ops and
              exp/sqrt correctly rounded or relative-error bounded, n-ary
              sums exact-then-rounded-once.
smat_budgeted exact rationals except exp and inverse-sqrt, each approximated
              to a per-site tolerance planned in budget.py so the output
              lands within a caller-chosen epsilon of the exact real value.

Recognition follows the strict-sign convention: positive output accepts,
negative rejects, exact zero is a tie error.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .elementary import f_exp, f_sqrt
from .errors import DomainError, EvalModeError, TieError
from .model_ir import LayerNorm, Model, Vector, position_embedding
from .pfloat import PFloat, f_add, f_div, f_mul, f_neg, f_sum_blocks, round_p
from .rational import RAT_ZERO, Rat, rat_max

MODES = ("ahat_exact", "smat_pbit", "smat_budgeted")


@dataclass(frozen=True)
class EvalContext:
    mode: str
    n: int
    p: Optional[int] = None
    epsilon: Optional[Rat] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise EvalModeError(f"unknown mode {self.mode!r}")
        if self.n < 1:
            raise DomainError("input length must be >= 1")
        if self.mode == "smat_pbit":
            if self.p is None or self.epsilon is not None:
                raise EvalModeError("smat_pbit takes p and no epsilon")
            if self.p < 1:
                raise DomainError("precision must be >= 1")
        elif self.mode == "smat_budgeted":
            if self.epsilon is None or self.p is not None:
                raise EvalModeError("smat_budgeted takes epsilon and no p")
            if self.epsilon.num <= 0:
                raise DomainError("epsilon must be > 0")
        elif self.p is not None or self.epsilon is not None:
            raise EvalModeError("ahat_exact takes neither p nor epsilon")


@dataclass
class EvalTrace:
    embedding_bits: tuple[int, int]
    layer_bits: list[tuple[int, int]]  # (max numerator bits, max denominator bits)
    snapshots: Optional[list[list[tuple[Rat, ...]]]] = None


class Decision(Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    BELOW_MARGIN = "below_margin"


# --------------------------------------------------------------------------
# rational helpers
# --------------------------------------------------------------------------


def _dot(u: Sequence[Rat], v: Sequence[Rat]) -> Rat:
    total = RAT_ZERO
    for a, b in zip(u, v):
        if a.num and b.num:
            total = total + a * b
    return total


def _matvec(m: Sequence[Sequence[Rat]], v: Sequence[Rat]) -> list[Rat]:
    return [_dot(row, v) for row in m]


def _vec_add(u: Sequence[Rat], v: Sequence[Rat]) -> list[Rat]:
    return [a + b for a, b in zip(u, v)]


def _bits_of(vecs: Sequence[Sequence[Rat]]) -> tuple[int, int]:
    nm = dn = 1
    for vec in vecs:
        for x in vec:
            nm = max(nm, abs(x.num).bit_length() or 1)
            dn = max(dn, x.den.bit_length())
    return nm, dn


def embed_input(model: Model, w: str) -> list[list[Rat]]:
    """Token embedding plus positional vector for each 1-based position."""
    if not w:
        raise DomainError("input string must be nonempty")
    n = len(w)
    out = []
    for i, sym in enumerate(w, start=1):
        if sym not in model.token_embeddings:
            raise DomainError(f"symbol {sym!r} not in the model alphabet")
        pos = position_embedding(model.position_rule, i, n, model.dim)
        out.append(_vec_add(model.token_embeddings[sym], pos))
    return out


def ahardmax_weights(scores: Sequence[Rat]) -> list[Rat]:
    """Equal weight on every maximizing position, zero elsewhere."""
    if len(scores) == 0:
        raise DomainError("ahardmax of an empty score row")
    top = rat_max(scores)
    hits = sum(1 for s in scores if s == top)
    share = Rat(1, hits)
    return [share if s == top else RAT_ZERO for s in scores]


def _attend_positions(masking: str, i: int, n: int) -> range:
    return range(1, i + 1) if masking == "causal" else range(1, n + 1)


def _relu(x: Rat) -> Rat:
    return x if x.num > 0 else RAT_ZERO


def _ffnn_exact(layer_ffnn, x: list[Rat]) -> list[Rat]:
    hidden = [_dot(row, x) + b for row, b in zip(layer_ffnn.w1, layer_ffnn.b1)]
    if layer_ffnn.activation == "relu":
        hidden = [_relu(h) for h in hidden]
    return [_dot(row, hidden) + b for row, b in zip(layer_ffnn.w2, layer_ffnn.b2)]


# --------------------------------------------------------------------------
# exact average-hard evaluation
# --------------------------------------------------------------------------


def eval_ahat(model: Model, w: str, keep_snapshots: bool = False) -> tuple[Rat, EvalTrace]:
    """Exact rational evaluation; average-hard attention, no layernorm."""
    for li, layer in enumerate(model.layers):
        for hi, head in enumerate(layer.heads):
            if head.kind != "average_hard":
                raise EvalModeError(f"layers[{li}].heads[{hi}] is {head.kind}; ahat_exact needs average_hard")
        if layer.layernorm_attn is not None or layer.layernorm_ffnn is not None:
            raise EvalModeError(f"layers[{li}] has layernorm; ahat_exact forbids it")

    xs = embed_input(model, w)
    n = len(xs)
    trace = EvalTrace(_bits_of(xs), [], [] if keep_snapshots else None)

    for layer in model.layers:
        per_head = []
        for head in layer.heads:
            qs = [_matvec(head.w_q, x) for x in xs]
            ks = [_matvec(head.w_k, x) for x in xs]
            vs = [_matvec(head.w_v, x) for x in xs]
            outs = []
            for i in range(1, n + 1):
                js = _attend_positions(head.masking, i, n)
                row = [_dot(qs[i - 1], ks[j - 1]) for j in js]
                alphas = ahardmax_weights(row)
                ctx = [RAT_ZERO] * model.dim
                for a, j in zip(alphas, js):
                    if a.num == 0:
                        continue
                    for c in range(model.dim):
                        if vs[j - 1][c].num:
                            ctx[c] = ctx[c] + a * vs[j - 1][c]
                outs.append(_matvec(head.w_o, ctx))
            per_head.append(outs)

        nxt = []
        for i in range(n):
            acc = list(xs[i]) if layer.residual_attn else [RAT_ZERO] * model.dim
            for outs in per_head:
                acc = _vec_add(acc, outs[i])
            f = _ffnn_exact(layer.ffnn, acc)
            nxt.append(_vec_add(acc, f) if layer.residual_ffnn else f)
        xs = nxt
        trace.layer_bits.append(_bits_of(xs))
        if trace.snapshots is not None:
            trace.snapshots.append([tuple(x) for x in xs])

    value = _dot(model.output_head.weights, xs[-1]) + model.output_head.bias
    return value, trace


# --------------------------------------------------------------------------
# p-bit float evaluation
# --------------------------------------------------------------------------


def softmax_pbit(scores: Sequence[PFloat], p: int) -> list[PFloat]:
    """exp each score (relative error <= 2^-p), one exact-then-rounded sum,
    one correctly rounded division per weight."""
    if len(scores) == 0:
        raise DomainError("softmax of an empty score row")
    nums = [f_exp(s, p) for s in scores]
    den = f_sum_blocks(nums)
    return [f_div(nm, den) for nm in nums]


def _fsum(terms: list[PFloat], p: int) -> PFloat:
    if not terms:
        return PFloat.zero(p)
    return f_sum_blocks(terms)


def _affine_pbit(w_rows, x: list[PFloat], bias: Optional[list[PFloat]], p: int) -> list[PFloat]:
    """Row dot products with the bias folded into the single n-ary sum."""
    out = []
    for r, row in enumerate(w_rows):
        terms = [f_mul(a, b) for a, b in zip(row, x) if a.m and b.m]
        if bias is not None and bias[r].m:
            terms.append(bias[r])
        out.append(_fsum(terms, p))
    return out


def layernorm_pbit(x: list[PFloat], ln_gamma: list[PFloat], ln_beta: list[PFloat], ln_c: PFloat, p: int) -> list[PFloat]:
    """(x - mean)/sqrt(var + c) * gamma + beta, one float op at a time.

    The variance uses squared deviations, which stay nonnegative under
    rounding, so the sqrt argument is always at least c.
    """
    d = len(x)
    n_f = round_p(d, p)
    mean = f_div(_fsum(list(x), p), n_f)
    devs = [f_add(xi, f_neg(mean)) for xi in x]
    sqs = [f_mul(dv, dv) for dv in devs]
    var = f_div(_fsum(sqs, p), n_f)
    scale = f_sqrt(f_add(var, ln_c))
    out = []
    for dv, g, b in zip(devs, ln_gamma, ln_beta):
        t = f_mul(f_div(dv, scale), g)
        out.append(f_add(t, b))
    return out


class _PbitModel:
    """Model parameters rounded once to p bits."""

    def __init__(self, model: Model, p: int):
        self.p = p
        self.dim = model.dim
        rv = lambda vec: [round_p(x, p) for x in vec]
        rm = lambda mat: [rv(row) for row in mat]
        self.heads = [
            [(rm(h.w_q), rm(h.w_k), rm(h.w_v), rm(h.w_o), h.masking) for h in layer.heads]
            for layer in model.layers
        ]
        self.ffnns = [
            (rm(l.ffnn.w1), rv(l.ffnn.b1), l.ffnn.activation, rm(l.ffnn.w2), rv(l.ffnn.b2))
            for l in model.layers
        ]
        self.lns = [
            tuple(
                None if ln is None else (rv(ln.gamma), rv(ln.beta), round_p(ln.c, p))
                for ln in (l.layernorm_attn, l.layernorm_ffnn)
            )
            for l in model.layers
        ]
        self.residuals = [(l.residual_attn, l.residual_ffnn) for l in model.layers]
        self.head_w = rv(model.output_head.weights)
        self.head_b = round_p(model.output_head.bias, p)


def eval_smat_pbit(model: Model, w: str, p: int) -> PFloat:
    """Softmax-attention evaluation where every primitive is a p-bit op."""
    for li, layer in enumerate(model.layers):
        for hi, head in enumerate(layer.heads):
            if head.kind != "softmax":
                raise EvalModeError(f"layers[{li}].heads[{hi}] is {head.kind}; smat_pbit needs softmax")
    pm = _PbitModel(model, p)
    xs = [[round_p(x, p) for x in vec] for vec in embed_input(model, w)]
    n = len(xs)

    for li in range(len(model.layers)):
        per_head = []
        for w_q, w_k, w_v, w_o, masking in pm.heads[li]:
            qs = [_affine_pbit(w_q, x, None, p) for x in xs]
            ks = [_affine_pbit(w_k, x, None, p) for x in xs]
            vs = [_affine_pbit(w_v, x, None, p) for x in xs]
            outs = []
            for i in range(1, n + 1):
                js = _attend_positions(masking, i, n)
                row = []
                for j in js:
                    terms = [f_mul(a, b) for a, b in zip(qs[i - 1], ks[j - 1]) if a.m and b.m]
                    row.append(_fsum(terms, p))
                alphas = softmax_pbit(row, p)
                ctx = []
                for c in range(pm.dim):
                    terms = [f_mul(a, vs[j - 1][c]) for a, j in zip(alphas, js) if a.m and vs[j - 1][c].m]
                    ctx.append(_fsum(terms, p))
                outs.append(_affine_pbit(w_o, ctx, None, p))
            per_head.append(outs)

        res_attn, res_ffnn = pm.residuals[li]
        ln_attn, ln_ffnn = pm.lns[li]
        w1, b1, act, w2, b2 = pm.ffnns[li]
        nxt = []
        for i in range(n):
            acc = []
            for c in range(pm.dim):
                terms = [outs[i][c] for outs in per_head if outs[i][c].m]
                if res_attn and xs[i][c].m:
                    terms.append(xs[i][c])
                acc.append(_fsum(terms, p))
            if ln_attn is not None:
                acc = layernorm_pbit(acc, *ln_attn, p)
            hidden = _affine_pbit(w1, acc, b1, p)
            if act == "relu":
                hidden = [h if h.m > 0 else PFloat.zero(p) for h in hidden]
            f = _affine_pbit(w2, hidden, b2, p)
            if res_ffnn:
                h = [f_add(a, b) for a, b in zip(acc, f)]
            else:
                h = f
            if ln_ffnn is not None:
                h = layernorm_pbit(h, *ln_ffnn, p)
            nxt.append(h)
        xs = nxt

    terms = [f_mul(a, b) for a, b in zip(pm.head_w, xs[-1]) if a.m and b.m]
    if pm.head_b.m:
        terms.append(pm.head_b)
    return _fsum(terms, p)


def layernorm_eval(x: Sequence, ln: LayerNorm, regime: str, p: Optional[int] = None, delta: Optional[Rat] = None):
    """Regime dispatcher for a single layernorm application."""
    if regime == "smat_pbit":
        if p is None:
            raise DomainError("smat_pbit layernorm needs p")
        gamma = [round_p(g, p) for g in ln.gamma]
        beta = [round_p(b, p) for b in ln.beta]
        return layernorm_pbit(list(x), gamma, beta, round_p(ln.c, p), p)
    if regime == "smat_budgeted":
        if delta is None:
            raise DomainError("budgeted layernorm needs a site delta")
        from .budget import layernorm_budgeted

        return layernorm_budgeted(list(x), ln, delta)
    raise EvalModeError(f"unknown layernorm regime {regime!r}")


# --------------------------------------------------------------------------
# recognition and measurement
# --------------------------------------------------------------------------


def recognize(model: Model, w: str, ctx: EvalContext) -> Decision:
    """Sign of the evaluated output; exact zero is a tie."""
    if ctx.mode == "ahat_exact":
        value, _ = eval_ahat(model, w)
        sign = value.sign
    elif ctx.mode == "smat_pbit":
        sign = eval_smat_pbit(model, w, ctx.p).sign
    else:
        from .budget import eval_budgeted

        sign = eval_budgeted(model, w, ctx.epsilon).sign
    if sign == 0:
        raise TieError("output is exactly zero; membership is undefined at strict signs")
    return Decision.ACCEPT if sign > 0 else Decision.REJECT


def margin_recognize(model: Model, w: str, epsilon_margin: Rat) -> Decision:
    """Budgeted decision: correct whenever the true margin exceeds epsilon."""
    if epsilon_margin.num <= 0:
        raise DomainError("margin must be > 0")
    from .budget import eval_budgeted

    t_hat = eval_budgeted(model, w, epsilon_margin)
    if t_hat.num > 0:
        return Decision.ACCEPT
    if t_hat.num < 0:
        return Decision.REJECT
    return Decision.BELOW_MARGIN


def bit_growth_trace(model: Model, lengths: Sequence[int]) -> list[dict]:
    """Exact-mode bit-width measurement over a deterministic input family.

    For each n, evaluates a cycled-alphabet string (varied scores) and a
    repeated-symbol string (uniform tie) and keeps the componentwise max of
    the per-layer numerator/denominator widths.
    """
    rows = []
    for n in lengths:
        if n < 1:
            raise DomainError("lengths must be >= 1")
        cycled = "".join(model.alphabet[i % len(model.alphabet)] for i in range(n))
        uniform = model.alphabet[-1] * n
        per_layer = [(1, 1)] * len(model.layers)
        emb_bits = (1, 1)
        for s in (cycled, uniform):
            _, trace = eval_ahat(model, s)
            emb_bits = tuple(map(max, emb_bits, trace.embedding_bits))
            per_layer = [tuple(map(max, a, b)) for a, b in zip(per_layer, trace.layer_bits)]
        peak = max([max(emb_bits)] + [max(t) for t in per_layer])
        rows.append({"n": n, "embedding_bits": emb_bits, "layer_bits": per_layer, "max_bits": peak})
    return rows


def fit_loglog_slope(rows: Sequence[dict]) -> float:
    """Least-squares slope of log2(max_bits) against log2(n)."""
    import math

    import numpy as np

    if len(rows) < 2:
        raise DomainError("slope fit needs at least two lengths")
    xs = np.array([math.log2(r["n"]) for r in rows])
    ys = np.array([math.log2(r["max_bits"]) for r in rows])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)
