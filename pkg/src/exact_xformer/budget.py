"""Certified-error evaluation: plan per-site tolerances, then evaluate.

Everything in the budgeted regime is exact rational arithmetic except two
kinds of sites, exp (inside softmax) and inverse square root (inside
layernorm), each approximated to a site tolerance delta.  plan_budget walks
the computation graph backward from the requested output error epsilon,
dividing by Lipschitz constants through exact stages and applying the two
closed-form translations at approximated sites:

    softmax       delta = min(1/2, eps/16)
    inverse sqrt  delta = min(c/2, c*sqrt(c)/((2c+1)*sqrt(2)) * eps)

In both, the single delta covers the site's input perturbation and its own
relative approximation error.  Irrational constants in the inverse-sqrt
formula are replaced by rational bounds in the conservative direction, so
every planned delta is at most the ideal one.

Activation magnitudes are bounded by a forward interval pass (operator
infinity norms), never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .elementary import rat_exp_approx, rat_floor_log2, rat_sqrt_approx
from .errors import DomainError, EvalModeError
from .model_ir import LayerNorm, Model
from .rational import RAT_ZERO, Rat, rat_max, rat_sum

Tol = Optional[Rat]  # None = unconstrained (the stage's output is exact)

SQRT2_UPPER = Rat(665857, 470832)  # 665857^2 = 2*470832^2 + 1, so this exceeds sqrt(2)

RAT_ONE = Rat(1)
RAT_HALF = Rat(1, 2)


@dataclass
class ErrorBudget:
    epsilon: Rat
    n: int
    activation_bound: Rat
    layernorm_floor: Optional[Rat]
    site_deltas: dict[tuple, Rat] = field(default_factory=dict)
    stage_tolerances: dict[tuple, Tol] = field(default_factory=dict)
    lipschitz: dict[tuple, Rat] = field(default_factory=dict)


# --------------------------------------------------------------------------
# rational bound helpers
# --------------------------------------------------------------------------


def sqrt_bounds(x: Rat, bits: int = 48) -> tuple[Rat, Rat]:
    """Rational lo <= sqrt(x) <= hi for x > 0, via integer square root."""
    if x.num <= 0:
        raise DomainError("sqrt_bounds needs x > 0")
    f = rat_floor_log2(x)
    shift = max(bits, bits - f // 2 + 8)
    scaled = (x.num << (2 * shift)) // x.den
    lo = math.isqrt(scaled)
    return Rat(lo, 1 << shift), Rat(lo + 2, 1 << shift)


def softmax_delta(eps: Rat) -> Rat:
    """Site tolerance making perturbed softmax deviate at most eps (<= 16*delta)."""
    if eps.num <= 0:
        raise DomainError("softmax_delta needs eps > 0")
    return min(RAT_HALF, eps * Rat(1, 16))


def invsqrt_delta(c: Rat, eps: Rat) -> Rat:
    """Site tolerance for 1/sqrt(x) on x >= c, conservative rational form."""
    if c.num <= 0:
        raise DomainError("invsqrt_delta needs c > 0")
    if eps.num <= 0:
        raise DomainError("invsqrt_delta needs eps > 0")
    sqrt_c_lo, _ = sqrt_bounds(c)
    factor = c * sqrt_c_lo / ((Rat(2) * c + RAT_ONE) * SQRT2_UPPER)
    return min(c * RAT_HALF, factor * eps)


def _inf_norm(mat: Sequence[Sequence[Rat]]) -> Rat:
    best = RAT_ZERO
    for row in mat:
        total = RAT_ZERO
        for x in row:
            total = total + abs(x)
        best = max(best, total)
    return best


def _vec_inf(vec: Sequence[Rat]) -> Rat:
    best = RAT_ZERO
    for x in vec:
        best = max(best, abs(x))
    return best


def _t_min(*ts: Tol) -> Tol:
    vals = [t for t in ts if t is not None]
    return min(vals) if vals else None


def _t_div(t: Tol, rho: Rat) -> Tol:
    """Input tolerance through a rho-Lipschitz exact stage."""
    if t is None or rho.num == 0:
        return None
    return t / rho


def _t_half(t: Tol) -> Tol:
    return None if t is None else t * RAT_HALF


# --------------------------------------------------------------------------
# forward activation-bound pass
# --------------------------------------------------------------------------


def _position_bound(model: Model) -> Rat:
    rule = model.position_rule
    if rule.kind == "none":
        return RAT_ZERO
    if rule.kind == "table":
        return max((_vec_inf(v) for v in rule.vectors), default=RAT_ZERO)
    return RAT_ONE  # i/n and 1/i both lie in (0, 1]


def _forward_bounds(model: Model) -> list[dict]:
    """Per-layer magnitude bounds on every stage the backward walk divides by.

    Bounds are inflated by the +1 slacks the walk's quadratic error terms
    assume (input errors are capped at 1 when tolerances are planned).
    """
    c_in = max((_vec_inf(v) for v in model.token_embeddings.values()), default=RAT_ZERO)
    c_in = c_in + _position_bound(model)
    layers = []
    for layer in model.layers:
        info: dict = {"c_in": c_in}
        heads = []
        attn_sum = c_in if layer.residual_attn else RAT_ZERO
        for head in layer.heads:
            c_q = _inf_norm(head.w_q) * c_in
            c_k = _inf_norm(head.w_k) * c_in
            c_v = _inf_norm(head.w_v) * c_in
            c_o = _inf_norm(head.w_o) * c_v
            heads.append({"c_q": c_q, "c_k": c_k, "c_v": c_v, "c_o": c_o})
            attn_sum = attn_sum + c_o
        info["heads"] = heads
        info["attn_out"] = attn_sum
        cur = attn_sum
        if layer.layernorm_attn is not None:
            cur = _ln_bound(cur, layer.layernorm_attn)
        info["ffnn_in"] = cur
        ffnn = layer.ffnn
        c_hidden = _inf_norm(ffnn.w1) * cur + _vec_inf(ffnn.b1)
        c_f = _inf_norm(ffnn.w2) * c_hidden + _vec_inf(ffnn.b2)
        cur = (cur + c_f) if layer.residual_ffnn else c_f
        info["pre_ln_ffnn"] = cur
        if layer.layernorm_ffnn is not None:
            cur = _ln_bound(cur, layer.layernorm_ffnn)
        info["out"] = cur
        layers.append(info)
        c_in = cur
    return layers


def _ln_bound(c_in: Rat, ln: LayerNorm) -> Rat:
    # |dev| <= 2*c_in, u_hat <= 1.5/sqrt(c): bound 3*c_in*gamma_max/sqrt(c) + beta_max
    sqrt_c_lo, _ = sqrt_bounds(ln.c)
    return Rat(3) * c_in * _vec_inf(ln.gamma) / sqrt_c_lo + _vec_inf(ln.beta)


# --------------------------------------------------------------------------
# backward tolerance walk
# --------------------------------------------------------------------------


def _ln_walk(tol: Tol, c_bound: Rat, ln: LayerNorm, site: tuple, budget: ErrorBudget) -> Tol:
    """Assign the inverse-sqrt site delta; return the layernorm input tolerance."""
    gamma_max = _vec_inf(ln.gamma)
    if gamma_max.num == 0 or tol is None:
        budget.site_deltas[site] = RAT_HALF  # output unaffected by the site
        return None if gamma_max.num == 0 else tol
    sqrt_c_lo, _ = sqrt_bounds(ln.c)
    inv_sqrt_c_hi = RAT_ONE / sqrt_c_lo
    half = tol * RAT_HALF
    # deviation slice: |dev| * |du| * gamma_max <= half, |dev| <= 2*c_bound + 1
    eps_u = half / (gamma_max * (Rat(2) * c_bound + RAT_ONE))
    delta = invsqrt_delta(ln.c, eps_u)
    budget.site_deltas[site] = delta
    # direct slice: 2*dx * u_hat * gamma_max <= half with u_hat <= 1.5/sqrt(c)
    t_direct = half / (gamma_max * Rat(3) * inv_sqrt_c_hi)
    # variance must stay within delta: |dvar| <= (8*c_bound + 4) * dx for dx <= 1
    t_var = delta / (Rat(8) * c_bound + Rat(4))
    return _t_min(t_direct, t_var, RAT_ONE)


def plan_budget(model: Model, n: int, epsilon: Rat) -> ErrorBudget:
    """Backward tolerance walk from a target output error epsilon."""
    if epsilon.num <= 0:
        raise DomainError("epsilon must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    bounds = _forward_bounds(model)
    c_global = max(
        [b["c_in"] for b in bounds] + [b["out"] for b in bounds] + [RAT_ZERO],
        default=RAT_ZERO,
    )
    floors = [
        ln.c
        for layer in model.layers
        for ln in (layer.layernorm_attn, layer.layernorm_ffnn)
        if ln is not None
    ]
    budget = ErrorBudget(
        epsilon=epsilon,
        n=n,
        activation_bound=c_global,
        layernorm_floor=min(floors) if floors else None,
    )

    rho_head = RAT_ZERO
    for x in model.output_head.weights:
        rho_head = rho_head + abs(x)
    budget.lipschitz[("output",)] = rho_head
    budget.stage_tolerances[("output",)] = epsilon
    tol: Tol = _t_div(epsilon, rho_head)

    for li in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[li]
        info = bounds[li]
        budget.stage_tolerances[("layer", li, "out")] = tol
        if layer.layernorm_ffnn is not None:
            tol = _ln_walk(tol, info["pre_ln_ffnn"], layer.layernorm_ffnn, ("layer", li, "ln_ffnn"), budget)
        if layer.residual_ffnn:
            t_resid = _t_half(tol)
            t_ffnn = _t_half(tol)
        else:
            t_resid, t_ffnn = None, tol
        rho_ffnn = _inf_norm(layer.ffnn.w2) * _inf_norm(layer.ffnn.w1)
        budget.lipschitz[("layer", li, "ffnn")] = rho_ffnn
        tol = _t_min(t_resid, _t_div(t_ffnn, rho_ffnn))
        budget.stage_tolerances[("layer", li, "ffnn_in")] = tol
        if layer.layernorm_attn is not None:
            tol = _ln_walk(tol, info["attn_out"], layer.layernorm_attn, ("layer", li, "ln_attn"), budget)
        budget.stage_tolerances[("layer", li, "attn_out")] = tol

        shares = len(layer.heads) + (1 if layer.residual_attn else 0)
        slice_tol = None if tol is None else tol / Rat(shares)
        t_x = slice_tol if layer.residual_attn else None
        for hi, head in enumerate(layer.heads):
            hb = bounds[li]["heads"][hi]
            rho_o = _inf_norm(head.w_o)
            t_u = _t_div(slice_tol, rho_o)
            # context error <= n * dalpha * c_v + dvalue (weights sum to exactly 1)
            eps_alpha = None
            if t_u is not None and hb["c_v"].num != 0:
                eps_alpha = _t_half(t_u) / (Rat(n) * hb["c_v"])
            delta_sm = softmax_delta(eps_alpha) if eps_alpha is not None else RAT_HALF
            budget.site_deltas[("layer", li, "head", hi, "softmax")] = delta_sm
            rho_score = Rat(model.dim) * (hb["c_q"] * _inf_norm(head.w_k) + hb["c_k"] * _inf_norm(head.w_q))
            if rho_score.num != 0:
                rho_score = rho_score + RAT_ONE  # absorbs the second-order dq*dk term
            budget.lipschitz[("layer", li, "head", hi, "score")] = rho_score
            t_x_score = _t_div(delta_sm if eps_alpha is not None else None, rho_score)
            t_x_value = _t_div(_t_half(t_u), _inf_norm(head.w_v))
            t_x = _t_min(t_x, t_x_score, t_x_value)
        tol = _t_min(t_x, RAT_ONE)
        budget.stage_tolerances[("layer", li, "input")] = tol
    return budget


# --------------------------------------------------------------------------
# budgeted evaluation
# --------------------------------------------------------------------------


def _bits_for(delta: Rat) -> int:
    return max(1, -rat_floor_log2(delta))


def softmax_budgeted(scores: Sequence[Rat], delta: Rat) -> list[Rat]:
    """Softmax with exp approximated to relative error delta, otherwise exact.

    Scores are shifted by the row maximum first (an exact identity on the
    softmax), so tiny deltas never force exp of large-magnitude arguments.
    """
    if len(scores) == 0:
        raise DomainError("softmax of an empty score row")
    bits = _bits_for(delta)
    top = rat_max(scores)
    nums = [rat_exp_approx(s - top, bits) for s in scores]
    total = rat_sum(nums)
    return [e / total for e in nums]


def layernorm_budgeted(x: list[Rat], ln: LayerNorm, delta: Rat) -> list[Rat]:
    """Layernorm with 1/sqrt approximated to relative error delta."""
    d = len(x)
    mean = rat_sum(x) * Rat(1, d)
    devs = [xi - mean for xi in x]
    var = rat_sum([dv * dv for dv in devs]) * Rat(1, d)
    root = rat_sqrt_approx(var + ln.c, _bits_for(delta) + 1)
    u = RAT_ONE / root
    return [dv * u * g + b for dv, g, b in zip(devs, ln.gamma, ln.beta)]


def eval_budgeted(model: Model, w: str, epsilon: Rat) -> Rat:
    """Output within epsilon of the exact real-valued softmax transformer."""
    for li, layer in enumerate(model.layers):
        for hi, head in enumerate(layer.heads):
            if head.kind != "softmax":
                raise EvalModeError(
                    f"layers[{li}].heads[{hi}] is {head.kind}; the budgeted contract covers softmax heads"
                )
    from .evaluator import _attend_positions, _dot, _ffnn_exact, _matvec, _vec_add, embed_input

    xs = embed_input(model, w)
    n = len(xs)
    budget = plan_budget(model, n, epsilon)

    for li, layer in enumerate(model.layers):
        per_head = []
        for hi, head in enumerate(layer.heads):
            delta_sm = budget.site_deltas[("layer", li, "head", hi, "softmax")]
            qs = [_matvec(head.w_q, x) for x in xs]
            ks = [_matvec(head.w_k, x) for x in xs]
            vs = [_matvec(head.w_v, x) for x in xs]
            outs = []
            for i in range(1, n + 1):
                js = _attend_positions(head.masking, i, n)
                row = [_dot(qs[i - 1], ks[j - 1]) for j in js]
                alphas = softmax_budgeted(row, delta_sm)
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
            if layer.layernorm_attn is not None:
                acc = layernorm_budgeted(acc, layer.layernorm_attn, budget.site_deltas[("layer", li, "ln_attn")])
            f = _ffnn_exact(layer.ffnn, acc)
            h = _vec_add(acc, f) if layer.residual_ffnn else f
            if layer.layernorm_ffnn is not None:
                h = layernorm_budgeted(h, layer.layernorm_ffnn, budget.site_deltas[("layer", li, "ln_ffnn")])
            nxt.append(h)
        xs = nxt

    return _dot(model.output_head.weights, xs[-1]) + model.output_head.bias
