"""Property suites with independent oracles, behind the CLI's verify command.

Each suite draws its cases from per-case seeded generators (seed "S:name:i"),
so any failure is reproducible in isolation and sharding the index range
across workers cannot change the aggregate outcome.

Oracles are built from different machinery than the code under test:
rounding uses float enumeration, summation uses the exact-rational total,
exp uses a direct integer-fixpoint series enclosure (no range reduction, no
log2 constant), sqrt uses integer square roots plus exact breakpoint
squaring, and the two perturbation-lemma suites check their inequalities on
rigorous interval enclosures.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .budget import invsqrt_delta, softmax_delta, sqrt_bounds
from .elementary import f_exp, f_sqrt
from .errors import DomainError
from .pfloat import PFloat, f_cmp, f_sum_blocks, f_sum_oracle, float_to_rat, partition_blocks, round_p
from .rational import RAT_ZERO, Rat, rat_sum

SUITES = ("round", "sum", "exp", "sqrt", "softmax-delta", "invsqrt-delta")
DEFAULT_CASES = {"round": 0, "sum": 10000, "exp": 1000, "sqrt": 1000, "softmax-delta": 1000, "invsqrt-delta": 1000}
DEFAULT_P = {"round": 3, "sum": 3, "exp": 8, "sqrt": 8}


@dataclass
class CaseFailure:
    kind: str
    case_seed: str
    detail: str

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "case_seed": self.case_seed, "detail": self.detail}


@dataclass
class SuiteResult:
    suite: str
    p: Optional[int]
    cases: int
    failures: list[CaseFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json_dict(self) -> dict:
        return {
            "suite": self.suite,
            "p": self.p,
            "cases": self.cases,
            "failures": sorted((f.to_json_dict() for f in self.failures), key=lambda d: d["case_seed"]),
            "passed": self.passed,
        }


# --------------------------------------------------------------------------
# oracle-side enclosures (independent of elementary.py's machinery)
# --------------------------------------------------------------------------


def exp_enclosure(x: Rat, bits: int) -> tuple[Rat, Rat]:
    """Rigorous lo <= exp(x) <= hi with relative width about 2^-bits.

    Direct series on |x| in fixed point with directed rounding per step
    (floors only ever lose value, ceilings only ever gain), then an exact
    interval inversion for negative arguments.  The large fixed-point shift
    keeps the enclosure relatively tight even when exp(x) is tiny.
    """
    shift = bits + 128
    one = 1 << shift
    a, b = abs(x.num), x.den
    lo = hi = one
    t_lo = t_hi = one
    i = 1
    while True:
        t_lo = t_lo * a // (b * i)
        t_hi = -((-t_hi * a) // (b * i))
        lo += t_lo
        hi += t_hi
        i += 1
        # stop once terms are down to a few fixed-point units AND at least
        # halving per step; the remaining tail is then below 2*t_hi + 2
        if t_hi <= 4 and i * b > 2 * a:
            hi += 2 * t_hi + 2
            break
    if x.num >= 0:
        return Rat(lo, one), Rat(hi, one)
    inv_lo = (one * one) // hi
    inv_hi = (one * one) // lo + 1
    return Rat(inv_lo, one), Rat(inv_hi, one)


def sqrt_round_oracle(x: PFloat) -> PFloat:
    """round_p(sqrt(x)) by bounded search plus exact breakpoint squaring."""
    p = x.p
    if x.m < 0:
        raise DomainError("sqrt of a negative float")
    if x.m == 0:
        return PFloat(0, 0, p)
    m, e = x.m, x.e
    big_l = m.bit_length() - 1 + e  # floor(log2 value)
    t = big_l // 2  # floor(log2 sqrt(value))
    e_r = t - (p - 1)
    sh = e - 2 * e_r

    def sq_le(f: int) -> bool:
        # f^2 * 2^(2*e_r) <= m * 2^e
        if sh >= 0:
            return f * f <= m << sh
        return (f * f) << -sh <= m

    lo, hi = (1 << (p - 1)) - 1, 1 << p  # invariant: sq_le(lo), not sq_le(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if sq_le(mid):
            lo = mid
        else:
            hi = mid
    f = lo
    # breakpoint (f + 1/2) * 2^e_r: compare (2f+1)^2 * 2^(2*e_r - 2) with m * 2^e
    sh2 = sh + 2
    bp_sq = (2 * f + 1) ** 2
    if sh2 >= 0:
        c = (bp_sq > m << sh2) - (bp_sq < m << sh2)
    else:
        c = (bp_sq << -sh2 > m) - (bp_sq << -sh2 < m)
    if c > 0:
        m_r = f
    elif c < 0:
        m_r = f + 1
    else:
        m_r = f if f % 2 == 0 else f + 1
    if m_r == 1 << p:
        return PFloat(1 << (p - 1), e_r + 1, p)
    return PFloat(m_r, e_r, p)


# --------------------------------------------------------------------------
# case generators
# --------------------------------------------------------------------------


def _case_rng(seed: int, suite: str, idx: int) -> random.Random:
    return random.Random(f"{seed}:{suite}:{idx}")


def _rand_sig(rng: random.Random, p: int) -> int:
    return rng.randint(1 << (p - 1), (1 << p) - 1) * rng.choice((1, -1))


def _sum_case(rng: random.Random, p: int) -> list[PFloat]:
    kind = rng.randrange(25)
    if kind < 19:
        # clustered random: a few exponent clusters, spacing around the threshold
        n = rng.randint(2, 64)
        theta = 2 * p + (n - 1).bit_length()
        ncl = rng.randint(1, 4)
        centers = []
        base = rng.randint(-2 * theta, 2 * theta)
        for _ in range(ncl):
            centers.append(base)
            base += rng.randint(theta, theta + 2 * p)
        return [
            PFloat(_rand_sig(rng, p), rng.choice(centers) + rng.randint(0, theta - 1), p)
            for _ in range(n)
        ]
    if kind < 21:
        # leading block summing exactly to a breakpoint, optional far blocks
        e = rng.randint(-8, 8)
        m1 = rng.randint(1 << (p - 1), (1 << p) - 2)
        sign = rng.choice((1, -1))
        xs = [PFloat(sign * m1, e, p), PFloat(sign * (1 << (p - 1)), e - p, p)]
        n_far = rng.randint(0, 2)
        theta = 2 * p + (len(xs) + n_far - 1).bit_length()
        drop = e - p - theta
        for _ in range(n_far):
            drop -= rng.randint(0, p)
            xs.append(PFloat(_rand_sig(rng, p), drop, p))
            drop -= theta
        rng.shuffle(xs)
        return xs
    if kind < 23:
        # binade-bottom straddle: lead pair cancels to one bit, far mass lands
        # within a few units of the lower breakpoint distance 2^(e-p-1); with
        # a deep third block the far mass hits it exactly and the third block
        # settles which side
        big_l = rng.randint(3, 5)
        deep = rng.randrange(3) == 0
        n_far = rng.randint((1 << (big_l - 1)) + 1, (1 << big_l) - (3 if deep else 2))
        theta = 2 * p + big_l
        e = rng.randint(-8, 8)
        sign = rng.choice((1, -1))
        m1 = rng.randint((1 << (p - 1)) + 1, (1 << p) - 1)
        xs = [PFloat(sign * m1, e, p), PFloat(-sign * (m1 - 1), e, p)]
        units = (1 << (p + big_l - 1)) + (0 if deep else rng.randint(-3, 3))
        base, extra = divmod(units, n_far)
        cs = [base + 1] * extra + [base] * (n_far - extra)
        if all((1 << (p - 1)) <= c < (1 << p) for c in cs):
            xs += [PFloat(-sign * c, e - theta, p) for c in cs]
        else:
            xs.append(PFloat(-sign * (1 << (p - 1)), e - theta, p))
        if deep:
            xs.append(PFloat(rng.choice((1, -1)) * (1 << (p - 1)), e - 2 * theta, p))
        rng.shuffle(xs)
        return xs
    # cancellation: leading block collapses to a one-or-two-bit sum (or to zero)
    e = rng.randint(-8, 8)
    m1 = rng.randint((1 << (p - 1)) + 1, (1 << p) - 1)
    residue = rng.randint(0, min(3, m1 - (1 << (p - 1))))
    xs = [PFloat(m1, e, p), PFloat(-(m1 - residue), e, p)]
    n_far = rng.randint(0 if residue else 1, 2)
    theta = 2 * p + (len(xs) + n_far - 1).bit_length()
    drop = e - 2 * p - theta
    for _ in range(n_far):
        xs.append(PFloat(_rand_sig(rng, p), drop, p))
        drop -= theta + rng.randint(0, p)
    rng.shuffle(xs)
    return xs


# --------------------------------------------------------------------------
# suites
# --------------------------------------------------------------------------


def _run_round(p: int) -> SuiteResult:
    """Exhaustive midpoint/evenness/idempotence/monotonicity over e in [-8, 8]."""
    res = SuiteResult("round", p, 0)
    floats = [
        PFloat(m, e, p)
        for e in range(-8, 9)
        for m in range(1 << (p - 1), 1 << p)
    ]
    floats.sort(key=lambda x: float_to_rat(x))
    prev_out = None
    for a, b in zip(floats, floats[1:]):
        ra, rb = float_to_rat(a), float_to_rat(b)
        mid = (ra + rb) * Rat(1, 2)
        step = (rb - ra) * Rat(1, 8)
        for sgn in (1, -1):
            for probe, expect_even in (
                (mid, True),
                (mid - step, False),
                (mid + step, False),
                (ra, False),
            ):
                val = probe if sgn > 0 else -probe
                got = round_p(val, p)
                res.cases += 1
                if expect_even and got.m % 2 != 0:
                    res.failures.append(
                        CaseFailure("midpoint-odd", f"{p}:{val}", f"round_p({val}) = {got}")
                    )
                if got != round_p(float_to_rat(got), p):
                    res.failures.append(
                        CaseFailure("not-idempotent", f"{p}:{val}", f"{got} re-rounds differently")
                    )
        # monotone over the dense probe grid around this gap
        grid = [ra, mid - step, mid, mid + step, rb]
        outs = [round_p(v, p) for v in grid]
        for u, v in zip(outs, outs[1:]):
            if f_cmp(u, v).value > 0:
                res.failures.append(CaseFailure("not-monotone", f"{p}:{ra}", f"{u} > {v}"))
        if prev_out is not None and f_cmp(prev_out, outs[0]).value > 0:
            res.failures.append(CaseFailure("not-monotone", f"{p}:{ra}", "across gaps"))
        prev_out = outs[-1]
    return res


def _run_sum(p: int, cases: int, seed: int) -> SuiteResult:
    res = SuiteResult("sum", p, cases)
    for idx in range(cases):
        rng = _case_rng(seed, "sum", idx)
        tag = f"{seed}:sum:{idx}"
        xs = _sum_case(rng, p)
        got = f_sum_blocks(xs)
        want = f_sum_oracle(xs)
        if got != want:
            res.failures.append(CaseFailure("mismatch", tag, f"blocks={got} oracle={want}"))
        # remainder gap bound: all non-leading blocks together stay below
        # a quarter ulp of the leading block-sum's anchor scale
        nonzero = [x for x in xs if x.m != 0]
        if not nonzero:
            continue
        blocks = partition_blocks(nonzero)
        sums = []
        for block in blocks:
            anchor = min(nonzero[i].e for i in block)
            total = sum(nonzero[i].m << (nonzero[i].e - anchor) for i in block)
            sums.append((total, anchor))
        lead_at = next((k for k, (m, _) in enumerate(sums) if m), None)
        if lead_at is None:
            continue
        e1 = sums[lead_at][1]
        rest = RAT_ZERO
        for k, block in enumerate(blocks):
            if k == lead_at:
                continue
            for i in block:
                rest = rest + float_to_rat(nonzero[i])
        bound = Rat(1, 1 << (p - e1)) if e1 < p else Rat(1 << (e1 - p))
        if not abs(rest) < bound:
            res.failures.append(CaseFailure("gap", tag, f"|r|={rest} !< 2^({e1}-{p})"))
    return res


def _run_exp(p: int, cases: int, seed: int) -> SuiteResult:
    res = SuiteResult("exp", p, cases)
    tol = Rat(1, 1 << p)
    for idx in range(cases):
        rng = _case_rng(seed, "exp", idx)
        tag = f"{seed}:exp:{idx}"
        m = _rand_sig(rng, p)
        x = PFloat(m, rng.randint(-p - 2, 6 - p), p)  # values within about [-64, 64]
        y = f_exp(x)
        fy = float_to_rat(y)
        lo, hi = exp_enclosure(float_to_rat(x), 4 * p)
        worst = max(abs(fy - lo), abs(fy - hi))
        if not worst <= tol * lo:
            res.failures.append(CaseFailure("rel-error", tag, f"exp({x}) = {y} deviates"))
        if idx % 8 == 0:
            x2 = PFloat(_rand_sig(rng, p), rng.randint(-p - 2, 6 - p), p)
            a, b = (x, x2) if f_cmp(x, x2).value <= 0 else (x2, x)
            if f_cmp(f_exp(a), f_exp(b)).value > 0:
                res.failures.append(CaseFailure("not-monotone", tag, f"exp({a}) > exp({b})"))
    return res


def _run_sqrt(p: int, cases: int, seed: int) -> SuiteResult:
    res = SuiteResult("sqrt", p, cases)
    for idx in range(cases):
        rng = _case_rng(seed, "sqrt", idx)
        tag = f"{seed}:sqrt:{idx}"
        m = rng.randint(1 << (p - 1), (1 << p) - 1)
        x = PFloat(m, rng.randint(-64, 64), p)
        got = f_sqrt(x)
        want = sqrt_round_oracle(x)
        if got != want:
            res.failures.append(CaseFailure("mismatch", tag, f"sqrt({x}) = {got}, oracle {want}"))
    return res


def _rand_frac(rng: random.Random, bound: Rat) -> Rat:
    num = rng.randint(-16, 16)
    return bound * Rat(num, 16)


def _run_softmax_delta(cases: int, seed: int) -> SuiteResult:
    """The perturbed-softmax inequality: score errors and exp relative errors
    within delta keep every weight within 16*delta of the true softmax."""
    res = SuiteResult("softmax-delta", None, cases)
    for idx in range(cases):
        rng = _case_rng(seed, "softmax-delta", idx)
        tag = f"{seed}:softmax-delta:{idx}"
        n = rng.randint(2, 6)
        scores = [Rat(rng.randint(-8, 8), rng.randint(1, 8)) for _ in range(n)]
        eps = Rat(rng.randint(1, 15), 1 << rng.randint(0, 12))
        delta = softmax_delta(eps)
        hs = [_rand_frac(rng, delta) for _ in range(n)]
        etas = [_rand_frac(rng, delta) for _ in range(n)]
        if not _softmax_dev_within(scores, hs, etas, delta * Rat(16), 96):
            if not _softmax_dev_within(scores, hs, etas, delta * Rat(16), 256):
                res.failures.append(CaseFailure("bound", tag, "deviation above 16*delta"))
    return res


def _softmax_dev_within(scores, hs, etas, limit: Rat, bits: int) -> bool:
    true_enc = [exp_enclosure(s, bits) for s in scores]
    pert_enc = []
    for s, h, eta in zip(scores, hs, etas):
        lo, hi = exp_enclosure(s + h, bits)
        one = Rat(1)
        pert_enc.append(((one + eta) * lo, (one + eta) * hi))
    t_lo = rat_sum([lo for lo, _ in true_enc])
    t_hi = rat_sum([hi for _, hi in true_enc])
    p_lo = rat_sum([lo for lo, _ in pert_enc])
    p_hi = rat_sum([hi for _, hi in pert_enc])
    for (ylo, yhi), (qlo, qhi) in zip(true_enc, pert_enc):
        y_int = (ylo / t_hi, yhi / t_lo)
        q_int = (qlo / p_hi, qhi / p_lo)
        dev = max(abs(q_int[1] - y_int[0]), abs(y_int[1] - q_int[0]))
        if not dev <= limit:
            return False
    return True


def _run_invsqrt_delta(cases: int, seed: int) -> SuiteResult:
    """The inverse-sqrt inequality: input error within the planned delta and
    sqrt relative error within the site's production envelope keep 1/sqrt
    within eps.

    The budgeted sqrt site always carries at least two relative bits, so its
    relative error is bounded by min(delta/2, 1/4); delta itself can exceed 1
    (the c/2 clamp at large c), where a full-delta relative perturbation
    would be meaningless (1 + eta <= 0).
    """
    res = SuiteResult("invsqrt-delta", None, cases)
    c_choices = (Rat(1, 4), Rat(1), Rat(4))
    for idx in range(cases):
        rng = _case_rng(seed, "invsqrt-delta", idx)
        tag = f"{seed}:invsqrt-delta:{idx}"
        c = c_choices[idx % 3]
        x = c + Rat(rng.randint(0, 64), rng.randint(1, 8))
        eps = Rat(rng.randint(1, 15), 1 << rng.randint(0, 12))
        delta = invsqrt_delta(c, eps)
        h = _rand_frac(rng, delta)
        eta = _rand_frac(rng, min(delta * Rat(1, 2), Rat(1, 4)))
        if not _invsqrt_dev_within(x, h, eta, eps, 96):
            if not _invsqrt_dev_within(x, h, eta, eps, 256):
                res.failures.append(CaseFailure("bound", tag, f"c={c} x={x} deviation above eps"))
    return res


def _invsqrt_dev_within(x: Rat, h: Rat, eta: Rat, eps: Rat, bits: int) -> bool:
    one = Rat(1)
    s_lo, s_hi = sqrt_bounds(x, bits)
    y_int = (one / s_hi, one / s_lo)
    t_lo, t_hi = sqrt_bounds(x + h, bits)
    q_int = (one / (t_hi * (one + eta)), one / (t_lo * (one + eta)))
    dev = max(abs(q_int[1] - y_int[0]), abs(y_int[1] - q_int[0]))
    return dev <= eps


# --------------------------------------------------------------------------
# entry points
# --------------------------------------------------------------------------


def run_suite(name: str, p: Optional[int] = None, cases: Optional[int] = None, seed: int = 0) -> SuiteResult:
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r} (choose from {', '.join(SUITES)})")
    if cases is None:
        cases = DEFAULT_CASES[name]
    if p is None:
        p = DEFAULT_P.get(name)
    if name == "round":
        return _run_round(p)
    if name == "sum":
        return _run_sum(p, cases, seed)
    if name == "exp":
        return _run_exp(p, cases, seed)
    if name == "sqrt":
        return _run_sqrt(p, cases, seed)
    if name == "softmax-delta":
        return _run_softmax_delta(cases, seed)
    return _run_invsqrt_delta(cases, seed)


def run_all(p: Optional[int] = None, cases: Optional[int] = None, seed: int = 0) -> list[SuiteResult]:
    return [run_suite(name, p=p, cases=cases, seed=seed) for name in SUITES]
