"""Transformer encoder description: typed IR, strict JSON form, fixtures.

Every numeric parameter is an exact rational, serialized as a canonical
string ("a", or "a/b" with b >= 2 and gcd 1).  Loading is strict: unknown
fields, malformed or non-canonical rationals, shape mismatches, and a
nonpositive layernorm floor are all rejected with the offending field path.
An optional "param_bits" field restricts every parameter to numerator in
[-2^bits, 2^bits) and denominator in [1, 2^bits).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import DomainError, ModelLoadError
from .rational import RAT_ZERO, Rat

Vector = tuple[Rat, ...]
Matrix = tuple[Vector, ...]

HEAD_KINDS = ("average_hard", "softmax")
MASKINGS = ("none", "causal")
ACTIVATIONS = ("relu", "identity")
POSITION_KINDS = ("none", "scaled_index", "inverse_index", "table")
FORMAT_VERSION = 1


@dataclass(frozen=True)
class AttentionHead:
    w_q: Matrix
    w_k: Matrix
    w_v: Matrix
    w_o: Matrix
    kind: str
    masking: str


@dataclass(frozen=True)
class FFNN:
    w1: Matrix
    b1: Vector
    activation: str
    w2: Matrix
    b2: Vector


@dataclass(frozen=True)
class LayerNorm:
    gamma: Vector
    beta: Vector
    c: Rat  # strictly positive variance floor


@dataclass(frozen=True)
class Layer:
    heads: tuple[AttentionHead, ...]
    ffnn: FFNN
    layernorm_attn: Optional[LayerNorm]
    layernorm_ffnn: Optional[LayerNorm]
    residual_attn: bool
    residual_ffnn: bool


@dataclass(frozen=True)
class PositionRule:
    kind: str
    coordinate: int = 0
    n_max: int = 0
    vectors: Optional[tuple[Vector, ...]] = None


@dataclass(frozen=True)
class OutputHead:
    weights: Vector
    bias: Rat


@dataclass(frozen=True)
class Model:
    alphabet: tuple[str, ...]
    dim: int
    token_embeddings: dict[str, Vector]
    position_rule: PositionRule
    layers: tuple[Layer, ...]
    output_head: OutputHead
    param_bits: Optional[int] = None


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


class _Loader:
    def __init__(self, param_bits: Optional[int]):
        self.param_bits = param_bits

    def fail(self, path: str, message: str) -> ModelLoadError:
        return ModelLoadError(path, message)

    def keys(self, node, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
        if not isinstance(node, dict):
            raise self.fail(path, f"expected an object, got {type(node).__name__}")
        for key in node:
            if key not in required and key not in optional:
                raise self.fail(f"{path}.{key}" if path else key, "unknown field")
        for key in required:
            if key not in node:
                raise self.fail(path, f"missing field {key!r}")

    def rat(self, node, path: str) -> Rat:
        if not isinstance(node, str):
            raise self.fail(path, "rationals must be strings")
        try:
            value = Rat.from_string(node)
        except DomainError as exc:
            raise self.fail(path, str(exc)) from None
        if str(value) != node:
            raise self.fail(path, f"non-canonical rational {node!r}")
        if self.param_bits is not None:
            bound = 1 << self.param_bits
            if not (-bound <= value.num < bound and value.den < bound):
                raise self.fail(path, f"rational exceeds the {self.param_bits}-bit parameter range")
        return value

    def vector(self, node, path: str, dim: int) -> Vector:
        if not isinstance(node, list) or len(node) != dim:
            raise self.fail(path, f"expected a list of {dim} rationals")
        return tuple(self.rat(v, f"{path}[{i}]") for i, v in enumerate(node))

    def matrix(self, node, path: str, rows: int, cols: int) -> Matrix:
        if not isinstance(node, list) or len(node) != rows:
            raise self.fail(path, f"expected {rows} rows")
        return tuple(self.vector(row, f"{path}[{r}]", cols) for r, row in enumerate(node))

    def boolean(self, node, path: str) -> bool:
        if not isinstance(node, bool):
            raise self.fail(path, "expected true or false")
        return node


def parse_model(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelLoadError("", f"invalid JSON: {exc}") from None

    probe = _Loader(None)
    probe.keys(
        doc,
        "",
        ("format_version", "alphabet", "dim", "token_embeddings", "position_rule", "layers", "output_head"),
        ("param_bits",),
    )
    if doc["format_version"] != FORMAT_VERSION:
        raise ModelLoadError("format_version", f"unsupported version {doc['format_version']!r}")

    param_bits = None
    if "param_bits" in doc:
        param_bits = doc["param_bits"]
        if not isinstance(param_bits, int) or isinstance(param_bits, bool) or param_bits < 1:
            raise ModelLoadError("param_bits", "expected a positive integer")
    ld = _Loader(param_bits)

    alphabet = doc["alphabet"]
    if (
        not isinstance(alphabet, list)
        or not alphabet
        or any(not isinstance(s, str) or len(s) != 1 for s in alphabet)
        or len(set(alphabet)) != len(alphabet)
    ):
        raise ModelLoadError("alphabet", "expected distinct single-character symbols")
    alphabet = tuple(alphabet)

    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ModelLoadError("dim", "expected a positive integer")

    emb_node = doc["token_embeddings"]
    if not isinstance(emb_node, dict) or set(emb_node) != set(alphabet):
        raise ModelLoadError("token_embeddings", "keys must match the alphabet exactly")
    embeddings = {sym: ld.vector(emb_node[sym], f"token_embeddings.{sym}", dim) for sym in alphabet}

    rule = _parse_position_rule(ld, doc["position_rule"], dim)
    layers_node = doc["layers"]
    if not isinstance(layers_node, list):
        raise ModelLoadError("layers", "expected a list")
    layers = tuple(_parse_layer(ld, node, f"layers[{i}]", dim) for i, node in enumerate(layers_node))

    head_node = doc["output_head"]
    ld.keys(head_node, "output_head", ("weights", "bias"))
    output_head = OutputHead(
        ld.vector(head_node["weights"], "output_head.weights", dim),
        ld.rat(head_node["bias"], "output_head.bias"),
    )
    return Model(alphabet, dim, embeddings, rule, layers, output_head, param_bits)


def _parse_position_rule(ld: _Loader, node, dim: int) -> PositionRule:
    path = "position_rule"
    if not isinstance(node, dict) or "kind" not in node:
        raise ld.fail(path, "expected an object with a 'kind' field")
    kind = node["kind"]
    if kind not in POSITION_KINDS:
        raise ld.fail(f"{path}.kind", f"unknown kind {kind!r}")
    if kind == "none":
        ld.keys(node, path, ("kind",))
        return PositionRule("none")
    if kind == "table":
        ld.keys(node, path, ("kind", "n_max", "vectors"))
        n_max = node["n_max"]
        if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 1:
            raise ld.fail(f"{path}.n_max", "expected a positive integer")
        vectors = node["vectors"]
        if not isinstance(vectors, list) or len(vectors) != n_max:
            raise ld.fail(f"{path}.vectors", f"expected {n_max} vectors")
        table = tuple(ld.vector(v, f"{path}.vectors[{i}]", dim) for i, v in enumerate(vectors))
        return PositionRule("table", n_max=n_max, vectors=table)
    ld.keys(node, path, ("kind", "coordinate"))
    coord = node["coordinate"]
    if not isinstance(coord, int) or isinstance(coord, bool) or not 0 <= coord < dim:
        raise ld.fail(f"{path}.coordinate", f"expected an index in [0, {dim})")
    return PositionRule(kind, coordinate=coord)


def _parse_layer(ld: _Loader, node, path: str, dim: int) -> Layer:
    ld.keys(
        node,
        path,
        ("heads", "ffnn", "layernorm_attn", "layernorm_ffnn", "residual_attn", "residual_ffnn"),
    )
    heads_node = node["heads"]
    if not isinstance(heads_node, list) or not heads_node:
        raise ld.fail(f"{path}.heads", "expected a nonempty list")
    heads = tuple(_parse_head(ld, h, f"{path}.heads[{i}]", dim) for i, h in enumerate(heads_node))
    ffnn = _parse_ffnn(ld, node["ffnn"], f"{path}.ffnn", dim)
    ln_attn = _parse_layernorm(ld, node["layernorm_attn"], f"{path}.layernorm_attn", dim)
    ln_ffnn = _parse_layernorm(ld, node["layernorm_ffnn"], f"{path}.layernorm_ffnn", dim)
    return Layer(
        heads,
        ffnn,
        ln_attn,
        ln_ffnn,
        ld.boolean(node["residual_attn"], f"{path}.residual_attn"),
        ld.boolean(node["residual_ffnn"], f"{path}.residual_ffnn"),
    )


def _parse_head(ld: _Loader, node, path: str, dim: int) -> AttentionHead:
    ld.keys(node, path, ("w_q", "w_k", "w_v", "w_o", "kind", "masking"))
    kind = node["kind"]
    if kind not in HEAD_KINDS:
        raise ld.fail(f"{path}.kind", f"unknown kind {kind!r}")
    masking = node["masking"]
    if masking not in MASKINGS:
        raise ld.fail(f"{path}.masking", f"unknown masking {masking!r}")
    return AttentionHead(
        ld.matrix(node["w_q"], f"{path}.w_q", dim, dim),
        ld.matrix(node["w_k"], f"{path}.w_k", dim, dim),
        ld.matrix(node["w_v"], f"{path}.w_v", dim, dim),
        ld.matrix(node["w_o"], f"{path}.w_o", dim, dim),
        kind,
        masking,
    )


def _parse_ffnn(ld: _Loader, node, path: str, dim: int) -> FFNN:
    ld.keys(node, path, ("w1", "b1", "activation", "w2", "b2"))
    activation = node["activation"]
    if activation not in ACTIVATIONS:
        raise ld.fail(f"{path}.activation", f"unknown activation {activation!r}")
    w1 = node["w1"]
    if not isinstance(w1, list) or not w1:
        raise ld.fail(f"{path}.w1", "expected a nonempty matrix")
    hidden = len(w1)
    return FFNN(
        ld.matrix(w1, f"{path}.w1", hidden, dim),
        ld.vector(node["b1"], f"{path}.b1", hidden),
        activation,
        ld.matrix(node["w2"], f"{path}.w2", dim, hidden),
        ld.vector(node["b2"], f"{path}.b2", dim),
    )


def _parse_layernorm(ld: _Loader, node, path: str, dim: int) -> Optional[LayerNorm]:
    if node is None:
        return None
    ld.keys(node, path, ("gamma", "beta", "c"))
    c = ld.rat(node["c"], f"{path}.c")
    if c.num <= 0:
        raise ld.fail(f"{path}.c", "variance floor must be strictly positive")
    return LayerNorm(
        ld.vector(node["gamma"], f"{path}.gamma", dim),
        ld.vector(node["beta"], f"{path}.beta", dim),
        c,
    )


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def _vec(v: Vector) -> list[str]:
    return [str(x) for x in v]


def _mat(m: Matrix) -> list[list[str]]:
    return [_vec(row) for row in m]


def serialize_model(model: Model) -> str:
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "alphabet": list(model.alphabet),
        "dim": model.dim,
        "token_embeddings": {sym: _vec(model.token_embeddings[sym]) for sym in model.alphabet},
        "position_rule": _rule_doc(model.position_rule),
        "layers": [_layer_doc(layer) for layer in model.layers],
        "output_head": {"weights": _vec(model.output_head.weights), "bias": str(model.output_head.bias)},
    }
    if model.param_bits is not None:
        doc["param_bits"] = model.param_bits
    return json.dumps(doc, indent=2, sort_keys=True)


def _rule_doc(rule: PositionRule) -> dict:
    if rule.kind == "none":
        return {"kind": "none"}
    if rule.kind == "table":
        return {"kind": "table", "n_max": rule.n_max, "vectors": [_vec(v) for v in rule.vectors]}
    return {"kind": rule.kind, "coordinate": rule.coordinate}


def _layer_doc(layer: Layer) -> dict:
    return {
        "heads": [
            {
                "w_q": _mat(h.w_q),
                "w_k": _mat(h.w_k),
                "w_v": _mat(h.w_v),
                "w_o": _mat(h.w_o),
                "kind": h.kind,
                "masking": h.masking,
            }
            for h in layer.heads
        ],
        "ffnn": {
            "w1": _mat(layer.ffnn.w1),
            "b1": _vec(layer.ffnn.b1),
            "activation": layer.ffnn.activation,
            "w2": _mat(layer.ffnn.w2),
            "b2": _vec(layer.ffnn.b2),
        },
        "layernorm_attn": _ln_doc(layer.layernorm_attn),
        "layernorm_ffnn": _ln_doc(layer.layernorm_ffnn),
        "residual_attn": layer.residual_attn,
        "residual_ffnn": layer.residual_ffnn,
    }


def _ln_doc(ln: Optional[LayerNorm]) -> Optional[dict]:
    if ln is None:
        return None
    return {"gamma": _vec(ln.gamma), "beta": _vec(ln.beta), "c": str(ln.c)}


# --------------------------------------------------------------------------
# position embeddings
# --------------------------------------------------------------------------


def position_embedding(rule: PositionRule, i: int, n: int, dim: int) -> Vector:
    """Positional vector for 1-based position i of an n-token input."""
    if not 1 <= i <= n:
        raise DomainError(f"position {i} outside [1, {n}]")
    if rule.kind == "none":
        return tuple([RAT_ZERO] * dim)
    if rule.kind == "table":
        if n > rule.n_max:
            raise DomainError(f"input length {n} exceeds the table's n_max={rule.n_max}")
        return rule.vectors[i - 1]
    value = Rat(i, n) if rule.kind == "scaled_index" else Rat(1, i)
    vec = [RAT_ZERO] * dim
    vec[rule.coordinate] = value
    return tuple(vec)


# --------------------------------------------------------------------------
# fixtures
# --------------------------------------------------------------------------


def _zeros(rows: int, cols: int) -> Matrix:
    return tuple(tuple([RAT_ZERO] * cols) for _ in range(rows))


def _identity(dim: int) -> Matrix:
    return tuple(tuple(Rat(1) if r == c else RAT_ZERO for c in range(dim)) for r in range(dim))


def _uniform_attention_model(kind: str, embeddings: dict[str, Vector], rule: PositionRule, head_weights: Vector, bias: Rat) -> Model:
    dim = len(head_weights)
    head = AttentionHead(_zeros(dim, dim), _zeros(dim, dim), _identity(dim), _identity(dim), kind, "none")
    ffnn = FFNN(_zeros(dim, dim), tuple([RAT_ZERO] * dim), "relu", _zeros(dim, dim), tuple([RAT_ZERO] * dim))
    layer = Layer((head,), ffnn, None, None, residual_attn=False, residual_ffnn=True)
    return Model(("0", "1"), dim, embeddings, rule, (layer,), OutputHead(head_weights, bias))


def build_majority_model() -> Model:
    """One average-hard layer computing (#ones / n) - 1/2 exactly.

    All scores are equal, so hard attention averages the token-indicator
    values; the zeroed feed-forward block plus its residual is the identity.
    """
    emb = {"0": (RAT_ZERO, RAT_ZERO), "1": (Rat(1), RAT_ZERO)}
    return _uniform_attention_model("average_hard", emb, PositionRule("none"), (Rat(1), RAT_ZERO), Rat(-1, 2))


def build_softmax_uniform_model() -> Model:
    """Softmax twin of the majority fixture; equal scores keep it closed-form."""
    emb = {"0": (RAT_ZERO, RAT_ZERO), "1": (Rat(1), RAT_ZERO)}
    return _uniform_attention_model("softmax", emb, PositionRule("none"), (Rat(1), RAT_ZERO), Rat(-1, 2))


def build_inverse_index_model() -> Model:
    """Uniform averaging over values 1/i; output is the n-th harmonic mean term.

    Summing n rationals with pairwise-coprime-ish denominators makes the
    reduced denominator grow like lcm(1..n), a near-linear bit-growth fixture.
    """
    emb = {"0": (RAT_ZERO, RAT_ZERO), "1": (RAT_ZERO, RAT_ZERO)}
    rule = PositionRule("inverse_index", coordinate=0)
    return _uniform_attention_model("average_hard", emb, rule, (Rat(1), RAT_ZERO), RAT_ZERO)


BUILTIN_MODELS: dict[str, Callable[[], Model]] = {
    "majority": build_majority_model,
    "softmax-uniform": build_softmax_uniform_model,
    "inverse-index": build_inverse_index_model,
}


def load_model(source: str) -> Model:
    """Load a model from a builtin fixture name or a JSON file path."""
    if source in BUILTIN_MODELS:
        return BUILTIN_MODELS[source]()
    if not os.path.exists(source):
        raise ModelLoadError("", f"no such model file or builtin fixture: {source!r}")
    with open(source, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())
