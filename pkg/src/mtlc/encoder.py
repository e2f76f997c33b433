"""Shared representation network: embeddings, pre-norm transformer blocks,
[CLS] pooling, and the per-task classification heads.

All parameters live in one flat name -> Tensor map so the optimizer and the
checkpoint format can address them uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ContractError, ShapeError
from .numcore import (
    Tensor,
    add,
    concat_cols,
    dropout,
    gather_rows,
    layer_norm_rows,
    matmul,
    relu,
    reshape,
    scale,
    slice_cols,
    slice_rows,
    softmax_rows,
    stream,
    tanh,
    transpose,
    truncated_normal,
)
from .text import TokenSeq

MASK_BIAS = -1e9
INIT_STD = 0.02


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ffn: int = 128
    max_len: int = 64
    dropout_p: float = 0.4

    def __post_init__(self):
        for field_name in ("vocab_size", "d_model", "n_heads", "n_layers", "d_ffn", "max_len"):
            if getattr(self, field_name) < 1:
                raise ContractError(f"{field_name} must be >= 1, got {getattr(self, field_name)}")
        if self.d_model % self.n_heads != 0:
            raise ContractError(
                f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})"
            )
        if not 0.0 <= self.dropout_p < 1.0:
            raise ContractError(f"dropout_p must be in [0, 1), got {self.dropout_p}")


@dataclass(frozen=True)
class HeadSpec:
    task: str
    n_classes: int
    hidden: int = 128

    def __post_init__(self):
        if self.n_classes < 2:
            raise ContractError(f"a head needs >= 2 classes, got {self.n_classes}")
        if self.hidden < 1:
            raise ContractError(f"head hidden width must be >= 1, got {self.hidden}")


def param_shapes(config: EncoderConfig, heads: Sequence[HeadSpec]) -> dict[str, tuple]:
    d, f = config.d_model, config.d_ffn
    shapes: dict[str, tuple] = {
        "tok_emb": (config.vocab_size, d),
        "pos_emb": (config.max_len, d),
    }
    for i in range(config.n_layers):
        p = f"layer{i}."
        shapes[p + "wq"] = (d, d)
        shapes[p + "wk"] = (d, d)
        shapes[p + "wv"] = (d, d)
        shapes[p + "wo"] = (d, d)
        shapes[p + "ffn_w1"] = (d, f)
        shapes[p + "ffn_b1"] = (f,)
        shapes[p + "ffn_w2"] = (f, d)
        shapes[p + "ffn_b2"] = (d,)
        shapes[p + "norm1_g"] = (d,)
        shapes[p + "norm1_b"] = (d,)
        shapes[p + "norm2_g"] = (d,)
        shapes[p + "norm2_b"] = (d,)
    shapes["final_norm_g"] = (d,)
    shapes["final_norm_b"] = (d,)
    shapes["pooler_w"] = (d, d)
    shapes["pooler_b"] = (d,)
    for head in heads:
        p = f"head.{head.task}."
        shapes[p + "w_hidden"] = (d, head.hidden)
        shapes[p + "b_hidden"] = (head.hidden,)
        shapes[p + "w_out"] = (head.hidden, head.n_classes)
        shapes[p + "b_out"] = (head.n_classes,)
    return shapes


def param_names(config: EncoderConfig, heads: Sequence[HeadSpec]) -> list[str]:
    return sorted(param_shapes(config, heads))


def param_count(config: EncoderConfig, heads: Sequence[HeadSpec]) -> int:
    """Closed-form scalar parameter count for (config, heads)."""
    d, f, n_l = config.d_model, config.d_ffn, config.n_layers
    total = config.vocab_size * d + config.max_len * d
    total += n_l * (4 * d * d + d * f + f + f * d + d + 4 * d)
    total += 2 * d  # final norm
    total += d * d + d  # pooler
    for head in heads:
        total += d * head.hidden + head.hidden + head.hidden * head.n_classes + head.n_classes
    return total


def init_params(
    config: EncoderConfig, heads: Sequence[HeadSpec], seed: int, prefix: str = ""
) -> dict[str, Tensor]:
    """Fresh parameters: truncated normal (std 0.02) matrices and embeddings,
    zero biases, unit normalization gains.

    Each tensor draws from its own named stream, so adding or removing heads
    never shifts the initialization of the remaining tensors.
    """
    params: dict[str, Tensor] = {}
    for name, shape in param_shapes(config, heads).items():
        full = prefix + name
        base = name.rsplit(".", 1)[-1]
        if base.endswith("_g"):
            data = np.ones(shape)
        elif base.startswith("b_") or base.endswith(("_b", "_b1", "_b2")):
            data = np.zeros(shape)
        else:
            data = truncated_normal(stream(seed, f"init/{full}"), shape, INIT_STD)
        params[full] = Tensor(data, requires_grad=True, name=full)
    return params


def head_view(params: Mapping[str, Tensor], task: str, prefix: str = "") -> dict[str, Tensor]:
    base = f"{prefix}head.{task}."
    view = {key[len(base) :]: params[key] for key in params if key.startswith(base)}
    if set(view) != {"w_hidden", "b_hidden", "w_out", "b_out"}:
        raise ContractError(f"no complete head for task {task!r} under prefix {prefix!r}")
    return view


# ---------------------------------------------------------------------------
# forward passes
# ---------------------------------------------------------------------------

_FORWARD_CALLS = 0


def forward_call_count() -> int:
    """How many encoder forward passes have run since the last reset."""
    return _FORWARD_CALLS


def reset_forward_calls() -> None:
    global _FORWARD_CALLS
    _FORWARD_CALLS = 0


def attention(q: Tensor, k: Tensor, v: Tensor, mask: Optional[Sequence[int]] = None) -> Tensor:
    """softmax(q k^T / sqrt(d_k) + mask bias) v.

    Masked (pad) key positions get a -1e9 bias; with max subtraction inside
    softmax their weights underflow to exactly zero.
    """
    if q.data.ndim != 2 or k.data.ndim != 2 or v.data.ndim != 2:
        raise ShapeError(f"attention needs 2-D q/k/v, got {q.shape}/{k.shape}/{v.shape}")
    if q.shape[1] != k.shape[1]:
        raise ShapeError(f"q and k disagree on d_k: {q.shape} vs {k.shape}")
    if k.shape[0] != v.shape[0]:
        raise ShapeError(f"k and v disagree on length: {k.shape} vs {v.shape}")
    scores = scale(matmul(q, transpose(k)), 1.0 / math.sqrt(q.shape[1]))
    if mask is not None:
        m = np.asarray(mask, dtype=np.float64)
        if m.shape != (k.shape[0],):
            raise ShapeError(f"mask length {m.shape} does not match keys {k.shape}")
        scores = add(scores, Tensor(np.where(m > 0, 0.0, MASK_BIAS)[None, :]))
    return matmul(softmax_rows(scores), v)


def multi_head(
    x: Tensor,
    params: Mapping[str, Tensor],
    layer: int,
    n_heads: int,
    mask: Optional[Sequence[int]] = None,
    prefix: str = "",
) -> Tensor:
    """Project to per-head q/k/v, attend per head, concatenate, apply W_O."""
    p = f"{prefix}layer{layer}."
    d_model = x.shape[1]
    if d_model % n_heads != 0:
        raise ShapeError(f"d_model {d_model} not divisible by n_heads {n_heads}")
    d_head = d_model // n_heads
    q_all = matmul(x, params[p + "wq"])
    k_all = matmul(x, params[p + "wk"])
    v_all = matmul(x, params[p + "wv"])
    outs = []
    for h in range(n_heads):
        lo, hi = h * d_head, (h + 1) * d_head
        outs.append(
            attention(
                slice_cols(q_all, lo, hi),
                slice_cols(k_all, lo, hi),
                slice_cols(v_all, lo, hi),
                mask,
            )
        )
    return matmul(concat_cols(outs), params[p + "wo"])


def encoder_forward(
    seq: TokenSeq,
    params: Mapping[str, Tensor],
    config: EncoderConfig,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
    prefix: str = "",
) -> Tensor:
    """Embed, run the pre-norm transformer stack, and pool position 0.

    Returns the tanh-pooled [CLS] vector of shape (d_model,).
    """
    global _FORWARD_CALLS
    if len(seq.ids) != config.max_len:
        raise ContractError(
            f"sequence length {len(seq.ids)} does not match config max_len {config.max_len}"
        )
    if max(seq.ids) >= config.vocab_size:
        raise ContractError(
            f"token id {max(seq.ids)} out of range for vocab size {config.vocab_size}"
        )
    if training and config.dropout_p > 0 and rng is None:
        raise ContractError("training with dropout needs an explicit rng stream")
    _FORWARD_CALLS += 1

    x = add(gather_rows(params[prefix + "tok_emb"], seq.ids), params[prefix + "pos_emb"])
    for i in range(config.n_layers):
        p = f"{prefix}layer{i}."
        h = layer_norm_rows(x, params[p + "norm1_g"], params[p + "norm1_b"])
        attended = multi_head(h, params, i, config.n_heads, seq.mask, prefix)
        x = add(x, dropout(attended, config.dropout_p, training, rng))
        h = layer_norm_rows(x, params[p + "norm2_g"], params[p + "norm2_b"])
        inner = relu(add(matmul(h, params[p + "ffn_w1"]), params[p + "ffn_b1"]))
        ff = add(matmul(inner, params[p + "ffn_w2"]), params[p + "ffn_b2"])
        x = add(x, dropout(ff, config.dropout_p, training, rng))
    x = layer_norm_rows(x, params[prefix + "final_norm_g"], params[prefix + "final_norm_b"])
    cls = slice_rows(x, 0, 1)
    pooled = tanh(add(matmul(cls, params[prefix + "pooler_w"]), params[prefix + "pooler_b"]))
    return reshape(pooled, (config.d_model,))


def classify(cls_vector: Tensor, head_params: Mapping[str, Tensor]) -> Tensor:
    """Raw logits: W_out relu(W_hidden cls + b_hidden) + b_out."""
    if cls_vector.data.ndim != 1:
        raise ShapeError(f"classify needs a 1-D cls vector, got {cls_vector.shape}")
    w_hidden = head_params["w_hidden"]
    if w_hidden.shape[0] != cls_vector.shape[0]:
        raise ShapeError(
            f"cls width {cls_vector.shape[0]} does not match head input {w_hidden.shape[0]}"
        )
    row = reshape(cls_vector, (1, cls_vector.shape[0]))
    hidden = relu(add(matmul(row, w_hidden), head_params["b_hidden"]))
    logits = add(matmul(hidden, head_params["w_out"]), head_params["b_out"])
    return reshape(logits, (logits.shape[1],))
