"""Classification losses: cross-entropy, multi-class hinge, focal, KLD.

All four consume raw logits and return taped scalars, so gradients flow
through the same autodiff machinery as the encoder. Cross-entropy and the
focal/KLD variants go through one shared log-sum-exp core: focal with
gamma=0 takes the cross-entropy path bit for bit, and KLD with zero label
smoothing reproduces cross-entropy exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError, DataError
from .numcore import (
    Tensor,
    add,
    exp,
    log_sum_exp,
    mul,
    neg,
    pow_const,
    relu,
    scale,
    sub,
    sum_all,
    take,
)


class LossKind(Enum):
    CROSS_ENTROPY = "CE"
    HINGE = "HL"
    FOCAL = "FL"
    KLD = "KLD"

    @classmethod
    def parse(cls, text: str) -> "LossKind":
        key = text.strip().upper()
        aliases = {
            "CE": cls.CROSS_ENTROPY,
            "CROSS_ENTROPY": cls.CROSS_ENTROPY,
            "CROSS-ENTROPY": cls.CROSS_ENTROPY,
            "HL": cls.HINGE,
            "HINGE": cls.HINGE,
            "FL": cls.FOCAL,
            "FOCAL": cls.FOCAL,
            "KLD": cls.KLD,
            "KL": cls.KLD,
        }
        if key not in aliases:
            raise ContractError(f"unknown loss kind {text!r}; expected CE, HL, FL, or KLD")
        return aliases[key]


@dataclass(frozen=True)
class LossConfig:
    kind: LossKind = LossKind.CROSS_ENTROPY
    focal_gamma: float = 2.0
    kld_epsilon: float = 0.1
    use_class_weights: bool = False

    def __post_init__(self):
        if self.focal_gamma < 0:
            raise ContractError(f"focal gamma must be >= 0, got {self.focal_gamma}")
        if not 0.0 <= self.kld_epsilon < 0.5:
            raise ContractError(f"kld epsilon must be in [0, 0.5), got {self.kld_epsilon}")


@dataclass(frozen=True)
class ClassWeights:
    """Inverse-frequency class weights w_i = 1 - count_i / total."""

    w: tuple[float, ...]

    def __getitem__(self, i: int) -> float:
        return self.w[i]

    def __len__(self) -> int:
        return len(self.w)


def class_weights(counts: Sequence[int]) -> ClassWeights:
    """Weights from per-class counts; a zero-count class is untrainable and
    rejected instead of silently getting weight 1."""
    if len(counts) < 2:
        raise ContractError("class weights need at least 2 classes")
    total = sum(counts)
    if total <= 0:
        raise ContractError("class counts must sum to a positive number")
    zero = [i for i, c in enumerate(counts) if c <= 0]
    if zero:
        raise DataError(f"degenerate classes with zero count at indices {zero}")
    return ClassWeights(w=tuple(1.0 - c / total for c in counts))


def _check_target(logits: Tensor, target: int) -> int:
    if logits.data.ndim != 1:
        raise ContractError(f"losses need 1-D logits, got shape {logits.shape}")
    n = logits.shape[0]
    if not 0 <= target < n:
        raise ContractError(f"target {target} out of range for {n} classes")
    return n


def _weight_for(weights: Optional[ClassWeights], target: int, n: int) -> float:
    if weights is None:
        return 1.0
    if len(weights) != n:
        raise ContractError(f"{len(weights)} class weights for {n} classes")
    return weights[target]


def _weighted_nll(logits: Tensor, target: int, weight: float) -> Tensor:
    # -w * log softmax(logits)[target], via log-sum-exp for stability
    nll = sub(log_sum_exp(logits), take(logits, target))
    return scale(nll, weight) if weight != 1.0 else nll


def cross_entropy(
    logits: Tensor, target: int, weights: Optional[ClassWeights] = None
) -> Tensor:
    n = _check_target(logits, target)
    return _weighted_nll(logits, target, _weight_for(weights, target, n))


def hinge_multiclass(logits: Tensor, target: int) -> Tensor:
    """Sum over wrong classes of max(0, 1 + logit_wrong - logit_target)."""
    n = _check_target(logits, target)
    margins = add(sub(logits, take(logits, target)), Tensor(1.0))
    violations = relu(margins)
    # the target's own term is max(0, 1) = 1 by construction; drop it
    return sub(sum_all(violations), Tensor(1.0))


def focal(
    logits: Tensor,
    target: int,
    gamma: float = 2.0,
    weights: Optional[ClassWeights] = None,
) -> Tensor:
    """Cross-entropy modulated by (1 - p_target)^gamma."""
    if gamma < 0:
        raise ContractError(f"focal gamma must be >= 0, got {gamma}")
    n = _check_target(logits, target)
    weight = _weight_for(weights, target, n)
    if gamma == 0.0:
        return _weighted_nll(logits, target, weight)
    log_pt = sub(take(logits, target), log_sum_exp(logits))
    modulator = pow_const(sub(Tensor(1.0), exp(log_pt)), gamma)
    loss = mul(modulator, neg(log_pt))
    return scale(loss, weight) if weight != 1.0 else loss


def kld(logits: Tensor, target: int, epsilon: float = 0.1) -> Tensor:
    """KL divergence from the smoothed one-hot target to softmax(logits).

    p_target = 1 - epsilon, the rest share epsilon; with epsilon 0 this is
    exactly cross-entropy because a one-hot p has zero entropy.
    """
    n = _check_target(logits, target)
    if not 0.0 <= epsilon < 0.5:
        raise ContractError(f"kld epsilon must be in [0, 0.5), got {epsilon}")
    if epsilon == 0.0 or n == 1:
        return _weighted_nll(logits, target, 1.0)
    p = np.full(n, epsilon / (n - 1))
    p[target] = 1.0 - epsilon
    neg_entropy = float((p * np.log(p)).sum())
    # sum(p) == 1, so sum_i p_i (log p_i - log softmax_i) reduces to
    # -H(p) + lse(logits) - p . logits
    cross = sub(log_sum_exp(logits), sum_all(mul(Tensor(p), logits)))
    return add(cross, Tensor(neg_entropy))


def compute_loss(
    logits: Tensor,
    target: int,
    cfg: LossConfig,
    weights: Optional[ClassWeights] = None,
) -> Tensor:
    """Dispatch on the configured loss kind.

    Class weights apply to cross-entropy and focal only.
    """
    w = weights if cfg.use_class_weights else None
    if cfg.kind is LossKind.CROSS_ENTROPY:
        return cross_entropy(logits, target, w)
    if cfg.kind is LossKind.HINGE:
        return hinge_multiclass(logits, target)
    if cfg.kind is LossKind.FOCAL:
        return focal(logits, target, cfg.focal_gamma, w)
    if cfg.kind is LossKind.KLD:
        return kld(logits, target, cfg.kld_epsilon)
    raise ContractError(f"unhandled loss kind {cfg.kind}")


def batch_loss(per_sample: Sequence[Tensor]) -> Tensor:
    """Arithmetic mean of per-sample scalar losses (left-fold, fixed order)."""
    per_sample = list(per_sample)
    if not per_sample:
        raise ContractError("batch_loss over an empty batch")
    if len(per_sample) == 1:
        return per_sample[0]
    total = per_sample[0]
    for t in per_sample[1:]:
        total = add(total, t)
    return scale(total, 1.0 / len(per_sample))


# kept for reference/tests: the binary case n=2 of the multi-class form
def hinge_binary(score: float, label: int) -> float:
    """max(0, 1 - y*s) with y in {-1, +1}; documented special case only."""
    y = 1.0 if label > 0 else -1.0
    return max(0.0, 1.0 - y * float(score))
