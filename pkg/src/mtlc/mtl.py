"""Training regimes: single-task, hard parameter sharing (one encoder, two
heads, summed losses), and soft parameter sharing (two towers coupled by a
Frobenius or trace-norm penalty)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .data import Batch, Corpus, SplitSet, batches, class_counts
from .encoder import (
    EncoderConfig,
    HeadSpec,
    classify,
    encoder_forward,
    head_view,
    init_params,
    param_shapes,
)
from .errors import ConfigError, ContractError, NumericalError
from .losses import ClassWeights, LossConfig, batch_loss, class_weights, compute_loss
from .metrics import task_report
from .numcore import (
    GradTape,
    OptimHyper,
    Tensor,
    add,
    adamw_step,
    backward,
    child_seed,
    concat_rows,
    frobenius_sq_distance,
    init_states,
    scale,
    stack_rows,
    stream,
    trace_norm_penalty,
    zero_grads,
)
from .text import Vocab

STL = "stl"
HARD_SHARE = "hard_share"
SOFT_SHARE = "soft_share"
REGIMES = (STL, HARD_SHARE, SOFT_SHARE)

FROBENIUS = "frobenius"
TRACE_NORM = "trace_norm"
PENALTIES = (FROBENIUS, TRACE_NORM)

BATCH_SIZES = (16, 32, 64)


def default_coupled_layers(n_layers: int) -> tuple[str, ...]:
    """Attention projections and FFN matrices of every layer; embeddings,
    norms, biases, and heads stay task-private."""
    names = []
    for i in range(n_layers):
        for leaf in ("wq", "wk", "wv", "wo", "ffn_w1", "ffn_w2"):
            names.append(f"layer{i}.{leaf}")
    return tuple(names)


@dataclass(frozen=True)
class SoftShareConfig:
    penalty: str = FROBENIUS
    lam: float = 0.1
    coupled_layer_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.penalty not in PENALTIES:
            raise ConfigError(f"unknown soft-share penalty {self.penalty!r}; expected {PENALTIES}")
        if self.lam < 0:
            raise ConfigError(f"soft-share lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class RegimeConfig:
    kind: str
    tasks: tuple[str, ...]
    losses: dict[str, LossConfig]
    task_weights: tuple[float, ...] = (1.0, 1.0)
    soft: Optional[SoftShareConfig] = None

    def __post_init__(self):
        if self.kind not in REGIMES:
            raise ConfigError(f"unknown regime {self.kind!r}; expected one of {REGIMES}")
        if self.kind == STL and len(self.tasks) != 1:
            raise ConfigError(f"STL trains exactly one task, got {self.tasks}")
        if self.kind in (HARD_SHARE, SOFT_SHARE) and len(self.tasks) != 2:
            raise ConfigError(f"{self.kind} trains exactly two tasks, got {self.tasks}")
        if len(self.task_weights) != len(self.tasks):
            raise ConfigError(
                f"{len(self.task_weights)} task weights for {len(self.tasks)} tasks"
            )
        if any(w < 0 for w in self.task_weights):
            raise ConfigError(f"task weights must be nonnegative, got {self.task_weights}")
        if set(self.losses) != set(self.tasks):
            raise ConfigError(f"loss config tasks {sorted(self.losses)} != tasks {self.tasks}")
        if self.kind == SOFT_SHARE and self.soft is None:
            raise ConfigError("soft_share regime needs a SoftShareConfig")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 32
    optimizer: OptimHyper = field(default_factory=OptimHyper)
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size not in BATCH_SIZES:
            raise ConfigError(f"batch_size must be one of {BATCH_SIZES}, got {self.batch_size}")


@dataclass(frozen=True)
class EpochStats:
    train_loss: dict[str, float]
    train_accuracy: dict[str, float]
    val_weighted_f1: dict[str, float]
    wall_seconds: float


@dataclass
class TrainTrace:
    epochs: list[EpochStats] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)


@dataclass
class Model:
    """Everything needed to run forward passes for one configured regime."""

    regime: RegimeConfig
    encoder_cfg: EncoderConfig
    heads: dict[str, HeadSpec]
    params: dict[str, Tensor]

    def tower_prefix(self, task: str) -> str:
        return f"tower.{task}." if self.regime.kind == SOFT_SHARE else ""


def build_model(
    regime: RegimeConfig,
    encoder_cfg: EncoderConfig,
    n_classes: Mapping[str, int],
    seed: int,
) -> Model:
    heads = {task: HeadSpec(task=task, n_classes=n_classes[task]) for task in regime.tasks}
    if regime.kind == SOFT_SHARE:
        params: dict[str, Tensor] = {}
        for task in regime.tasks:
            params.update(
                init_params(encoder_cfg, [heads[task]], seed, prefix=f"tower.{task}.")
            )
        _validate_coupling(regime, params)
    else:
        params = init_params(encoder_cfg, [heads[t] for t in regime.tasks], seed)
    return Model(regime=regime, encoder_cfg=encoder_cfg, heads=heads, params=params)


def expected_param_shapes(
    regime: RegimeConfig, encoder_cfg: EncoderConfig, n_classes: Mapping[str, int]
) -> dict[str, tuple]:
    """Exact tensor name -> shape map implied by a (regime, config) pair."""
    heads = {task: HeadSpec(task=task, n_classes=n_classes[task]) for task in regime.tasks}
    if regime.kind == SOFT_SHARE:
        shapes: dict[str, tuple] = {}
        for task in regime.tasks:
            for name, shape in param_shapes(encoder_cfg, [heads[task]]).items():
                shapes[f"tower.{task}.{name}"] = shape
        return shapes
    return param_shapes(encoder_cfg, [heads[t] for t in regime.tasks])


def _validate_coupling(regime: RegimeConfig, params: Mapping[str, Tensor]) -> None:
    assert regime.soft is not None
    t1, t2 = regime.tasks
    for name in regime.soft.coupled_layer_names:
        a, b = f"tower.{t1}.{name}", f"tower.{t2}.{name}"
        if a not in params or b not in params:
            raise ConfigError(f"coupled layer {name!r} missing from one of the towers")
        if params[a].shape != params[b].shape:
            raise ConfigError(
                f"coupled layer {name!r} has mismatched shapes "
                f"{params[a].shape} vs {params[b].shape}"
            )


# ---------------------------------------------------------------------------
# forward passes
# ---------------------------------------------------------------------------


def sample_logits(
    model: Model,
    seq,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> dict[str, Tensor]:
    """Per-task logits for one sequence. Shared regimes encode once; soft
    sharing runs one tower per task."""
    out: dict[str, Tensor] = {}
    if model.regime.kind == SOFT_SHARE:
        for task in model.regime.tasks:
            prefix = model.tower_prefix(task)
            cls = encoder_forward(seq, model.params, model.encoder_cfg, training, rng, prefix)
            out[task] = classify(cls, head_view(model.params, task, prefix))
    else:
        cls = encoder_forward(seq, model.params, model.encoder_cfg, training, rng)
        for task in model.regime.tasks:
            out[task] = classify(cls, head_view(model.params, task))
    return out


def hard_forward(
    batch: Batch,
    model: Model,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> tuple[Tensor, ...]:
    """One encoder pass per sample feeding every head; returns stacked
    [B, n_classes] logits per task in regime task order."""
    if model.regime.kind == SOFT_SHARE:
        raise ContractError("hard_forward is for shared-encoder regimes")
    rows: dict[str, list[Tensor]] = {task: [] for task in model.regime.tasks}
    for seq in batch.seqs:
        logits = sample_logits(model, seq, training, rng)
        for task in model.regime.tasks:
            rows[task].append(logits[task])
    return tuple(stack_rows(rows[task]) for task in model.regime.tasks)


def hard_loss(loss1: Tensor, loss2: Tensor, task_weights: Sequence[float]) -> Tensor:
    """Weighted sum of the two task losses; default weights are [1, 1]."""
    w1, w2 = task_weights
    if w1 < 0 or w2 < 0:
        raise ContractError(f"task weights must be nonnegative, got {task_weights}")
    return add(scale(loss1, w1), scale(loss2, w2))


def soft_loss(
    tower_losses: Sequence[Tensor],
    params: Mapping[str, Tensor],
    regime: RegimeConfig,
) -> Tensor:
    """Weighted tower-loss sum plus the coupling penalty.

    Frobenius couples each named pair directly; the trace-norm variant
    penalizes the row-stack of the two matrices.
    """
    assert regime.soft is not None
    cfg = regime.soft
    total = hard_loss(tower_losses[0], tower_losses[1], regime.task_weights)
    if cfg.lam == 0.0 or not cfg.coupled_layer_names:
        return total
    t1, t2 = regime.tasks
    penalty: Optional[Tensor] = None
    for name in cfg.coupled_layer_names:
        a_name, b_name = f"tower.{t1}.{name}", f"tower.{t2}.{name}"
        if a_name not in params or b_name not in params:
            raise ConfigError(f"coupled layer {name!r} missing from one of the towers")
        a, b = params[a_name], params[b_name]
        if cfg.penalty == FROBENIUS:
            term = frobenius_sq_distance(a, b)
        else:
            term = trace_norm_penalty(concat_rows([a, b]))
        penalty = term if penalty is None else add(penalty, term)
    return add(total, scale(penalty, cfg.lam))


def coupling_distance(model: Model) -> float:
    """Current sum of squared Frobenius distances over the coupled layers."""
    assert model.regime.soft is not None
    t1, t2 = model.regime.tasks
    total = 0.0
    for name in model.regime.soft.coupled_layer_names:
        a = model.params[f"tower.{t1}.{name}"].data
        b = model.params[f"tower.{t2}.{name}"].data
        total += float(((a - b) ** 2).sum())
    return total


# ---------------------------------------------------------------------------
# training and evaluation
# ---------------------------------------------------------------------------


def _class_weight_table(
    regime: RegimeConfig, train_split: Corpus
) -> dict[str, Optional[ClassWeights]]:
    table: dict[str, Optional[ClassWeights]] = {}
    for task in regime.tasks:
        if regime.losses[task].use_class_weights:
            table[task] = class_weights(class_counts(train_split, task))
        else:
            table[task] = None
    return table


def train(
    splits: SplitSet,
    regime: RegimeConfig,
    train_cfg: TrainConfig,
    model: Model,
    vocab: Vocab,
) -> tuple[dict[str, Tensor], TrainTrace]:
    """Run the configured regime over the train split.

    Per epoch: seeded shuffle, fixed-size batches, forward, per-regime loss,
    zero grads, backward, clip, AdamW step; validation weighted F1 is
    recorded after each epoch. Returns the trained parameters and the trace.
    """
    if not splits.train.records or not splits.val.records:
        raise ContractError("train and validation splits must be non-empty")
    for task in regime.tasks:
        want = splits.train.schemas[task].n_classes
        have = model.heads[task].n_classes
        if want != have:
            raise ContractError(
                f"head for {task!r} has {have} classes but schema has {want}"
            )
    states = init_states(model.params)
    weights = _class_weight_table(regime, splits.train)
    shuffle_rng = stream(train_cfg.seed, "shuffle")
    dropout_rng = stream(train_cfg.seed, "dropout")
    trace = TrainTrace()

    for epoch in range(train_cfg.epochs):
        started = time.perf_counter()
        epoch_batches = batches(
            splits.train,
            train_cfg.batch_size,
            train_cfg.shuffle,
            child_seed(shuffle_rng),
            vocab,
            model.encoder_cfg.max_len,
        )
        loss_sums = {task: 0.0 for task in regime.tasks}
        hits = {task: 0 for task in regime.tasks}
        seen = 0
        for batch_index, batch in enumerate(epoch_batches):
            zero_grads(model.params)
            with GradTape() as tape:
                per_task: dict[str, list[Tensor]] = {task: [] for task in regime.tasks}
                for pos, seq in enumerate(batch.seqs):
                    logits = sample_logits(model, seq, training=True, rng=dropout_rng)
                    for task in regime.tasks:
                        gold = batch.labels[task][pos]
                        per_task[task].append(
                            compute_loss(logits[task], gold, regime.losses[task], weights[task])
                        )
                        if int(np.argmax(logits[task].data)) == gold:
                            hits[task] += 1
                task_losses = {task: batch_loss(per_task[task]) for task in regime.tasks}
                if regime.kind == STL:
                    total = task_losses[regime.tasks[0]]
                elif regime.kind == HARD_SHARE:
                    total = hard_loss(
                        task_losses[regime.tasks[0]],
                        task_losses[regime.tasks[1]],
                        regime.task_weights,
                    )
                else:
                    total = soft_loss(
                        [task_losses[t] for t in regime.tasks], model.params, regime
                    )
            if not math.isfinite(total.item()):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch} batch {batch_index}"
                )
            backward(tape, total)
            grads = {
                name: p.grad if p.grad is not None else np.zeros(p.shape)
                for name, p in model.params.items()
            }
            adamw_step(model.params, grads, states, train_cfg.optimizer)
            seen += len(batch)
            for task in regime.tasks:
                loss_sums[task] += task_losses[task].item() * len(batch)

        val_preds = evaluate(model, splits.val, vocab)
        val_f1 = {}
        for task in regime.tasks:
            golds = [rec.labels[task] for rec in splits.val.records]
            tr = task_report(task, splits.val.schemas[task].classes, golds, val_preds[task])
            val_f1[task] = tr.weighted.f1
        trace.epochs.append(
            EpochStats(
                train_loss={t: loss_sums[t] / seen for t in regime.tasks},
                train_accuracy={t: hits[t] / seen for t in regime.tasks},
                val_weighted_f1=val_f1,
                wall_seconds=time.perf_counter() - started,
            )
        )
    return model.params, trace


def evaluate(model: Model, split: Corpus, vocab: Vocab) -> dict[str, list[int]]:
    """Deterministic argmax predictions per task, dropout disabled.

    Ties break to the lowest class index. Results are in corpus order.
    """
    for task in model.regime.tasks:
        if task not in split.schemas:
            raise ContractError(f"split has no labels for task {task!r}")
        if split.schemas[task].n_classes != model.heads[task].n_classes:
            raise ContractError(
                f"schema/head class count mismatch for {task!r}: "
                f"{split.schemas[task].n_classes} vs {model.heads[task].n_classes}"
            )
    preds: dict[str, list[int]] = {task: [] for task in model.regime.tasks}
    for batch in batches(split, 64, False, 0, vocab, model.encoder_cfg.max_len):
        for seq in batch.seqs:
            logits = sample_logits(model, seq, training=False, rng=None)
            for task in model.regime.tasks:
                preds[task].append(int(np.argmax(logits[task].data)))
    return preds
