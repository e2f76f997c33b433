"""Confusion matrices and precision/recall/F1 reporting.

Macro scores are unweighted means over classes, weighted scores are
support-weighted means, and the pooled TP-ratio variant is exposed
separately as `micro`. Degenerate 0/0 ratios resolve to 0. Values are kept
at full precision internally and only rounded when serialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError

ROUND_DIGITS = 5


@dataclass(frozen=True)
class ClassScores:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Averages:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class TaskReport:
    task: str
    labels: tuple[str, ...]
    per_class: tuple[ClassScores, ...]
    macro: Averages
    weighted: Averages
    micro: Averages
    accuracy: float
    confusion: np.ndarray  # rows = gold, columns = predicted
    total_support: int


@dataclass(frozen=True)
class MetricsReport:
    tasks: dict[str, TaskReport]


def confusion(golds: Sequence[int], preds: Sequence[int], n_classes: int) -> np.ndarray:
    """Count matrix with entry [gold, predicted]."""
    if len(golds) != len(preds):
        raise ContractError(f"golds ({len(golds)}) and preds ({len(preds)}) differ in length")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for g, p in zip(golds, preds):
        if not (0 <= g < n_classes and 0 <= p < n_classes):
            raise ContractError(f"label pair ({g}, {p}) out of range for {n_classes} classes")
        cm[g, p] += 1
    return cm


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def per_class_prf(cm: np.ndarray) -> list[tuple[float, float, float, int]]:
    """(precision, recall, f1, support) per class; 0/0 ratios become 0."""
    cm = np.asarray(cm)
    out = []
    for c in range(cm.shape[0]):
        tp = float(cm[c, c])
        precision = _ratio(tp, float(cm[:, c].sum()))
        recall = _ratio(tp, float(cm[c, :].sum()))
        f1 = _ratio(2.0 * precision * recall, precision + recall)
        out.append((precision, recall, f1, int(cm[c, :].sum())))
    return out


def macro_avg(per_class: Sequence[tuple[float, float, float, int]]) -> Averages:
    """Unweighted mean over classes, zero-score classes included."""
    if not per_class:
        raise ContractError("macro average over zero classes")
    n = len(per_class)
    return Averages(
        precision=sum(p for p, _, _, _ in per_class) / n,
        recall=sum(r for _, r, _, _ in per_class) / n,
        f1=sum(f for _, _, f, _ in per_class) / n,
    )


def weighted_avg(per_class: Sequence[tuple[float, float, float, int]]) -> Averages:
    """Support-weighted mean over classes."""
    total = sum(s for _, _, _, s in per_class)
    if total <= 0:
        raise ContractError("weighted average needs positive total support")
    return Averages(
        precision=sum(p * s for p, _, _, s in per_class) / total,
        recall=sum(r * s for _, r, _, s in per_class) / total,
        f1=sum(f * s for _, _, f, s in per_class) / total,
    )


def micro_avg(cm: np.ndarray) -> Averages:
    """Pooled counts: sum(TP) / sum(TP+FP) and sum(TP) / sum(TP+FN)."""
    cm = np.asarray(cm)
    tp = float(np.trace(cm))
    pred_total = float(cm.sum())
    gold_total = float(cm.sum())
    p = _ratio(tp, pred_total)
    r = _ratio(tp, gold_total)
    return Averages(precision=p, recall=r, f1=_ratio(2.0 * p * r, p + r))


def task_report(
    task: str, labels: Sequence[str], golds: Sequence[int], preds: Sequence[int]
) -> TaskReport:
    cm = confusion(golds, preds, len(labels))
    prf = per_class_prf(cm)
    per_class = tuple(
        ClassScores(label=lab, precision=p, recall=r, f1=f, support=s)
        for lab, (p, r, f, s) in zip(labels, prf)
    )
    accuracy = _ratio(float(np.trace(cm)), float(cm.sum()))
    return TaskReport(
        task=task,
        labels=tuple(labels),
        per_class=per_class,
        macro=macro_avg(prf),
        weighted=weighted_avg(prf),
        micro=micro_avg(cm),
        accuracy=accuracy,
        confusion=cm,
        total_support=int(cm.sum()),
    )


def build_report(
    golds: Mapping[str, Sequence[int]],
    preds: Mapping[str, Sequence[int]],
    schemas: Mapping[str, Sequence[str]],
) -> MetricsReport:
    """Assemble per-task reports; `schemas` maps task -> ordered class names."""
    if set(golds) != set(preds) or not set(golds) <= set(schemas):
        raise ContractError(
            f"task mismatch: golds {sorted(golds)}, preds {sorted(preds)}, "
            f"schemas {sorted(schemas)}"
        )
    tasks = {
        task: task_report(task, list(schemas[task]), golds[task], preds[task])
        for task in sorted(golds)
    }
    return MetricsReport(tasks=tasks)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _round(x: float) -> float:
    return round(x, ROUND_DIGITS)


def report_to_dict(report: MetricsReport) -> dict:
    """JSON-ready dict; the only place scores are rounded."""
    out: dict = {"tasks": {}}
    for task, tr in report.tasks.items():
        out["tasks"][task] = {
            "labels": list(tr.labels),
            "per_class": [
                {
                    "label": cs.label,
                    "precision": _round(cs.precision),
                    "recall": _round(cs.recall),
                    "f1": _round(cs.f1),
                    "support": cs.support,
                }
                for cs in tr.per_class
            ],
            "macro": {
                "precision": _round(tr.macro.precision),
                "recall": _round(tr.macro.recall),
                "f1": _round(tr.macro.f1),
            },
            "weighted": {
                "precision": _round(tr.weighted.precision),
                "recall": _round(tr.weighted.recall),
                "f1": _round(tr.weighted.f1),
            },
            "micro": {
                "precision": _round(tr.micro.precision),
                "recall": _round(tr.micro.recall),
                "f1": _round(tr.micro.f1),
            },
            "accuracy": _round(tr.accuracy),
            "total_support": tr.total_support,
            "confusion": tr.confusion.tolist(),
        }
    return out


def format_report(report: MetricsReport) -> str:
    """Aligned text table: class rows plus macro and weighted rows per task."""
    lines = []
    for task, tr in report.tasks.items():
        lines.append(f"== {task} ==")
        width = max([len("Weighted average")] + [len(label) for label in tr.labels])
        header = f"{'':<{width}}  {'P':>8}  {'R':>8}  {'F1':>8}  {'support':>8}"
        lines.append(header)
        for cs in tr.per_class:
            lines.append(
                f"{cs.label:<{width}}  {cs.precision:>8.5f}  {cs.recall:>8.5f}"
                f"  {cs.f1:>8.5f}  {cs.support:>8d}"
            )
        lines.append(
            f"{'Macro average':<{width}}  {tr.macro.precision:>8.5f}"
            f"  {tr.macro.recall:>8.5f}  {tr.macro.f1:>8.5f}  {tr.total_support:>8d}"
        )
        lines.append(
            f"{'Weighted average':<{width}}  {tr.weighted.precision:>8.5f}"
            f"  {tr.weighted.recall:>8.5f}  {tr.weighted.f1:>8.5f}  {tr.total_support:>8d}"
        )
        lines.append("")
    return "\n".join(lines)
