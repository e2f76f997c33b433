"""Command-line surface: split, train, evaluate, and compare runs.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
error, 5 corrupt artifact. The environment variable MTLC_SEED overrides the
config seed; an explicit --seed flag beats both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config, schemas_for_config
from .data import (
    Corpus,
    SplitSet,
    corpus_to_tsv,
    load_joint_tsv,
    merge_task_files,
    schemas_for_language,
    split_manifest,
    stratified_split,
)
from .encoder import EncoderConfig, HeadSpec
from .errors import (
    ConfigError,
    ContractError,
    CorruptArtifactError,
    DataError,
    MtlcError,
    NumericalError,
)
from .metrics import MetricsReport, build_report, format_report, report_to_dict
from .mtl import Model, TrainTrace, build_model, evaluate, expected_param_shapes, train
from .numcore import Tensor
from .text import build_vocab, load_vocab, save_vocab

CHECKPOINT_NAME = "checkpoint.mtlc"
VOCAB_NAME = "vocab.txt"
TRACE_NAME = "trace.tsv"
REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"


def _write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _resolve_seed(flag_seed: Optional[int]) -> Optional[int]:
    if flag_seed is not None:
        return flag_seed
    env = os.environ.get("MTLC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"MTLC_SEED must be an integer, got {env!r}") from None
    return None


def _trace_tsv(trace: TrainTrace, tasks: Sequence[str]) -> str:
    cols = ["epoch"]
    for task in tasks:
        cols += [f"{task}_train_loss", f"{task}_train_acc", f"{task}_val_f1"]
    lines = ["\t".join(cols)]
    for i, ep in enumerate(trace.epochs):
        row = [str(i)]
        for task in tasks:
            row += [
                f"{ep.train_loss[task]:.10g}",
                f"{ep.train_accuracy[task]:.10g}",
                f"{ep.val_weighted_f1[task]:.10g}",
            ]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------


def cmd_split(args) -> int:
    schemas = schemas_for_language(args.language)
    if args.sentiment_input or args.offense_input:
        if not (args.sentiment_input and args.offense_input):
            raise ConfigError("--sentiment-input and --offense-input must be given together")
        corpus, report = merge_task_files(
            args.sentiment_input, args.offense_input, schemas, args.language
        )
        print(
            f"merge: dropped {report.dropped_first_only} sentiment-only and "
            f"{report.dropped_second_only} offense-only comments",
            file=sys.stderr,
        )
    elif args.input:
        corpus = load_joint_tsv(args.input, schemas, args.language)
    else:
        raise ConfigError("either --input or the --sentiment-input/--offense-input pair is required")

    parts = args.ratios.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--ratios needs three comma-separated numbers, got {args.ratios!r}")
    try:
        ratios = (float(parts[0]), float(parts[1]), float(parts[2]))
    except ValueError:
        raise ConfigError(f"--ratios needs numbers, got {args.ratios!r}") from None

    splits = stratified_split(corpus, ratios, args.seed, args.stratify_task)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, part in (("train", splits.train), ("val", splits.val), ("test", splits.test)):
        _write_text(os.path.join(args.out_dir, f"{name}.tsv"), corpus_to_tsv(part))
    _write_text(
        os.path.join(args.out_dir, "manifest.txt"),
        split_manifest(splits, args.seed, ratios, args.stratify_task),
    )
    print(
        f"split {len(corpus)} records into {len(splits.train)}/{len(splits.val)}/{len(splits.test)}"
        f" at {args.out_dir}"
    )
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _load_split_corpora(cfg: RunConfig) -> SplitSet:
    schemas = schemas_for_config(cfg)
    train_corpus = load_joint_tsv(cfg.train_path, schemas, cfg.language)
    val_corpus = load_joint_tsv(cfg.val_path, schemas, cfg.language)
    if cfg.test_path:
        test_corpus = load_joint_tsv(cfg.test_path, schemas, cfg.language)
    else:
        test_corpus = Corpus(records=[], schemas=schemas, language=cfg.language)
    return SplitSet(train=train_corpus, val=val_corpus, test=test_corpus)


def _model_from_checkpoint(checkpoint_path: str, vocab_path: str) -> tuple[Model, RunConfig, object]:
    config_text, arrays = load_checkpoint(checkpoint_path)
    cfg = load_config(config_text, check_paths=False)
    vocab = load_vocab(vocab_path)
    schemas = schemas_for_config(cfg)
    enc_cfg = EncoderConfig(
        vocab_size=len(vocab),
        d_model=cfg.d_model,
        n_heads=cfg.n_heads,
        n_layers=cfg.n_layers,
        d_ffn=cfg.d_ffn,
        max_len=cfg.max_len,
        dropout_p=cfg.dropout,
    )
    n_classes = {task: schemas[task].n_classes for task in cfg.regime.tasks}
    expected = expected_param_shapes(cfg.regime, enc_cfg, n_classes)
    if set(expected) != set(arrays):
        missing = sorted(set(expected) - set(arrays))[:5]
        extra = sorted(set(arrays) - set(expected))[:5]
        raise CorruptArtifactError(
            f"checkpoint tensors do not match the config-implied set "
            f"(missing {missing}, unexpected {extra})"
        )
    for name, shape in expected.items():
        if tuple(arrays[name].shape) != tuple(shape):
            raise CorruptArtifactError(
                f"checkpoint tensor {name!r} has shape {arrays[name].shape}, expected {shape}"
            )
    params = {
        name: Tensor(arrays[name], requires_grad=True, name=name) for name in arrays
    }
    heads = {task: HeadSpec(task=task, n_classes=n_classes[task]) for task in cfg.regime.tasks}
    model = Model(regime=cfg.regime, encoder_cfg=enc_cfg, heads=heads, params=params)
    return model, cfg, vocab


def _report_for(model: Model, corpus: Corpus, vocab) -> MetricsReport:
    preds = evaluate(model, corpus, vocab)
    golds = {task: [rec.labels[task] for rec in corpus.records] for task in model.regime.tasks}
    schemas = {task: corpus.schemas[task].classes for task in model.regime.tasks}
    return build_report(golds, preds, schemas)


def cmd_train(args) -> int:
    seed_override = _resolve_seed(args.seed)
    with open(args.config, encoding="utf-8") as fh:
        cfg = load_config(fh.read(), seed_override=seed_override, check_paths=True)
    splits = _load_split_corpora(cfg)
    vocab = build_vocab(
        (rec.text for rec in splits.train.records),
        mode=cfg.text_mode,
        min_freq=cfg.min_freq,
        max_size=cfg.max_size,
    )
    enc_cfg = EncoderConfig(
        vocab_size=len(vocab),
        d_model=cfg.d_model,
        n_heads=cfg.n_heads,
        n_layers=cfg.n_layers,
        d_ffn=cfg.d_ffn,
        max_len=cfg.max_len,
        dropout_p=cfg.dropout,
    )
    schemas = schemas_for_config(cfg)
    n_classes = {task: schemas[task].n_classes for task in cfg.regime.tasks}
    model = build_model(cfg.regime, enc_cfg, n_classes, cfg.train_cfg.seed)
    params, trace = train(splits, cfg.regime, cfg.train_cfg, model, vocab)

    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    vocab_path = os.path.join(out, VOCAB_NAME)
    save_vocab(vocab, vocab_path)
    checkpoint_path = os.path.join(out, CHECKPOINT_NAME)
    save_checkpoint(checkpoint_path, cfg.to_text(), params)
    _write_text(os.path.join(out, TRACE_NAME), _trace_tsv(trace, cfg.regime.tasks))

    # the stored float32 weights are the contract: report from the reloaded
    # checkpoint so cmd_evaluate reproduces these numbers exactly
    saved_model, _, saved_vocab = _model_from_checkpoint(checkpoint_path, vocab_path)
    report = _report_for(saved_model, splits.val, saved_vocab)
    _write_text(
        os.path.join(out, REPORT_JSON),
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
    )
    _write_text(os.path.join(out, REPORT_TEXT), format_report(report))

    for task in cfg.regime.tasks:
        print(f"{task} validation weighted F1 = {report.tasks[task].weighted.f1:.5f}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def cmd_evaluate(args) -> int:
    vocab_path = args.vocab or os.path.join(os.path.dirname(args.checkpoint), VOCAB_NAME)
    if not os.path.exists(vocab_path):
        raise ConfigError(f"vocabulary file not found at {vocab_path!r} (use --vocab)")
    model, cfg, vocab = _model_from_checkpoint(args.checkpoint, vocab_path)
    schemas = schemas_for_config(cfg)
    corpus = load_joint_tsv(args.data, schemas, cfg.language)
    report = _report_for(model, corpus, vocab)

    out_dir = args.out_dir or os.path.dirname(args.checkpoint) or "."
    os.makedirs(out_dir, exist_ok=True)
    _write_text(
        os.path.join(out_dir, "eval_report.json"),
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
    )
    _write_text(os.path.join(out_dir, "eval_report.txt"), format_report(report))
    for task in cfg.regime.tasks:
        print(f"{task} weighted F1 = {report.tasks[task].weighted.f1:.5f}")
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _load_run_report(run_dir: str) -> dict:
    path = os.path.join(run_dir, REPORT_JSON)
    if not os.path.exists(path):
        raise ConfigError(f"run {run_dir!r} has no {REPORT_JSON}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_report(args) -> int:
    run_dirs = [r.strip() for r in args.runs.split(",") if r.strip()]
    if not run_dirs:
        raise ConfigError("--runs needs at least one run directory")
    reports = {run: _load_run_report(run) for run in run_dirs}
    names = [os.path.basename(os.path.normpath(run)) or run for run in run_dirs]

    tasks: list[str] = []
    for rep in reports.values():
        for task in rep["tasks"]:
            if task not in tasks:
                tasks.append(task)

    tsv_lines = ["\t".join(["task", "row"] + names)]
    text_lines = []
    for task in tasks:
        rows: list[tuple[str, list[Optional[float]]]] = []
        labels: list[str] = []
        for rep in reports.values():
            if task in rep["tasks"]:
                labels = rep["tasks"][task]["labels"]
                break
        for label in labels:
            vals = []
            for run in run_dirs:
                tr = reports[run]["tasks"].get(task)
                f1 = None
                if tr:
                    for entry in tr["per_class"]:
                        if entry["label"] == label:
                            f1 = entry["f1"]
                vals.append(f1)
            rows.append((label, vals))
        for agg, key in (("Macro average", "macro"), ("Weighted average", "weighted")):
            vals = [
                reports[run]["tasks"][task][key]["f1"] if task in reports[run]["tasks"] else None
                for run in run_dirs
            ]
            rows.append((agg, vals))

        width = max(len(r[0]) for r in rows)
        text_lines.append(f"== {task} (F1) ==")
        header = f"{'':<{width}}  " + "  ".join(f"{n:>12}" for n in names)
        if len(run_dirs) == 2:
            header += f"  {'delta':>12}"
        text_lines.append(header)
        for label, vals in rows:
            cells = "  ".join(f"{v:>12.5f}" if v is not None else f"{'-':>12}" for v in vals)
            line = f"{label:<{width}}  {cells}"
            if len(run_dirs) == 2 and None not in vals:
                line += f"  {vals[1] - vals[0]:>+12.5f}"
            text_lines.append(line)
            tsv_lines.append(
                "\t".join(
                    [task, label] + [f"{v:.5f}" if v is not None else "" for v in vals]
                )
            )
        text_lines.append("")

    table = "\n".join(text_lines)
    print(table)
    if args.out:
        _write_text(args.out, "\n".join(tsv_lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtlc",
        description="Train and evaluate joint sentiment/offense classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_split = sub.add_parser("split", help="stratified train/val/test split of a TSV corpus")
    p_split.add_argument("--input", help="joint 3-column TSV (text, sentiment, offense)")
    p_split.add_argument("--sentiment-input", help="2-column TSV for the sentiment task")
    p_split.add_argument("--offense-input", help="2-column TSV for the offense task")
    p_split.add_argument("--out-dir", required=True)
    p_split.add_argument("--ratios", default="0.8,0.1,0.1")
    p_split.add_argument("--seed", type=int, default=0)
    p_split.add_argument("--stratify-task", default="sentiment")
    p_split.add_argument("--language", default="kannada")
    p_split.set_defaults(func=cmd_split)

    p_train = sub.add_parser("train", help="train per the config and write run artifacts")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--seed", type=int, default=None, help="overrides MTLC_SEED and config")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="evaluate a checkpoint on a labeled TSV")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--vocab", default=None, help="defaults to vocab.txt beside the checkpoint")
    p_eval.add_argument("--out-dir", default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_report = sub.add_parser("report", help="compare runs side by side")
    p_report.add_argument("--runs", required=True, help="comma-separated run directories")
    p_report.add_argument("--out", default=None, help="also write the table as TSV here")
    p_report.set_defaults(func=cmd_report)
    return parser


_EXIT_CODES = (
    (ConfigError, 2),
    (ContractError, 2),
    (DataError, 3),
    (NumericalError, 4),
    (CorruptArtifactError, 5),
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MtlcError as err:
        for cls, code in _EXIT_CODES:
            if isinstance(err, cls):
                print(f"error: {err}", file=sys.stderr)
                return code
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
