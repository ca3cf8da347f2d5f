"""Command-line surface: stats, train, sweep, segment, eval, selfcheck.

Exit codes are a stable contract: 0 success, 1 validation error (every
offending field is listed, nothing was run), 2 runtime failure. Every run
that writes artifacts also writes a manifest.json capturing the resolved
config, seed, float mode, and sha256 of each artifact, so results can be
traced back to their exact inputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

from .corpus import build_vocab, format_segmentation, load_corpus
from .metrics import evaluate_model
from .training import (
    FINALIST_SEEDS,
    NonFiniteLoss,
    TrainConfig,
    load_checkpoint,
    model_from_checkpoint,
    select,
    sweep,
    train,
)
from .training.config import field_type
from .numerics import set_float_mode

log = logging.getLogger(__name__)


class ValidationError(Exception):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; bad arguments are
    # validation failures under this tool's contract, so re-route.
    def error(self, message):
        raise ValidationError([message])


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: TrainConfig | None, extra: dict | None = None) -> None:
    artifacts = {
        str(p.relative_to(out_dir)): _sha256(p)
        for p in sorted(out_dir.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "command": command,
        "config": config.to_dict() if config is not None else None,
        "seed": config.seed if config is not None else None,
        "float_mode": config.float_mode if config is not None else None,
        "artifacts": artifacts,
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _coerce(field: dataclasses.Field, raw: str):
    t = field_type(field)
    if t is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    return t(raw)


def _resolve_config(args) -> TrainConfig:
    problems: list[str] = []
    data: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ValidationError([f"config: no such file {path}"])
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ValidationError([f"config: invalid JSON ({e})"])
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    for item in args.set or []:
        if "=" not in item:
            problems.append(f"--set {item!r}: expected key=value")
            continue
        key, _, raw = item.partition("=")
        if key not in fields:
            problems.append(f"--set {key}: unknown config field")
            continue
        try:
            data[key] = _coerce(fields[key], raw)
        except (TypeError, ValueError) as e:
            problems.append(f"--set {key}: {e}")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.float is not None:
        data["float_mode"] = f"float{args.float}"
    try:
        config = TrainConfig.from_dict(data)
    except (TypeError, ValueError) as e:
        raise ValidationError(problems + [str(e)])
    problems.extend(config.validate())
    if problems:
        raise ValidationError(problems)
    return config


def _load_or_fail(path: str, has_gold: bool, field: str):
    try:
        corpus = load_corpus(path, has_gold=has_gold)
    except OSError as e:
        raise ValidationError([f"{field}: cannot read {path} ({e.strerror or e})"])
    if not corpus:
        raise ValidationError([f"{field}: {path} contains no sentences"])
    return corpus


def _load_checkpoint_or_fail(path: str):
    try:
        return load_checkpoint(path)
    except OSError as e:
        raise ValidationError([f"checkpoint: cannot read {path} ({e.strerror or e})"])


def _load_pair(config: TrainConfig):
    train_c = _load_or_fail(config.train_path, config.has_gold, "train_path")
    val_c = None
    if config.val_path:
        val_c = _load_or_fail(config.val_path, config.has_gold, "val_path")
    return train_c, val_c


def cmd_stats(args) -> int:
    corpus = _load_or_fail(args.corpus, not args.raw, "corpus")
    from .corpus import corpus_stats

    st = corpus_stats(corpus)
    rows = [
        ("lines", st.lines),
        ("characters", st.chars),
        ("words", st.words if st.words is not None else "-"),
        ("distinct characters", st.distinct_chars),
        ("avg word length", f"{st.avg_word_length:.2f}" if st.avg_word_length else "-"),
    ]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    return 0


def cmd_train(args) -> int:
    config = _resolve_config(args)
    train_c, val_c = _load_pair(config)
    vocab = build_vocab(train_c, min_count=config.min_count)
    out_dir = Path(args.out) / config.run_id()
    resume = _load_checkpoint_or_fail(args.resume) if args.resume else None
    result = train(config, vocab, train_c, val_c, out_dir=out_dir, resume_from=resume)
    vocab.save(out_dir / "vocab.txt")
    _write_manifest(out_dir, "train", config)
    last = result.records[-1] if result.records else None
    print(f"run {result.run_id}: {config.steps} steps, final loss {result.final_loss:.4f}")
    if last is not None and last.val_bpc is not None:
        print(f"validation: bpc {last.val_bpc:.4f} mcc {last.val_mcc:.4f} f1 {last.val_f1:.2f}")
    return 0


def cmd_sweep(args) -> int:
    config = _resolve_config(args)
    train_c, val_c = _load_pair(config)
    if val_c is None:
        raise ValidationError(["val_path: sweeps need a validation corpus for selection"])
    vocab = build_vocab(train_c, min_count=config.min_count)
    lrs = [float(x) for x in args.lrs.split(",")] if args.lrs else None
    seeds = [int(x) for x in args.seeds.split(",")] if args.seeds else None
    out_dir = Path(args.out)
    result = sweep(
        config, vocab, train_c, val_c, lrs=lrs, seeds=seeds, out_dir=out_dir, workers=args.workers
    )
    vocab.save(out_dir / "vocab.txt")
    summary = {"runs": [
        {"config": run.config.to_dict(), "records": [json.loads(r.log_line()) | {"checkpoint": r.checkpoint} for r in run.records]}
        for run in result.runs
    ]}
    for criterion in ("mcc", "bpc"):
        run, rec = select(result, criterion)
        summary[f"selected_{criterion}"] = {
            "run_id": rec.run_id, "step": rec.step, "lr": run.config.lr, "seed": run.config.seed,
            "val_bpc": rec.val_bpc, "val_mcc": rec.val_mcc, "val_f1": rec.val_f1,
            "checkpoint": rec.checkpoint,
        }
        print(
            f"selected by {criterion}: {rec.run_id} step {rec.step} "
            f"(bpc {rec.val_bpc:.4f}, mcc {rec.val_mcc:.4f}, f1 {rec.val_f1:.2f})"
        )
    (out_dir / "sweep_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_manifest(out_dir, "sweep", config)
    return 0


def cmd_segment(args) -> int:
    ck = _load_checkpoint_or_fail(args.checkpoint)
    set_float_mode(ck.float_mode)
    model = model_from_checkpoint(ck)
    corpus = _load_or_fail(args.input, False, "input")
    unk = sum(int((model.vocab.encode(s.text) == model.vocab.unk_id).sum()) for s in corpus)
    if unk:
        print(f"warning: {unk} unknown character(s) mapped to UNK", file=sys.stderr)
    from .metrics import segment_corpus

    hyp = segment_corpus(model, corpus, char_budget=ck.config.char_budget)
    lines = []
    for h in hyp:
        cuts = [0] + sorted(h.boundaries) + [len(h.text)]
        lines.append(format_segmentation(h.text, [b - a for a, b in zip(cuts, cuts[1:])]))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    ck = _load_checkpoint_or_fail(args.checkpoint)
    set_float_mode(ck.float_mode)
    model = model_from_checkpoint(ck)
    corpus = _load_or_fail(args.corpus, True, "corpus")
    report = evaluate_model(model, corpus, char_budget=ck.config.char_budget)
    rows = [
        ("word precision", f"{report.word_precision:.2f}"),
        ("word recall", f"{report.word_recall:.2f}"),
        ("word F1", f"{report.word_f1:.2f}"),
        ("boundary precision", f"{report.boundary_precision:.2f}"),
        ("boundary recall", f"{report.boundary_recall:.2f}"),
        ("boundary MCC", f"{report.boundary_mcc:.4f}"),
        ("bpc", f"{report.bpc:.4f}"),
        ("avg word length", f"{report.avg_word_length:.2f}"),
    ]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    print(json.dumps(report.to_dict()))
    return 0


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_selfcheck

    return run_selfcheck(f"float{args.float}")


def _build_parser() -> _Parser:
    p = _Parser(prog="seglm", description="segmental language models for unsupervised word segmentation")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("stats", help="corpus statistics")
    sp.add_argument("corpus")
    sp.add_argument("--raw", action="store_true", help="input has no gold segmentation")
    sp.set_defaults(fn=cmd_stats)

    helps = {"train": "train a model", "sweep": "train an lr/seed grid and select"}
    for name, fn in (("train", cmd_train), ("sweep", cmd_sweep)):
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--float", type=int, choices=(32, 64), default=None)
        sp.add_argument("--out", default="runs", help="output directory")
        if name == "train":
            sp.add_argument("--resume", default=None, help="checkpoint to resume from")
        else:
            sp.add_argument("--lrs", default=None, help="comma-separated learning rates")
            sp.add_argument("--seeds", default=None, help=f"comma-separated seeds (default grid: {','.join(map(str, FINALIST_SEEDS))})")
            sp.add_argument("--workers", type=int, default=1)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("segment", help="segment raw text with a trained model")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("input")
    sp.add_argument("--out", default=None, help="output file (default stdout)")
    sp.set_defaults(fn=cmd_segment)

    sp = sub.add_parser("eval", help="score a model against gold segmentation")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("corpus")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("selfcheck", help="run the built-in oracle suites")
    sp.add_argument("--float", type=int, choices=(32, 64), default=64)
    sp.set_defaults(fn=cmd_selfcheck)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ValidationError as e:
        for problem in e.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    except NonFiniteLoss as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
