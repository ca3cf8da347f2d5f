"""The training loop: seeded streams, stepping, validation, checkpoints.

Randomness is split into named streams derived from the run seed, one per
purpose (init, embedding pretraining, batch order per epoch, dropout per
step), so an interrupted run can be resumed mid-stream exactly: the resumed
process re-derives every stream from (seed, purpose, counter) instead of
needing serialized generator state.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..corpus import CharSequence, Vocabulary, make_batches, pretrain_cbow
from ..metrics import evaluate_model
from ..model import SegmentalLM, sequence_loss
from ..numerics import Tape, set_float_mode
from .checkpoint import Checkpoint, save_checkpoint
from .config import TrainConfig
from .optim import Adam, clip_gradients
from .schedule import lr_at

log = logging.getLogger(__name__)

STREAM_INIT = 0
STREAM_CBOW = 1
STREAM_BATCHES = 2
STREAM_DROPOUT = 3


def rng_stream(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [int(t) for t in tags]))


def batch_stream(corpus: list[CharSequence], char_budget: int, seed: int):
    """Endless (epoch, index, batch) triples; order reshuffles every epoch."""
    epoch = 0
    while True:
        rng = rng_stream(seed, STREAM_BATCHES, epoch)
        for i, b in enumerate(make_batches(corpus, char_budget, rng)):
            yield epoch, i, b
        epoch += 1


class NonFiniteLoss(RuntimeError):
    pass


@dataclass
class RunRecord:
    run_id: str
    step: int
    lr: float
    train_loss: float
    val_bpc: float | None
    val_mcc: float | None
    val_f1: float | None
    checkpoint: str | None

    def log_line(self) -> str:
        d = asdict(self)
        d.pop("checkpoint")
        return json.dumps(d)


@dataclass
class TrainResult:
    run_id: str
    records: list[RunRecord]
    final_loss: float
    out_dir: str | None


def train(
    config: TrainConfig,
    vocab: Vocabulary,
    train_corpus: list[CharSequence],
    val_corpus: list[CharSequence] | None = None,
    init_embeddings: np.ndarray | None = None,
    out_dir=None,
    resume_from: Checkpoint | None = None,
    keep_model: bool = False,
):
    """Run one training job; returns TrainResult (and the model if asked).

    Determinism contract: identical (config, corpora, float mode) produce
    identical metric logs, and resuming from a saved checkpoint continues
    exactly as the uninterrupted run would have.
    """
    set_float_mode(config.float_mode)
    run_id = config.run_id()
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    model = SegmentalLM(config.to_model_config(), vocab, rng_stream(config.seed, STREAM_INIT))
    if init_embeddings is None and config.cbow_epochs > 0:
        init_embeddings = pretrain_cbow(
            train_corpus, vocab, config.d_model,
            window=config.cbow_window, epochs=config.cbow_epochs, seed=config.seed,
        )
    if init_embeddings is not None:
        model.set_embeddings(init_embeddings)
    opt = Adam(model.parameters())

    step = 0
    if resume_from is not None:
        if resume_from.config.to_dict() != config.to_dict():
            raise ValueError("resume checkpoint was written under a different config")
        model.load_state(resume_from.params)
        opt.load_state(resume_from.adam)
        step = resume_from.step

    stream = batch_stream(train_corpus, config.char_budget, config.seed)
    for _ in range(step):  # fast-forward a resumed run to its batch position
        next(stream)

    records: list[RunRecord] = []
    log_file = (out_path / "metrics.jsonl").open("a") if out_path is not None else None
    train_loss = float("nan")
    try:
        while step < config.steps:
            epoch, bidx, batch = next(stream)
            lr = lr_at(step, config)
            with Tape() as tape:
                loss, _ = sequence_loss(model, batch, rng=rng_stream(config.seed, STREAM_DROPOUT, step), training=True)
                train_loss = float(loss.data)
                if not np.isfinite(train_loss):
                    raise NonFiniteLoss(
                        f"non-finite loss {train_loss} at step {step} (epoch {epoch}, batch {bidx})"
                    )
                tape.backward(loss)
            clip_gradients(opt.params, config.clip_norm)
            opt.step(lr)
            opt.zero_grad()
            step += 1

            if step % config.checkpoint_every == 0 or step == config.steps:
                rec = _evaluate_and_record(model, config, run_id, step, train_loss, val_corpus, out_path, opt)
                records.append(rec)
                if log_file is not None:
                    log_file.write(rec.log_line() + "\n")
                    log_file.flush()
                log.info(
                    "%s step %d loss %.4f bpc %s mcc %s f1 %s",
                    run_id, step, train_loss, rec.val_bpc, rec.val_mcc, rec.val_f1,
                )
    finally:
        if log_file is not None:
            log_file.close()

    result = TrainResult(run_id=run_id, records=records, final_loss=train_loss, out_dir=str(out_path) if out_path else None)
    return (result, model) if keep_model else result


def _evaluate_and_record(model, config, run_id, step, train_loss, val_corpus, out_path, opt) -> RunRecord:
    val_bpc = val_mcc = val_f1 = None
    if val_corpus:
        report = evaluate_model(model, val_corpus, char_budget=config.char_budget)
        val_bpc = report.bpc
        val_mcc = report.boundary_mcc
        val_f1 = report.word_f1
    ck_path = None
    if out_path is not None:
        ck_path = str(out_path / "checkpoints" / f"step-{step:06d}.npz")
        save_checkpoint(ck_path, model, opt, step, config)
    return RunRecord(
        run_id=run_id, step=step, lr=config.lr, train_loss=train_loss,
        val_bpc=val_bpc, val_mcc=val_mcc, val_f1=val_f1, checkpoint=ck_path,
    )
