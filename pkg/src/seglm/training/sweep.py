"""Hyperparameter sweeps and the two model-selection rules.

Selection is deliberately dual: max validation boundary MCC is the lightly
supervised rule (it peeks at gold boundaries), min validation bpc is the
fully unsupervised rule. Both scan every checkpoint of every run, not just
final steps, and break ties toward the lower learning rate.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..corpus import CharSequence, Vocabulary
from .config import TrainConfig
from .loop import RunRecord, train

log = logging.getLogger(__name__)

PKU_LRS = (6e-4, 7e-4, 8e-4, 9e-4, 1e-3, 2e-3)
PTB_LRS = (6e-4, 8e-4, 1e-3, 3e-3, 5e-3, 7e-3)
FINALIST_SEEDS = (2, 3, 5, 8, 13)


@dataclass
class RunResult:
    config: TrainConfig
    records: list[RunRecord]


@dataclass
class SweepResult:
    runs: list[RunResult]

    def all_records(self):
        for run in self.runs:
            for rec in run.records:
                yield run, rec


def _run_one(args) -> RunResult:
    config, vocab, train_corpus, val_corpus, init_embeddings, out_dir = args
    result = train(
        config, vocab, train_corpus, val_corpus,
        init_embeddings=init_embeddings,
        out_dir=Path(out_dir) / config.run_id() if out_dir is not None else None,
    )
    return RunResult(config=config, records=result.records)


def sweep(
    base: TrainConfig,
    vocab: Vocabulary,
    train_corpus: list[CharSequence],
    val_corpus: list[CharSequence],
    lrs=None,
    seeds=None,
    init_embeddings: np.ndarray | None = None,
    out_dir=None,
    workers: int = 1,
) -> SweepResult:
    """Train every (lr, seed) combination of the grid around `base`."""
    lrs = list(lrs) if lrs is not None else [base.lr]
    seeds = list(seeds) if seeds is not None else [base.seed]
    tasks = [
        (replace(base, lr=lr, seed=seed), vocab, train_corpus, val_corpus, init_embeddings, out_dir)
        for lr in lrs
        for seed in seeds
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, tasks))
    else:
        runs = [_run_one(t) for t in tasks]
    return SweepResult(runs=runs)


def select(result: SweepResult, criterion: str):
    """Best (run, record) under "mcc" (maximize) or "bpc" (minimize).

    Scans all checkpoints; ties prefer the lower learning rate, then the
    earlier step, then run id, so selection is a total order.
    """
    if criterion not in ("mcc", "bpc"):
        raise ValueError(f"criterion must be 'mcc' or 'bpc', got {criterion!r}")
    best = None
    best_key = None
    for run, rec in result.all_records():
        value = rec.val_mcc if criterion == "mcc" else rec.val_bpc
        if value is None:
            continue
        primary = -value if criterion == "mcc" else value
        key = (primary, run.config.lr, rec.step, rec.run_id)
        if best_key is None or key < best_key:
            best, best_key = (run, rec), key
    if best is None:
        raise ValueError(f"no run in the sweep recorded a {criterion} value")
    return best
