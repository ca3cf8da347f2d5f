"""CBOW character-embedding pretraining with negative sampling."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .loader import CharSequence
from .vocab import Vocabulary

log = logging.getLogger(__name__)


def _expit(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def pretrain_cbow(
    corpus: list[CharSequence],
    vocab: Vocabulary,
    dim: int,
    window: int = 5,
    epochs: int = 32,
    negatives: int = 5,
    lr: float = 0.025,
    seed: int = 0,
) -> np.ndarray:
    """Train input embeddings by predicting each char from its mean context.

    Returns a (vocab.size, dim) float64 matrix. Every row, specials
    included, starts uniform(-0.5/dim, 0.5/dim); only characters that occur
    in the corpus are ever updated, so with epochs=0 the initialization
    comes back untouched. Updates are applied line at a time: all centers
    in a line share the parameter state from the line's start.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    vin = rng.uniform(-0.5 / dim, 0.5 / dim, size=(vocab.size, dim))
    if epochs == 0:
        return vin
    vout = np.zeros((vocab.size, dim))

    counts = np.zeros(vocab.size)
    lines = []
    for seq in corpus:
        ids = vocab.encode(seq.text)
        np.add.at(counts, ids, 1)
        n = len(ids)
        if n < 2:
            continue
        # Flat (center, context) pairs; window clips at the line edges.
        ctr, ctx = [], []
        for t in range(n):
            lo, hi = max(0, t - window), min(n, t + window + 1)
            for u in range(lo, hi):
                if u != t:
                    ctr.append(t)
                    ctx.append(ids[u])
        ctr = np.array(ctr, dtype=np.int64)
        nctx = np.bincount(ctr, minlength=n).astype(np.float64)
        lines.append((ids, ctr, np.array(ctx, dtype=np.int64), nctx))

    pool = np.flatnonzero(counts)
    weights = counts[pool] ** 0.75
    cum = np.cumsum(weights / weights.sum())

    for epoch in range(epochs):
        for ids, ctr, ctx, nctx in lines:
            n = len(ids)
            mean = np.zeros((n, dim))
            np.add.at(mean, ctr, vin[ctx])
            mean /= nctx[:, None]

            negs = pool[np.searchsorted(cum, rng.random((n, negatives)))]
            g_pos = _expit(np.einsum("nd,nd->n", mean, vout[ids])) - 1.0
            g_neg = _expit(np.einsum("nd,nkd->nk", mean, vout[negs]))

            g_mean = g_pos[:, None] * vout[ids] + np.einsum("nk,nkd->nd", g_neg, vout[negs])
            np.add.at(vout, ids, -lr * g_pos[:, None] * mean)
            np.add.at(vout, negs.ravel(), -lr * (g_neg[:, :, None] * mean[:, None, :]).reshape(-1, dim))
            np.add.at(vin, ctx, -lr * (g_mean / nctx[:, None])[ctr])
        log.debug("cbow epoch %d/%d done", epoch + 1, epochs)
    return vin


def save_embeddings(path, matrix: np.ndarray) -> None:
    """Text format: header "dim count", then one whitespace-joined row per char."""
    n, dim = matrix.shape
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{dim} {n}\n")
        for row in matrix:
            f.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_embeddings(path) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    dim, n = (int(tok) for tok in lines[0].split())
    if len(lines) - 1 != n:
        raise ValueError(f"{path}: header promises {n} rows, file has {len(lines) - 1}")
    out = np.array([[float(tok) for tok in ln.split()] for ln in lines[1:]])
    if out.shape != (n, dim):
        raise ValueError(f"{path}: rows do not match header dim {dim}")
    return out
