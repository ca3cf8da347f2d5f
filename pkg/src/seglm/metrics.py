"""Segmentation and language-modeling metrics.

Two metric families live here on purpose and are never derived from each
other: word-level scores (exact span matches) and boundary-level scores
(per-position binary classification). A hypothesis can look strong on one
and weak on the other, so reports carry both.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .corpus import CharSequence, make_batches
from .lattice import viterbi


@dataclass
class BoundaryStats:
    precision: float  # percent
    recall: float  # percent
    mcc: float  # in [-1, 1]
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass
class MetricsReport:
    word_precision: float
    word_recall: float
    word_f1: float
    boundary_precision: float
    boundary_recall: float
    boundary_mcc: float
    bpc: float | None
    avg_word_length: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_aligned(hyp: list[CharSequence], ref: list[CharSequence]) -> None:
    if len(hyp) != len(ref):
        raise ValueError(f"segmentation of different text: {len(hyp)} vs {len(ref)} lines")
    for i, (h, r) in enumerate(zip(hyp, ref)):
        if h.text != r.text:
            raise ValueError(f"segmentation of different text at line {i}: {h.text!r} vs {r.text!r}")
        if h.boundaries is None or r.boundaries is None:
            raise ValueError(f"line {i} lacks segment boundaries")


def _spans(seq: CharSequence) -> set[tuple[int, int]]:
    cuts = [0] + sorted(seq.boundaries) + [len(seq.text)]
    return set(zip(cuts, cuts[1:]))


def word_prf(hyp: list[CharSequence], ref: list[CharSequence]) -> tuple[float, float, float]:
    """Corpus-level word precision/recall/F1 in percent.

    A hypothesis word counts as correct only when its exact (start, end)
    span appears in the reference for the same line; counts are pooled over
    the whole corpus before the ratios are taken.
    """
    _check_aligned(hyp, ref)
    correct = n_hyp = n_ref = 0
    for h, r in zip(hyp, ref):
        hs, rs = _spans(h), _spans(r)
        correct += len(hs & rs)
        n_hyp += len(hs)
        n_ref += len(rs)
    p = 100.0 * correct / n_hyp if n_hyp else 0.0
    r = 100.0 * correct / n_ref if n_ref else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def boundary_stats(hyp: list[CharSequence], ref: list[CharSequence]) -> BoundaryStats:
    """Boundary-vs-no-boundary classification over internal positions.

    Positions 1..n-1 of each line are classified; line-final positions are
    not decisions (every segmentation ends a word there). MCC is defined as
    0 when any confusion-matrix marginal is empty.
    """
    _check_aligned(hyp, ref)
    tp = fp = fn = tn = 0
    for h, r in zip(hyp, ref):
        hb, rb = h.boundaries, r.boundaries
        for pos in range(1, len(h.text)):
            in_h, in_r = pos in hb, pos in rb
            if in_h and in_r:
                tp += 1
            elif in_h:
                fp += 1
            elif in_r:
                fn += 1
            else:
                tn += 1
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(denom) if denom else 0.0
    return BoundaryStats(precision=precision, recall=recall, mcc=mcc, tp=tp, fp=fp, fn=fn, tn=tn)


def avg_word_length(segs: list[CharSequence]) -> float:
    chars = sum(len(s.text) for s in segs)
    words = sum(len(s.boundaries) + 1 for s in segs)
    if words == 0:
        raise ValueError("no segments")
    return chars / words


def corpus_loglik(model, corpus: list[CharSequence], char_budget: int = 4096) -> tuple[float, int]:
    """Total log likelihood (marginal over segmentations) and char count."""
    total = 0.0
    chars = 0
    for batch in make_batches(corpus, char_budget):
        _, info = model.loss(batch.padded_ids(model.vocab), batch.lengths(), training=False)
        total += float(info["loglik"].sum())
        chars += info["chars"]
    return total, chars


def corpus_bpc(model, corpus: list[CharSequence], char_budget: int = 4096) -> float:
    """bits per character: -log2 likelihood / character count, dropout off."""
    total, chars = corpus_loglik(model, corpus, char_budget)
    return -total / (math.log(2.0) * chars)


def segment_corpus(model, corpus: list[CharSequence], char_budget: int = 4096) -> list[CharSequence]:
    """Maximum-probability segmentation of every line, in corpus order."""
    out: list[CharSequence | None] = [None] * len(corpus)
    for batch in make_batches(corpus, char_budget):
        lats = model.lattices(batch.padded_ids(model.vocab), batch.lengths())
        for seq_idx, lat in zip(batch.indices, lats):
            seg = viterbi(lat)
            out[seq_idx] = CharSequence(text=corpus[seq_idx].text, boundaries=seg.boundaries)
    return out  # type: ignore[return-value]


def evaluate_model(model, corpus: list[CharSequence], char_budget: int = 4096) -> MetricsReport:
    """Segment the corpus against its gold boundaries and report everything."""
    hyp = segment_corpus(model, corpus, char_budget)
    p, r, f1 = word_prf(hyp, corpus)
    b = boundary_stats(hyp, corpus)
    return MetricsReport(
        word_precision=p,
        word_recall=r,
        word_f1=f1,
        boundary_precision=b.precision,
        boundary_recall=b.recall,
        boundary_mcc=b.mcc,
        bpc=corpus_bpc(model, corpus, char_budget),
        avg_word_length=avg_word_length(hyp),
    )
