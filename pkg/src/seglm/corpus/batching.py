"""Character-budget batching and corpus statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loader import CharSequence
from .vocab import Vocabulary


@dataclass
class CorpusStats:
    lines: int
    chars: int
    words: int | None
    distinct_chars: int
    avg_word_length: float | None


def corpus_stats(corpus: list[CharSequence]) -> CorpusStats:
    chars = sum(len(s) for s in corpus)
    distinct = len({ch for s in corpus for ch in s.text})
    if corpus and corpus[0].boundaries is not None:
        words = sum(len(s.boundaries) + 1 for s in corpus)
        awl = chars / words
    else:
        words = None
        awl = None
    return CorpusStats(lines=len(corpus), chars=chars, words=words, distinct_chars=distinct, avg_word_length=awl)


@dataclass
class Batch:
    """A group of sequences trained jointly.

    `indices` are positions in the source corpus so a batch can be traced
    back when training aborts.
    """

    sequences: list[CharSequence]
    indices: list[int]

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def total_chars(self) -> int:
        return sum(len(s) for s in self.sequences)

    @property
    def max_len(self) -> int:
        return max(len(s) for s in self.sequences)

    def lengths(self) -> np.ndarray:
        return np.array([len(s) for s in self.sequences], dtype=np.int64)

    def padded_ids(self, vocab: Vocabulary) -> np.ndarray:
        """(B, max_len) int array, PAD-filled past each sequence's end."""
        out = np.full((len(self.sequences), self.max_len), vocab.pad_id, dtype=np.int64)
        for b, seq in enumerate(self.sequences):
            out[b, : len(seq)] = vocab.encode(seq.text)
        return out


def make_batches(corpus: list[CharSequence], char_budget: int, rng: np.random.Generator | None = None) -> list[Batch]:
    """Greedily fill batches up to `char_budget` total characters.

    Order is a fresh shuffle when `rng` is given, corpus order otherwise.
    A sequence longer than the whole budget still trains, alone.
    """
    if char_budget <= 0:
        raise ValueError(f"char_budget must be positive, got {char_budget}")
    order = np.arange(len(corpus))
    if rng is not None:
        order = rng.permutation(order)
    batches: list[Batch] = []
    cur: list[int] = []
    cur_chars = 0
    for idx in order:
        n = len(corpus[idx])
        if cur and cur_chars + n > char_budget:
            batches.append(Batch(sequences=[corpus[i] for i in cur], indices=cur))
            cur, cur_chars = [], 0
        cur.append(int(idx))
        cur_chars += n
    if cur:
        batches.append(Batch(sequences=[corpus[i] for i in cur], indices=cur))
    return batches
