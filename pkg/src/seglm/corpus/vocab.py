"""Character vocabulary with reserved specials."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

PAD = "<pad>"
BOS = "<bos>"
EOS = "<eos>"
UNK = "<unk>"
EOSEG = "<eoseg>"
SPECIALS = (PAD, BOS, EOS, UNK, EOSEG)

_HEADER = "#seglm-vocab v1"


@dataclass
class Vocabulary:
    """Bijective char <-> index map; specials occupy indices 0..4.

    EOSEG is decoder-output-only: it never appears in any corpus sequence.
    The segment decoder's output space is characters (UNK included) plus
    EOSEG; PAD/BOS/EOS are never emitted, so decoder indices are vocabulary
    indices shifted down by 3.
    """

    content: list[str]
    char_to_index: dict[str, int] = field(init=False)

    def __post_init__(self):
        for ch in self.content:
            if len(ch) != 1:
                raise ValueError(f"content entries must be single characters, got {ch!r}")
        self.char_to_index = {ch: len(SPECIALS) + i for i, ch in enumerate(self.content)}
        if len(self.char_to_index) != len(self.content):
            raise ValueError("duplicate characters in vocabulary")

    pad_id = 0
    bos_id = 1
    eos_id = 2
    unk_id = 3
    eoseg_id = 4

    @property
    def size(self) -> int:
        return len(SPECIALS) + len(self.content)

    @property
    def content_size(self) -> int:
        return len(self.content)

    # -- decoder output space -------------------------------------------
    # index 0 = UNK, 1 = EOSEG, then content characters.
    @property
    def decoder_size(self) -> int:
        return self.size - 3

    @property
    def eoseg_decoder_id(self) -> int:
        return self.eoseg_id - 3

    def to_decoder_id(self, vocab_id: int) -> int:
        if vocab_id < self.unk_id:
            raise ValueError(f"vocab id {vocab_id} (PAD/BOS/EOS) has no decoder index")
        return vocab_id - 3

    # -- encoding ---------------------------------------------------------
    def encode(self, text: str) -> np.ndarray:
        """Map characters to indices; unknown characters map to UNK."""
        get = self.char_to_index.get
        return np.array([get(ch, self.unk_id) for ch in text], dtype=np.int64)

    def decode(self, ids: Iterable[int]) -> str:
        out = []
        for i in ids:
            i = int(i)
            if i < len(SPECIALS):
                raise ValueError(f"cannot decode special index {i} ({SPECIALS[i]}) as text")
            out.append(self.content[i - len(SPECIALS)])
        return "".join(out)

    def index_to_char(self, i: int) -> str:
        if i < len(SPECIALS):
            return SPECIALS[i]
        return self.content[i - len(SPECIALS)]

    # -- persistence -------------------------------------------------------
    def save(self, path) -> None:
        """One entry per line below a header; index = entry line number."""
        lines = [_HEADER]
        lines.extend(SPECIALS)
        lines.extend(self.content)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        raw = Path(path).read_text(encoding="utf-8").split("\n")
        if not raw or raw[0] != _HEADER:
            raise ValueError(f"{path}: missing vocabulary header {_HEADER!r}")
        entries = [ln for ln in raw[1:] if ln != ""]
        if tuple(entries[: len(SPECIALS)]) != SPECIALS:
            raise ValueError(f"{path}: specials must be listed first")
        return cls(content=entries[len(SPECIALS):])


def build_vocab(corpus, min_count: int = 1) -> Vocabulary:
    """Index every character seen at least `min_count` times.

    Rarer characters fall back to UNK at encode time. Content order is by
    descending count, ties by codepoint, so builds are deterministic.
    """
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts: Counter = Counter()
    for seq in corpus:
        counts.update(seq.text)
    content = sorted((ch for ch, c in counts.items() if c >= min_count), key=lambda ch: (-counts[ch], ch))
    return Vocabulary(content=content)
