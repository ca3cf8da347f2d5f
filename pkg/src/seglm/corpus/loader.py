"""Corpus loading: one sentence per line, optionally space-segmented."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CharSequence:
    """One sentence as raw characters plus optional gold word boundaries.

    `boundaries` holds internal split positions b with 0 < b < len(text);
    the endpoints are implicit. None means the line carried no gold
    segmentation (inference-only input).
    """

    text: str
    boundaries: frozenset | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("empty character sequence")
        if self.boundaries is not None:
            bad = [b for b in self.boundaries if not (0 < b < len(self.text))]
            if bad:
                raise ValueError(f"boundary positions {sorted(bad)} outside (0, {len(self.text)})")

    def __len__(self) -> int:
        return len(self.text)

    @property
    def words(self) -> list[str]:
        """Gold words, in order. Requires gold boundaries."""
        if self.boundaries is None:
            raise ValueError("sequence has no gold segmentation")
        cuts = [0] + sorted(self.boundaries) + [len(self.text)]
        return [self.text[a:b] for a, b in zip(cuts, cuts[1:])]


def sequence_from_line(line: str, has_gold: bool) -> CharSequence:
    """Parse one corpus line.

    With gold segmentation, runs of whitespace separate words and the
    boundary set records where words meet. Without, whitespace is stripped
    and the line is a bare character stream.
    """
    if has_gold:
        words = line.split()
        text = "".join(words)
        bounds = set()
        pos = 0
        for w in words[:-1]:
            pos += len(w)
            bounds.add(pos)
        return CharSequence(text=text, boundaries=frozenset(bounds))
    return CharSequence(text="".join(line.split()), boundaries=None)


def load_corpus(path, has_gold: bool) -> list[CharSequence]:
    """Read a one-sentence-per-line file; blank lines are skipped with a count."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    corpus = []
    skipped = 0
    for ln in lines:
        if not ln.strip():
            skipped += 1
            continue
        corpus.append(sequence_from_line(ln, has_gold))
    if skipped:
        log.warning("%s: skipped %d blank line(s)", path, skipped)
    return corpus


def detokenize(seq: CharSequence) -> str:
    """Render a sequence as its space-separated gold words."""
    return " ".join(seq.words)


def format_segmentation(text: str, lengths: list[int]) -> str:
    """Render `text` split into consecutive segments of the given lengths."""
    if sum(lengths) != len(text):
        raise ValueError(f"segment lengths sum to {sum(lengths)}, text has {len(text)} chars")
    out = []
    pos = 0
    for ln in lengths:
        out.append(text[pos : pos + ln])
        pos += ln
    return " ".join(out)
