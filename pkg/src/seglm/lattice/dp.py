"""Segmentation lattice and the dynamic programs over it.

A lattice stores log P(segment) for every candidate segment of a sequence:
entry (i, l-1) scores the segment covering characters i..i+l-1, for l up to
the segment-length cap K. A segmentation is a composition of n into parts
of size at most K; its log score is the sum of its segments' entries, and
the sequence log-likelihood is the log-sum over all compositions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import logsumexp_vec

BRUTE_FORCE_LIMIT = 16


@dataclass
class SegmentLattice:
    n: int
    K: int
    logp: np.ndarray  # (n, K), -inf where i + l > n

    def __post_init__(self):
        if self.logp.shape != (self.n, self.K):
            raise ValueError(f"lattice shape {self.logp.shape} does not match n={self.n} K={self.K}")
        i = np.arange(self.n)[:, None]
        l = np.arange(1, self.K + 1)[None, :]
        over = i + l > self.n
        if np.any(np.isfinite(self.logp[over])):
            raise ValueError("finite score on a segment that overruns the sequence")
        if np.any(np.isnan(self.logp)) or np.any(self.logp[~over] == np.inf):
            raise ValueError("lattice entries must be log probabilities")

    def score(self, i: int, length: int) -> float:
        if not (0 <= i and 1 <= length <= self.K and i + length <= self.n):
            raise IndexError(f"segment (start={i}, length={length}) invalid for n={self.n} K={self.K}")
        return float(self.logp[i, length - 1])


@dataclass
class Segmentation:
    lengths: list[int]
    score: float

    @property
    def boundaries(self) -> frozenset:
        """Internal split positions, matching CharSequence.boundaries."""
        out, pos = set(), 0
        for ln in self.lengths[:-1]:
            pos += ln
            out.add(pos)
        return frozenset(out)


def forward_alphas(lat: SegmentLattice) -> np.ndarray:
    """alpha[i] = log P(x_0..x_{i-1}), marginalized over segmentations."""
    alpha = np.full(lat.n + 1, -np.inf)
    alpha[0] = 0.0
    for i in range(1, lat.n + 1):
        terms = [alpha[i - k] + lat.logp[i - k, k - 1] for k in range(1, min(lat.K, i) + 1)]
        alpha[i] = logsumexp_vec(terms)
    return alpha


def forward_marginal(lat: SegmentLattice) -> float:
    return float(forward_alphas(lat)[lat.n])


def viterbi(lat: SegmentLattice) -> Segmentation:
    """Highest-scoring segmentation; ties go to the shorter final segment."""
    best = np.full(lat.n + 1, -np.inf)
    best[0] = 0.0
    back = np.zeros(lat.n + 1, dtype=np.int64)
    for i in range(1, lat.n + 1):
        for k in range(1, min(lat.K, i) + 1):
            s = best[i - k] + lat.logp[i - k, k - 1]
            if s > best[i]:
                best[i] = s
                back[i] = k
    lengths = []
    i = lat.n
    while i > 0:
        lengths.append(int(back[i]))
        i -= back[i]
    lengths.reverse()
    return Segmentation(lengths=lengths, score=float(best[lat.n]))


def sequence_score(lat: SegmentLattice, lengths: list[int]) -> float:
    """Log score of one specific segmentation."""
    if sum(lengths) != lat.n:
        raise ValueError(f"lengths sum to {sum(lengths)}, lattice covers {lat.n}")
    total, pos = 0.0, 0
    for ln in lengths:
        total += lat.score(pos, ln)
        pos += ln
    return total


def enumerate_segmentations(n: int, K: int):
    """All compositions of n with parts in 1..K, as length tuples."""
    if n == 0:
        yield ()
        return
    for k in range(1, min(K, n) + 1):
        for rest in enumerate_segmentations(n - k, K):
            yield (k,) + rest


def _check_brute_force_size(n: int):
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"refusing brute force over 2^{n - 1} segmentations (n={n} > {BRUTE_FORCE_LIMIT})")


def brute_force_marginal(lat: SegmentLattice) -> float:
    """Reference total log probability by explicit enumeration."""
    _check_brute_force_size(lat.n)
    return logsumexp_vec([sequence_score(lat, list(c)) for c in enumerate_segmentations(lat.n, lat.K)])


def brute_force_best(lat: SegmentLattice) -> Segmentation:
    """Reference argmax by explicit enumeration; first composition wins ties.

    enumerate_segmentations yields in lexicographic order of lengths, so the
    tie winner has the shortest first segment, then shortest second, and so
    on. viterbi breaks ties toward the shorter final segment instead; tests
    comparing the two should compare scores, not lengths, on tied lattices.
    """
    _check_brute_force_size(lat.n)
    best, best_score = None, -np.inf
    for c in enumerate_segmentations(lat.n, lat.K):
        s = sequence_score(lat, list(c))
        if s > best_score:
            best, best_score = c, s
    return Segmentation(lengths=list(best), score=float(best_score))
