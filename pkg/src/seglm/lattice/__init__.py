from .decoder import SegmentDecoder
from .dp import (
    BRUTE_FORCE_LIMIT,
    SegmentLattice,
    Segmentation,
    brute_force_best,
    brute_force_marginal,
    enumerate_segmentations,
    forward_alphas,
    forward_marginal,
    sequence_score,
    viterbi,
)

__all__ = [
    "BRUTE_FORCE_LIMIT",
    "SegmentDecoder",
    "SegmentLattice",
    "Segmentation",
    "brute_force_best",
    "brute_force_marginal",
    "enumerate_segmentations",
    "forward_alphas",
    "forward_marginal",
    "sequence_score",
    "viterbi",
]
