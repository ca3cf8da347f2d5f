"""Segmental language models for unsupervised word segmentation.

Character-level models that learn where word boundaries fall from text
whose spaces were stripped: a context encoder (recurrent, directional
transformer, or window-masked transformer) feeds an LSTM segment decoder,
and a dynamic program sums or maximizes over every segmentation of each
sentence up to a segment-length cap.
"""

from .corpus import (
    CharSequence,
    Vocabulary,
    build_vocab,
    detokenize,
    format_segmentation,
    load_corpus,
    make_batches,
    pretrain_cbow,
)
from .lattice import (
    SegmentLattice,
    Segmentation,
    forward_marginal,
    viterbi,
)
from .metrics import MetricsReport, corpus_bpc, evaluate_model, segment_corpus
from .model import ModelConfig, SegmentalLM, sequence_loss
from .numerics import Tape, Tensor, set_float_mode
from .selfcheck import run_selfcheck
from .training import (
    TrainConfig,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
    select,
    sweep,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CharSequence",
    "MetricsReport",
    "ModelConfig",
    "SegmentLattice",
    "Segmentation",
    "SegmentalLM",
    "Tape",
    "Tensor",
    "TrainConfig",
    "Vocabulary",
    "__version__",
    "build_vocab",
    "corpus_bpc",
    "detokenize",
    "evaluate_model",
    "format_segmentation",
    "forward_marginal",
    "load_checkpoint",
    "load_corpus",
    "make_batches",
    "model_from_checkpoint",
    "pretrain_cbow",
    "run_selfcheck",
    "save_checkpoint",
    "segment_corpus",
    "select",
    "sequence_loss",
    "set_float_mode",
    "sweep",
    "train",
    "viterbi",
]
