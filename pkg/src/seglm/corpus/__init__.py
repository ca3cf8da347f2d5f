from .batching import Batch, CorpusStats, corpus_stats, make_batches
from .cbow import load_embeddings, pretrain_cbow, save_embeddings
from .loader import CharSequence, detokenize, format_segmentation, load_corpus, sequence_from_line
from .vocab import BOS, EOS, EOSEG, PAD, SPECIALS, UNK, Vocabulary, build_vocab

__all__ = [
    "Batch",
    "BOS",
    "CharSequence",
    "CorpusStats",
    "EOS",
    "EOSEG",
    "PAD",
    "SPECIALS",
    "UNK",
    "Vocabulary",
    "build_vocab",
    "corpus_stats",
    "detokenize",
    "format_segmentation",
    "load_corpus",
    "load_embeddings",
    "make_batches",
    "pretrain_cbow",
    "save_embeddings",
    "sequence_from_line",
]
