"""Corpus pipeline: vocabulary, sequences, batching, CBOW embeddings."""

import numpy as np
import pytest

from seglm.corpus import (
    CharSequence,
    Vocabulary,
    build_vocab,
    corpus_stats,
    detokenize,
    format_segmentation,
    load_corpus,
    load_embeddings,
    make_batches,
    pretrain_cbow,
    save_embeddings,
    sequence_from_line,
)


def test_specials_occupy_fixed_slots():
    v = Vocabulary(content=list("ab"))
    assert v.pad_id == 0 and v.bos_id == 1 and v.eos_id == 2
    assert v.unk_id == 3 and v.eoseg_id == 4
    assert v.size == 7
    assert v.content_size == 2


def test_decoder_space_excludes_structural_symbols():
    # The decoder can emit UNK, EOSEG, and content, but never PAD/BOS/EOS.
    v = Vocabulary(content=list("abc"))
    assert v.decoder_size == v.size - 3
    assert v.to_decoder_id(v.unk_id) == 0
    assert v.eoseg_decoder_id == 1
    assert v.to_decoder_id(v.encode("a")[0]) == 2


def test_encode_maps_oov_to_unk():
    v = Vocabulary(content=list("ab"))
    ids = v.encode("aXb")
    assert ids.dtype == np.int64
    assert ids[1] == v.unk_id
    assert v.index_to_char(ids[0]) == "a"


def test_decode_refuses_special_ids():
    v = Vocabulary(content=list("ab"))
    with pytest.raises(ValueError):
        v.decode(np.array([v.pad_id]))


def test_vocab_rejects_duplicates_and_multichar():
    with pytest.raises(ValueError):
        Vocabulary(content=["a", "a"])
    with pytest.raises(ValueError):
        Vocabulary(content=["ab"])


def test_vocab_roundtrip(tmp_path):
    v = Vocabulary(content=list("xyzq"))
    path = tmp_path / "vocab.txt"
    v.save(path)
    w = Vocabulary.load(path)
    assert w.content == v.content
    assert w.size == v.size


def test_build_vocab_orders_by_frequency_then_char():
    corpus = [CharSequence("bbba", None), CharSequence("ccca", None)]
    v = build_vocab(corpus)
    # b and c tie at 3, a has 2: ties break alphabetically.
    assert v.content == ["b", "c", "a"]


def test_build_vocab_min_count_drops_rare_chars():
    corpus = [CharSequence("aab", None)]
    v = build_vocab(corpus, min_count=2)
    assert v.content == ["a"]
    assert v.encode("b")[0] == v.unk_id


def test_sequence_from_line_gold_boundaries():
    seq = sequence_from_line("ab c de", has_gold=True)
    assert seq.text == "abcde"
    assert seq.boundaries == frozenset({2, 3})
    assert seq.words == ["ab", "c", "de"]


def test_sequence_from_line_raw():
    seq = sequence_from_line("abcde", has_gold=False)
    assert seq.text == "abcde"
    assert seq.boundaries is None


def test_boundaries_must_be_internal():
    with pytest.raises(ValueError):
        CharSequence("abc", frozenset({0}))
    with pytest.raises(ValueError):
        CharSequence("abc", frozenset({3}))
    with pytest.raises(ValueError):
        CharSequence("", frozenset())


def test_detokenize_roundtrip():
    seq = sequence_from_line("ab c de", has_gold=True)
    assert detokenize(seq) == "ab c de"


def test_format_segmentation():
    assert format_segmentation("abcde", [2, 1, 2]) == "ab c de"
    with pytest.raises(ValueError):
        format_segmentation("abcde", [2, 2])


def test_load_corpus_skips_blank_lines(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("ab c\n\n  \nde\n")
    corpus = load_corpus(p, has_gold=True)
    assert [s.text for s in corpus] == ["abc", "de"]


def test_corpus_stats_counts():
    corpus = [
        sequence_from_line("ab ab c", has_gold=True),
        sequence_from_line("c ab", has_gold=True),
        sequence_from_line("dd dd dd", has_gold=True),
    ]
    st = corpus_stats(corpus)
    assert st.lines == 3
    assert st.chars == 14
    assert st.words == 8
    assert st.distinct_chars == 4
    assert st.avg_word_length == pytest.approx(14 / 8)


# ---------------------------------------------------------------------------
# batching


def test_batches_cover_corpus_exactly_once():
    corpus = [CharSequence("a" * n, None) for n in (3, 5, 2, 8, 1, 4)]
    batches = make_batches(corpus, char_budget=8)
    seen = sorted(i for b in batches for i in b.indices)
    assert seen == list(range(len(corpus)))
    for b in batches:
        assert b.total_chars <= 8 or len(b.sequences) == 1


def test_oversized_sequence_gets_its_own_batch():
    corpus = [CharSequence("a" * 20, None), CharSequence("bb", None)]
    batches = make_batches(corpus, char_budget=8)
    sizes = sorted(len(b.sequences) for b in batches)
    assert sizes == [1, 1]


def test_batch_padding_and_lengths():
    v = Vocabulary(content=list("ab"))
    corpus = [CharSequence("aba", None), CharSequence("b", None)]
    batches = make_batches(corpus, char_budget=100)
    (batch,) = batches
    ids = batch.padded_ids(v)
    assert ids.shape == (2, 3)
    assert ids[1, 1] == v.pad_id and ids[1, 2] == v.pad_id
    np.testing.assert_array_equal(batch.lengths(), [3, 1])


def test_batch_shuffle_is_seeded():
    corpus = [CharSequence("a" * (i + 1), None) for i in range(10)]
    a = make_batches(corpus, char_budget=6, rng=np.random.default_rng(0))
    b = make_batches(corpus, char_budget=6, rng=np.random.default_rng(0))
    c = make_batches(corpus, char_budget=6, rng=np.random.default_rng(1))
    assert [x.indices for x in a] == [x.indices for x in b]
    assert [x.indices for x in a] != [x.indices for x in c]


# ---------------------------------------------------------------------------
# CBOW pretraining


def _tiny_corpus():
    lines = ["ab ab c", "c ab ab", "ab c ab"] * 10
    return [sequence_from_line(s, has_gold=True) for s in lines]


def test_cbow_shapes_and_determinism():
    corpus = _tiny_corpus()
    v = build_vocab(corpus)
    e1 = pretrain_cbow(corpus, v, dim=16, epochs=2, seed=5)
    e2 = pretrain_cbow(corpus, v, dim=16, epochs=2, seed=5)
    e3 = pretrain_cbow(corpus, v, dim=16, epochs=2, seed=6)
    assert e1.shape == (v.size, 16)
    np.testing.assert_array_equal(e1, e2)
    assert np.abs(e1 - e3).max() > 0


def test_cbow_zero_epochs_returns_init():
    corpus = _tiny_corpus()
    v = build_vocab(corpus)
    e = pretrain_cbow(corpus, v, dim=8, epochs=0, seed=5)
    assert np.abs(e).max() <= 0.5 / 8 + 1e-12


def test_cbow_training_moves_embeddings():
    corpus = _tiny_corpus()
    v = build_vocab(corpus)
    e0 = pretrain_cbow(corpus, v, dim=8, epochs=0, seed=5)
    e = pretrain_cbow(corpus, v, dim=8, epochs=8, seed=5)
    assert np.abs(e - e0).max() > 1e-3


def test_embeddings_roundtrip_exact(tmp_path):
    corpus = _tiny_corpus()
    v = build_vocab(corpus)
    e = pretrain_cbow(corpus, v, dim=8, epochs=2, seed=5)
    path = tmp_path / "emb.txt"
    save_embeddings(path, e)
    back = load_embeddings(path)
    np.testing.assert_array_equal(back, e)
