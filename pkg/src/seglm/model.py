"""Segmental language model: encoder contexts in, segment lattices out.

The model reads an unsegmented character sequence prefixed with BOS,
encodes it, and scores every candidate segment (start i, length l <= K)
with an LSTM decoder primed from the context at the segment's start. The
context at prefixed position i has seen characters 0..i-1 but, crucially,
none of the characters the candidate segment itself covers, so the lattice
defines a proper generative model over segmentations. Training maximizes
the marginal likelihood over all segmentations via the forward recursion;
inference takes the Viterbi path.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import Vocabulary
from .encoder import (
    RecurrentEncoder,
    TransformerEncoder,
    build_directional_mask,
    build_segmental_mask,
    padded_attention_mask,
)
from .encoder.common import affine_params
from .lattice import SegmentLattice
from .lattice.decoder import SegmentDecoder
from .numerics import (
    Tensor,
    add,
    constant,
    default_dtype,
    dropout,
    embedding,
    getitem,
    logsumexp,
    matmul,
    parameter,
    scale,
    scatter,
    stack,
    tanh,
    tsum,
)

VARIANTS = ("masked", "directional", "recurrent")


@dataclass
class ModelConfig:
    variant: str = "masked"
    d_model: int = 256
    heads: int = 4
    ff_size: int = 509
    layers: int = 1
    max_seg_len: int = 5
    dropout_in: float = 0.1
    dropout_layer: float = 0.15

    def validate(self) -> list[str]:
        problems = []
        if self.variant not in VARIANTS:
            problems.append(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.d_model <= 0 or self.d_model % 2 != 0:
            problems.append(f"d_model must be positive and even, got {self.d_model}")
        if self.variant != "recurrent":
            if self.heads <= 0 or self.d_model % max(self.heads, 1) != 0:
                problems.append(f"heads must divide d_model, got {self.heads} for d_model={self.d_model}")
            if self.ff_size <= 0:
                problems.append(f"ff_size must be positive, got {self.ff_size}")
            if self.layers <= 0:
                problems.append(f"layers must be positive, got {self.layers}")
        if self.max_seg_len < 1:
            problems.append(f"max_seg_len must be at least 1, got {self.max_seg_len}")
        for field in ("dropout_in", "dropout_layer"):
            v = getattr(self, field)
            if not (0.0 <= v < 1.0):
                problems.append(f"{field} must be in [0, 1), got {v}")
        return problems

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class SegmentalLM:
    def __init__(self, config: ModelConfig, vocab: Vocabulary, rng: np.random.Generator):
        problems = config.validate()
        if problems:
            raise ValueError("; ".join(problems))
        self.config = config
        self.vocab = vocab
        d = config.d_model

        self.params: OrderedDict[str, Tensor] = OrderedDict()
        self.params["emb"] = parameter(
            rng.normal(0.0, 0.1, size=(vocab.size, d)).astype(default_dtype()), name="emb"
        )
        if config.variant == "recurrent":
            self.encoder = RecurrentEncoder(d, rng, dropout_in=config.dropout_in)
        else:
            self.encoder = TransformerEncoder(
                d, config.heads, config.ff_size, config.layers, rng,
                dropout_in=config.dropout_in, dropout_layer=config.dropout_layer,
            )
        # gh: context -> decoder initial hidden; gs: context -> decoder start input
        self.params.update(affine_params(rng, d, d, "gh"))
        self.params.update(affine_params(rng, d, d, "gs"))
        self.decoder = SegmentDecoder(d, vocab.decoder_size, rng)

    # -- parameter bookkeeping -------------------------------------------
    def parameters(self) -> OrderedDict:
        out: OrderedDict[str, Tensor] = OrderedDict()
        out["emb"] = self.params["emb"]
        out.update(self.encoder.parameters())
        for k in ("gh.w", "gh.b", "gs.w", "gs.b"):
            out[k] = self.params[k]
        out.update(self.decoder.parameters())
        return out

    def parameter_groups(self) -> OrderedDict:
        """Counting convention: the context-to-hidden bridge belongs to the
        encoder (it is the encoder's interface to the decoder); the start
        bridge feeds the decoder's input side and counts there."""
        groups: OrderedDict[str, list] = OrderedDict()
        groups["embedding"] = [("emb", self.params["emb"])]
        groups["encoder"] = list(self.encoder.parameters().items()) + [
            ("gh.w", self.params["gh.w"]), ("gh.b", self.params["gh.b"])]
        groups["decoder"] = [("gs.w", self.params["gs.w"]), ("gs.b", self.params["gs.b"])] + list(
            self.decoder.parameters().items())
        return groups

    def group_sizes(self) -> dict[str, int]:
        return {g: sum(t.data.size for _, t in ts) for g, ts in self.parameter_groups().items()}

    def state_arrays(self) -> OrderedDict:
        return OrderedDict((k, t.data.copy()) for k, t in self.parameters().items())

    def load_state(self, arrays: dict) -> None:
        params = self.parameters()
        missing = set(params) - set(arrays)
        extra = set(arrays) - set(params)
        if missing or extra:
            raise ValueError(f"checkpoint mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for k, t in params.items():
            if t.data.shape != arrays[k].shape:
                raise ValueError(f"{k}: checkpoint shape {arrays[k].shape} != model shape {t.data.shape}")
            t.data = arrays[k].astype(default_dtype())

    def set_embeddings(self, matrix: np.ndarray) -> None:
        if matrix.shape != self.params["emb"].data.shape:
            raise ValueError(f"embedding matrix {matrix.shape} != expected {self.params['emb'].data.shape}")
        self.params["emb"].data = matrix.astype(default_dtype())

    # -- forward passes ----------------------------------------------------
    def _contexts(self, ids_pref: np.ndarray, lengths_pref: np.ndarray, rng, training: bool) -> Tensor:
        emb = embedding(self.params["emb"], ids_pref)
        if self.config.variant == "recurrent":
            return self.encoder.encode(emb, rng=rng, training=training)
        n = ids_pref.shape[1]
        if self.config.variant == "masked":
            base = build_segmental_mask(n, self.config.max_seg_len)
        else:
            base = build_directional_mask(n)
        return self.encoder.encode(emb, padded_attention_mask(base, lengths_pref), rng=rng, training=training)

    def lattice_tensor(self, ids: np.ndarray, lengths: np.ndarray, rng=None, training: bool = False):
        """Dense per-batch lattice (B, n_max, K) plus the packed-row index.

        Entries at starts past a sequence's true end hold zeros, not scores;
        consumers must restrict themselves to i < length (the forward
        recursion below reads garbage only into alpha positions it never
        gathers). Entries whose segment overruns the end are finite garbage
        too, masked off in `lattices`.
        """
        B, n_max = ids.shape
        K = self.config.max_seg_len
        v = self.vocab
        ids_pref = np.concatenate([np.full((B, 1), v.bos_id, dtype=ids.dtype), ids], axis=1)
        ctx = self._contexts(ids_pref, lengths + 1, rng, training)

        rows_b, rows_i = np.nonzero(np.arange(n_max)[None, :] < lengths[:, None])
        ctx_rows = getitem(ctx, (rows_b, rows_i))  # prefixed position i = segment start i
        h0 = tanh(add(matmul(ctx_rows, self.params["gh.w"]), self.params["gh.b"]))
        start = tanh(add(matmul(ctx_rows, self.params["gs.w"]), self.params["gs.b"]))

        ids_ext = np.concatenate([ids, np.full((B, K), v.pad_id, dtype=ids.dtype)], axis=1)
        in_ids = ids_ext[rows_b[:, None], rows_i[:, None] + np.arange(K)[None, :]]  # (R, K)
        targets = np.where(in_ids >= v.unk_id, in_ids - 3, 0)
        emb_in = embedding(self.params["emb"], in_ids)

        start = dropout(start, self.config.dropout_in, rng, training)
        emb_in = dropout(emb_in, self.config.dropout_in, rng, training)
        rows = self.decoder.score_packed(start, h0, emb_in, targets, v.eoseg_decoder_id)
        return scatter(rows, (rows_b, rows_i), (B, n_max, K)), (rows_b, rows_i)

    def loss(self, ids: np.ndarray, lengths: np.ndarray, rng=None, training: bool = True):
        """Mean negative log marginal likelihood per character.

        Returns (loss Tensor, info dict); info carries the per-sequence
        log likelihoods as plain floats for metric reporting.
        """
        B, n_max = ids.shape
        K = self.config.max_seg_len
        lat, _ = self.lattice_tensor(ids, lengths, rng=rng, training=training)

        alphas = [constant(np.zeros(B, dtype=default_dtype()))]
        for i in range(1, n_max + 1):
            kmax = min(K, i)
            starts = np.arange(i - 1, i - kmax - 1, -1)
            seg = getitem(lat, (slice(None), starts, np.arange(kmax)))  # (B, kmax)
            prev = stack([alphas[i - k] for k in range(1, kmax + 1)], axis=1)
            alphas.append(logsumexp(add(seg, prev), axis=1))
        A = stack(alphas, axis=1)  # (B, n_max + 1)
        alpha_n = getitem(A, (np.arange(B), lengths))
        total_chars = int(lengths.sum())
        loss = scale(tsum(alpha_n), -1.0 / total_chars)
        info = {"loglik": alpha_n.data.astype(np.float64).copy(), "chars": total_chars}
        return loss, info

    def segment_logprobs(self, text_ids: np.ndarray) -> SegmentLattice:
        """Lattice for one unpadded id sequence."""
        ids = np.asarray(text_ids, dtype=np.int64)[None, :]
        return self.lattices(ids, np.array([ids.shape[1]]))[0]

    def rescore_segment(self, text_ids: np.ndarray, start: int, length: int) -> float:
        """Score one segment by an independent, unpacked decoder rollout.

        Slow by construction: shares no batching or packing with
        lattice_tensor, so it serves as a cross-check of that path.
        """
        ids = np.asarray(text_ids, dtype=np.int64)
        n = ids.shape[0]
        if not (0 <= start and 1 <= length <= self.config.max_seg_len and start + length <= n):
            raise IndexError(f"segment (start={start}, length={length}) invalid for n={n}")
        v = self.vocab
        ids_pref = np.concatenate([[v.bos_id], ids]).astype(np.int64)[None, :]
        ctx = self._contexts(ids_pref, np.array([n + 1]), None, False)
        ctx_i = getitem(ctx, (0, start))
        h0 = tanh(add(matmul(ctx_i, self.params["gh.w"]), self.params["gh.b"]))
        sv = tanh(add(matmul(ctx_i, self.params["gs.w"]), self.params["gs.b"]))
        seg_ids = ids[start : start + length]
        targets = np.where(seg_ids >= v.unk_id, seg_ids - 3, 0)
        emb_seq = embedding(self.params["emb"], seg_ids)
        return self.decoder.score_segment(sv, h0, emb_seq, targets, v.eoseg_decoder_id)

    def lattices(self, ids: np.ndarray, lengths: np.ndarray) -> list[SegmentLattice]:
        """Per-sequence lattices for inference; run outside any tape."""
        K = self.config.max_seg_len
        lat, _ = self.lattice_tensor(ids, lengths, training=False)
        out = []
        for b, n_b in enumerate(lengths):
            n_b = int(n_b)
            arr = lat.data[b, :n_b, :].astype(np.float64).copy()
            i = np.arange(n_b)[:, None]
            l = np.arange(1, K + 1)[None, :]
            arr[i + l > n_b] = -np.inf
            out.append(SegmentLattice(n=n_b, K=K, logp=arr))
        return out


def sequence_loss(model: SegmentalLM, batch, rng=None, training: bool = True):
    """Mean negative log likelihood per character over a Batch."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    return model.loss(batch.padded_ids(model.vocab), batch.lengths(), rng=rng, training=training)
