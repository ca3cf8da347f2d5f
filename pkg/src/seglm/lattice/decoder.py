"""LSTM segment decoder: scores every candidate segment in one rollout.

For a segment starting at i, the decoder is primed with a start input and
initial hidden state derived from the encoder context at i, then consumes
the segment's characters. Step m's output distribution scores character
x_{i+m}; one extra step scores the end-of-segment symbol. Because every
candidate start shares its character stream, a single K-step rollout per
start yields the scores of all K segment lengths at once: prefix sums of
the character terms plus the end term for each length.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..numerics import (
    Tensor,
    add,
    concat,
    cumsum,
    gather_last,
    getitem,
    log_softmax,
    matmul,
    reshape,
    stack,
    swapaxes,
)
from ..encoder.common import affine_params, lstm_parameters, lstm_step


class SegmentDecoder:
    def __init__(self, d: int, n_out: int, rng: np.random.Generator, name: str = "dec"):
        self.d, self.n_out = d, n_out
        self._name = name
        p: OrderedDict[str, Tensor] = OrderedDict(lstm_parameters(rng, d, d, name))
        p.update(affine_params(rng, d, n_out, f"{name}.out"))
        self.params = p

    def parameters(self) -> OrderedDict:
        return self.params

    def _lstm(self, x, h, c):
        p, nm = self.params, self._name
        return lstm_step(x, h, c, p[f"{nm}.wih"], p[f"{nm}.whh"], p[f"{nm}.bih"], p[f"{nm}.bhh"])

    def _logits(self, hs: list[Tensor]) -> Tensor:
        """Stack per-step hiddens (each (R, d)) into (steps, R, n_out) log probs."""
        p, nm = self.params, self._name
        steps, R = len(hs), hs[0].data.shape[0]
        flat = reshape(stack(hs, axis=0), (steps * R, self.d))
        return log_softmax(reshape(add(matmul(flat, p[f"{nm}.out.w"]), p[f"{nm}.out.b"]), (steps, R, self.n_out)))

    def score_packed(self, start: Tensor, h0: Tensor, emb_in: Tensor, targets: np.ndarray, eoseg: int) -> Tensor:
        """Score all segment lengths 1..K for R packed starts.

        start, h0: (R, d). emb_in: (R, K, d), the embedded characters at
        offsets 0..K-1 from each start (padding garbage past the sequence
        end is allowed; those entries are discarded downstream). targets:
        (R, K) decoder-space character ids aligned with emb_in. Returns
        (R, K) where column l-1 is the full log score of the length-l
        segment, end symbol included.
        """
        R, K, _ = emb_in.data.shape
        zeros = np.zeros_like(h0.data)
        h, c = h0, Tensor(zeros)
        hs = [None] * (K + 1)
        x = start
        for m in range(K + 1):
            h, c = self._lstm(x, h, c)
            hs[m] = h
            if m < K:
                x = getitem(emb_in, (slice(None), m))
        logp = self._logits(hs)  # (K+1, R, n_out)

        char_steps = getitem(logp, (slice(0, K),))  # steps 0..K-1 score chars
        picked = gather_last(char_steps, np.ascontiguousarray(targets.T)[:, :, None])
        char_cum = cumsum(swapaxes(reshape(picked, (K, R)), 0, 1), axis=1)  # (R, K)
        end_terms = swapaxes(getitem(logp, (slice(1, K + 1), slice(None), eoseg)), 0, 1)  # (R, K)
        return add(char_cum, end_terms)

    def score_segment(self, start: Tensor, h0: Tensor, emb_seq: Tensor, targets: np.ndarray, eoseg: int) -> float:
        """Independently score one segment of length l (no packing, no sharing).

        start, h0: (d,). emb_seq: (l, d). targets: (l,) decoder-space ids.
        This re-derives what one column of score_packed computes, by a
        separate rollout, so tests can use it as a cross-check.
        """
        l = emb_seq.data.shape[0]
        h = reshape(h0, (1, self.d))
        c = Tensor(np.zeros_like(h.data))
        x = reshape(start, (1, self.d))
        total = 0.0
        for m in range(l + 1):
            h, c = self._lstm(x, h, c)
            logp = self._logits([h]).data[0, 0]
            if m < l:
                total += float(logp[targets[m]])
                x = reshape(getitem(emb_seq, (m,)), (1, self.d))
            else:
                total += float(logp[eoseg])
        return total
