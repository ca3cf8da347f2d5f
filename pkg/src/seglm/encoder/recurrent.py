"""Unidirectional LSTM context encoder."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..numerics import Tensor, add, constant, default_dtype, dropout, getitem, parameter, stack
from .common import lstm_parameters, lstm_step


class RecurrentEncoder:
    """Left-to-right LSTM over raw embeddings.

    Position information comes from the recurrence itself, so there is no
    sinusoidal machinery here. The initial hidden and cell states are
    learned. Output at position t depends only on inputs 0..t.
    """

    def __init__(self, d: int, rng: np.random.Generator, dropout_in: float = 0.1, name: str = "enc"):
        self.d = d
        self.dropout_in = dropout_in
        self.params: OrderedDict[str, Tensor] = OrderedDict(lstm_parameters(rng, d, d, name))
        self.params[f"{name}.h0"] = parameter(np.zeros(d, dtype=default_dtype()), name=f"{name}.h0")
        self.params[f"{name}.c0"] = parameter(np.zeros(d, dtype=default_dtype()), name=f"{name}.c0")
        self._name = name

    def parameters(self) -> OrderedDict:
        return self.params

    def encode(self, emb: Tensor, mask=None, rng=None, training: bool = False) -> Tensor:
        """(B, n, d) embeddings -> (B, n, d) contexts. `mask` is ignored."""
        p = self.params
        nm = self._name
        B, n, _ = emb.data.shape
        x = dropout(emb, self.dropout_in, rng, training)
        zero = constant(np.zeros((B, 1), dtype=default_dtype()))
        h = add(zero, p[f"{nm}.h0"])
        c = add(zero, p[f"{nm}.c0"])
        outs = []
        for t in range(n):
            x_t = getitem(x, (slice(None), t))
            h, c = lstm_step(x_t, h, c, p[f"{nm}.wih"], p[f"{nm}.whh"], p[f"{nm}.bih"], p[f"{nm}.bhh"])
            outs.append(h)
        return stack(outs, axis=1)
