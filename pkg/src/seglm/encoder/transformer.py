"""Masked transformer context encoder.

The mask decides the variant: a segmental mask (blocking the K characters
to the right of each query) or a directional mask (blocking everything to
the right). Queries in layers past the first come from the previous layer's
output, but keys and values always come from the gated input embeddings.
If deeper layers took keys and values from layer outputs, a query at t
could reach blocked positions through the outputs at unblocked ones, and
the mask guarantee would not survive stacking.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..numerics import (
    Tensor,
    add,
    default_dtype,
    dropout,
    layer_norm,
    matmul,
    parameter,
    relu,
    reshape,
    scale,
    softmax,
    swapaxes,
)
from .common import affine_params, glorot
from .positional import gate_and_add, sinusoidal_positions


class TransformerEncoder:
    def __init__(
        self,
        d: int,
        heads: int,
        ff: int,
        layers: int,
        rng: np.random.Generator,
        dropout_in: float = 0.1,
        dropout_layer: float = 0.15,
        name: str = "enc",
    ):
        if d % heads != 0:
            raise ValueError(f"model dim {d} not divisible by {heads} heads")
        if d % 2 != 0:
            raise ValueError(f"model dim must be even for sinusoidal positions, got {d}")
        self.d, self.heads, self.ff, self.layers = d, heads, ff, layers
        self.dropout_in, self.dropout_layer = dropout_in, dropout_layer
        self._name = name

        dt = default_dtype()
        p: OrderedDict[str, Tensor] = OrderedDict()
        p[f"{name}.gate.w"] = parameter(rng.normal(0.0, 0.02, size=(2 * d, 1)).astype(dt), name=f"{name}.gate.w")
        p[f"{name}.ln_in.g"] = parameter(np.ones(d, dtype=dt), name=f"{name}.ln_in.g")
        p[f"{name}.ln_in.b"] = parameter(np.zeros(d, dtype=dt), name=f"{name}.ln_in.b")
        for l in range(layers):
            for proj in ("wq", "wk", "wv", "wo"):
                p[f"{name}.l{l}.{proj}"] = parameter(glorot(rng, d, d), name=f"{name}.l{l}.{proj}")
                p[f"{name}.l{l}.{proj[1]}b"] = parameter(np.zeros(d, dtype=dt), name=f"{name}.l{l}.{proj[1]}b")
            p.update(affine_params(rng, d, ff, f"{name}.l{l}.ff1"))
            p.update(affine_params(rng, ff, d, f"{name}.l{l}.ff2"))
            for ln in ("ln1", "ln2"):
                p[f"{name}.l{l}.{ln}.g"] = parameter(np.ones(d, dtype=dt), name=f"{name}.l{l}.{ln}.g")
                p[f"{name}.l{l}.{ln}.b"] = parameter(np.zeros(d, dtype=dt), name=f"{name}.l{l}.{ln}.b")
        self.params = p

    def parameters(self) -> OrderedDict:
        return self.params

    def _attend(self, l: int, q_in: Tensor, src: Tensor, mask: np.ndarray, rng, training: bool) -> Tensor:
        p, nm = self.params, self._name
        B, n, d = src.data.shape
        hd = d // self.heads

        def split(x):
            return swapaxes(reshape(x, (B, n, self.heads, hd)), 1, 2)

        q = split(add(matmul(q_in, p[f"{nm}.l{l}.wq"]), p[f"{nm}.l{l}.qb"]))
        k = split(add(matmul(src, p[f"{nm}.l{l}.wk"]), p[f"{nm}.l{l}.kb"]))
        v = split(add(matmul(src, p[f"{nm}.l{l}.wv"]), p[f"{nm}.l{l}.vb"]))
        scores = scale(matmul(q, swapaxes(k, 2, 3)), 1.0 / np.sqrt(hd))
        att = softmax(scores, mask=mask)
        ctx = reshape(swapaxes(matmul(att, v), 1, 2), (B, n, d))
        out = add(matmul(ctx, p[f"{nm}.l{l}.wo"]), p[f"{nm}.l{l}.ob"])
        return dropout(out, self.dropout_layer, rng, training)

    def encode(self, emb: Tensor, mask: np.ndarray, rng=None, training: bool = False) -> Tensor:
        """(B, n, d) embeddings + additive mask (n, n) or (B, 1, n, n) -> (B, n, d)."""
        p, nm = self.params, self._name
        n = emb.data.shape[1]
        pos = sinusoidal_positions(n, self.d)
        x = gate_and_add(emb, pos, p[f"{nm}.gate.w"])
        x = layer_norm(x, p[f"{nm}.ln_in.g"], p[f"{nm}.ln_in.b"])
        src = dropout(x, self.dropout_in, rng, training)

        h = src
        for l in range(self.layers):
            q_in = src if l == 0 else h
            a = self._attend(l, q_in, src, mask, rng, training)
            h = layer_norm(add(q_in, a), p[f"{nm}.l{l}.ln1.g"], p[f"{nm}.l{l}.ln1.b"])
            f = add(matmul(relu(add(matmul(h, p[f"{nm}.l{l}.ff1.w"]), p[f"{nm}.l{l}.ff1.b"])), p[f"{nm}.l{l}.ff2.w"]), p[f"{nm}.l{l}.ff2.b"])
            f = dropout(f, self.dropout_layer, rng, training)
            h = layer_norm(add(h, f), p[f"{nm}.l{l}.ln2.g"], p[f"{nm}.l{l}.ln2.b"])
        return h
