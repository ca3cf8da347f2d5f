"""Sinusoidal position encodings and the scalar position-mixing gate."""

from __future__ import annotations

import numpy as np

from ..numerics import Tensor, add, concat, constant, default_dtype, matmul, mul, relu


def sinusoidal_positions(n: int, d: int, dtype=None) -> np.ndarray:
    """(n, d) matrix: even columns sin(t / 10000^(2i/d)), odd columns cos."""
    if d % 2 != 0:
        raise ValueError(f"sinusoidal positions need an even dimension, got {d}")
    dtype = dtype or default_dtype()
    t = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(d // 2, dtype=np.float64)[None, :]
    angle = t / np.power(10000.0, 2.0 * i / d)
    out = np.empty((n, d), dtype=np.float64)
    out[:, 0::2] = np.sin(angle)
    out[:, 1::2] = np.cos(angle)
    return out.astype(dtype)


def gate_and_add(emb: Tensor, pos: np.ndarray, w: Tensor) -> Tensor:
    """Scale embeddings by a learned positive gate, then add positions.

    gate_t = 1 + relu([emb_t ; pos_t] @ w), one scalar per position, no
    bias. At w = 0 the gate is exactly 1 and the layer reduces to the plain
    additive encoding; the relu keeps it from shrinking embeddings.
    """
    if w.data.shape != (2 * emb.data.shape[-1], 1):
        raise ValueError(f"gate weight must be (2d, 1), got {w.data.shape}")
    pos_b = constant(np.broadcast_to(pos, emb.data.shape).copy())
    z = concat([emb, pos_b], axis=-1)
    gate = add(relu(matmul(z, w)), 1.0)
    return add(mul(gate, emb), pos_b)
