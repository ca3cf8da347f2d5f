"""Parameter initializers and the LSTM cell shared by encoder and decoder."""

from __future__ import annotations

import numpy as np

from ..numerics import Tensor, add, default_dtype, getitem, matmul, mul, parameter, sigmoid, tanh


def glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    a = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-a, a, size=(rows, cols)).astype(default_dtype())


def affine_params(rng: np.random.Generator, d_in: int, d_out: int, name: str) -> dict[str, Tensor]:
    return {
        f"{name}.w": parameter(glorot(rng, d_in, d_out), name=f"{name}.w"),
        f"{name}.b": parameter(np.zeros(d_out, dtype=default_dtype()), name=f"{name}.b"),
    }


def lstm_parameters(rng: np.random.Generator, d_in: int, hidden: int, name: str) -> dict[str, Tensor]:
    """Input and recurrent weights plus two full bias vectors.

    Keeping separate input-side and recurrent-side biases (as cuDNN-style
    cells do) is redundant for expressiveness but changes the parameter
    count, which this library pins down exactly. Gate block order along the
    4h axis is input, forget, cell, output; the forget gate starts at +1.
    """
    bih = np.zeros(4 * hidden, dtype=default_dtype())
    bih[hidden : 2 * hidden] = 1.0
    return {
        f"{name}.wih": parameter(glorot(rng, d_in, 4 * hidden), name=f"{name}.wih"),
        f"{name}.whh": parameter(glorot(rng, hidden, 4 * hidden), name=f"{name}.whh"),
        f"{name}.bih": parameter(bih, name=f"{name}.bih"),
        f"{name}.bhh": parameter(np.zeros(4 * hidden, dtype=default_dtype()), name=f"{name}.bhh"),
    }


def lstm_step(x: Tensor, h: Tensor, c: Tensor, wih: Tensor, whh: Tensor, bih: Tensor, bhh: Tensor):
    """One cell update. x: (B, d_in); h, c: (B, hidden). Returns (h', c')."""
    H = h.data.shape[-1]
    z = add(add(matmul(x, wih), matmul(h, whh)), add(bih, bhh))
    i = sigmoid(getitem(z, (Ellipsis, slice(0, H))))
    f = sigmoid(getitem(z, (Ellipsis, slice(H, 2 * H))))
    g = tanh(getitem(z, (Ellipsis, slice(2 * H, 3 * H))))
    o = sigmoid(getitem(z, (Ellipsis, slice(3 * H, 4 * H))))
    c2 = add(mul(f, c), mul(i, g))
    h2 = mul(o, tanh(c2))
    return h2, c2
