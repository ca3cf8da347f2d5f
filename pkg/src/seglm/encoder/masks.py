"""Additive attention masks.

Entries are 0.0 where attention is allowed and -inf where it is blocked;
the mask is added to raw attention scores before the softmax. Row index i
is the query position, column index j the key position.
"""

from __future__ import annotations

import numpy as np

from ..numerics import default_dtype


def build_segmental_mask(n: int, K: int, dtype=None) -> np.ndarray:
    """Block the K positions immediately to the right of each query.

    Position i may attend to the past (j <= i) and to the far future
    (j > i + K), but never to j in (i, i + K]. An encoder under this mask
    cannot see the characters of any segment that starts at the position it
    summarizes, so its output is a legal conditioning context for segments
    of length up to K.
    """
    if n <= 0 or K <= 0:
        raise ValueError(f"need n > 0 and K > 0, got n={n} K={K}")
    dtype = dtype or default_dtype()
    j = np.arange(n)
    delta = j[None, :] - j[:, None]
    mask = np.zeros((n, n), dtype=dtype)
    mask[(delta > 0) & (delta <= K)] = -np.inf
    return mask


def build_directional_mask(n: int, dtype=None) -> np.ndarray:
    """Block all future positions: j > i is -inf, j <= i is open."""
    if n <= 0:
        raise ValueError(f"need n > 0, got n={n}")
    dtype = dtype or default_dtype()
    j = np.arange(n)
    mask = np.zeros((n, n), dtype=dtype)
    mask[j[None, :] > j[:, None]] = -np.inf
    return mask


def padded_attention_mask(base: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Per-sequence masks for a padded batch: (B, 1, n, n).

    Key columns at or past each sequence's true length are closed on top of
    the base pattern. Column 0 is open in both base patterns, so no softmax
    row is ever fully masked.
    """
    n = base.shape[0]
    closed = np.arange(n)[None, :] >= np.asarray(lengths)[:, None]  # (B, n) key padding
    out = np.where(closed[:, None, :], base.dtype.type(-np.inf), base[None, :, :])
    return out[:, None, :, :]
