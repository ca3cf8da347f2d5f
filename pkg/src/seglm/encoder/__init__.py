from .common import affine_params, glorot, lstm_parameters, lstm_step
from .masks import build_directional_mask, build_segmental_mask, padded_attention_mask
from .positional import gate_and_add, sinusoidal_positions
from .recurrent import RecurrentEncoder
from .transformer import TransformerEncoder

__all__ = [
    "RecurrentEncoder",
    "TransformerEncoder",
    "affine_params",
    "build_directional_mask",
    "build_segmental_mask",
    "gate_and_add",
    "glorot",
    "lstm_parameters",
    "lstm_step",
    "padded_attention_mask",
    "sinusoidal_positions",
]
