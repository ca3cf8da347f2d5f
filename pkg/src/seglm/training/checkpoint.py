"""Single-file checkpoints: parameters, optimizer state, step, config, vocab."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus import Vocabulary
from ..model import SegmentalLM
from ..numerics import float_mode
from .config import TrainConfig

FORMAT = "seglm-checkpoint"
VERSION = 1


def save_checkpoint(path, model: SegmentalLM, opt, step: int, config: TrainConfig) -> None:
    arrays = {
        "__format__": np.str_(FORMAT),
        "__version__": np.array(VERSION, dtype=np.int64),
        "float_mode": np.str_(float_mode()),
        "step": np.array(step, dtype=np.int64),
        "config_json": np.str_(json.dumps(config.to_dict())),
        "vocab_json": np.str_(json.dumps(model.vocab.content)),
    }
    for k, arr in model.state_arrays().items():
        arrays[f"param/{k}"] = arr
    if opt is not None:
        arrays.update(opt.state_arrays())
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **arrays)


@dataclass
class Checkpoint:
    config: TrainConfig
    vocab: Vocabulary
    step: int
    float_mode: str
    params: dict
    adam: dict | None


def load_checkpoint(path) -> Checkpoint:
    with np.load(path, allow_pickle=False) as z:
        if "__format__" not in z or str(z["__format__"][()]) != FORMAT:
            raise ValueError(f"{path}: not a {FORMAT} file")
        version = int(z["__version__"])
        if version > VERSION:
            raise ValueError(f"{path}: version {version} is newer than supported {VERSION}")
        config = TrainConfig.from_dict(json.loads(str(z["config_json"][()])))
        vocab = Vocabulary(content=json.loads(str(z["vocab_json"][()])))
        params = {k[len("param/"):]: z[k] for k in z.files if k.startswith("param/")}
        adam_keys = [k for k in z.files if k.startswith("adam_")]
        adam = {k: z[k] for k in adam_keys} if adam_keys else None
        return Checkpoint(
            config=config,
            vocab=vocab,
            step=int(z["step"]),
            float_mode=str(z["float_mode"][()]),
            params=params,
            adam=adam,
        )


def model_from_checkpoint(ck: Checkpoint) -> SegmentalLM:
    """Rebuild the model; parameters come from the file, not the init rng."""
    model = SegmentalLM(ck.config.to_model_config(), ck.vocab, np.random.default_rng(0))
    model.load_state(ck.params)
    return model
