from .checkpoint import Checkpoint, load_checkpoint, model_from_checkpoint, save_checkpoint
from .config import SCHEDULES, TrainConfig
from .loop import NonFiniteLoss, RunRecord, TrainResult, batch_stream, rng_stream, train
from .optim import Adam, clip_gradients, global_grad_norm
from .schedule import lr_at
from .sweep import FINALIST_SEEDS, PKU_LRS, PTB_LRS, RunResult, SweepResult, select, sweep

__all__ = [
    "Adam",
    "Checkpoint",
    "FINALIST_SEEDS",
    "NonFiniteLoss",
    "PKU_LRS",
    "PTB_LRS",
    "RunRecord",
    "RunResult",
    "SCHEDULES",
    "SweepResult",
    "TrainConfig",
    "TrainResult",
    "batch_stream",
    "clip_gradients",
    "global_grad_norm",
    "load_checkpoint",
    "lr_at",
    "model_from_checkpoint",
    "rng_stream",
    "save_checkpoint",
    "select",
    "sweep",
    "train",
]
