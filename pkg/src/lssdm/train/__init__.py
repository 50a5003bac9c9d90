"""Losses and the training loop."""

from lssdm.train.losses import WindowBatch, kl_diag_gauss, loss_diffusion, loss_vae
from lssdm.train.trainer import EpochRecord, Trainer, TrainResult, train, validation_mae, write_train_log

__all__ = [
    "EpochRecord",
    "TrainResult",
    "Trainer",
    "WindowBatch",
    "kl_diag_gauss",
    "loss_diffusion",
    "loss_vae",
    "train",
    "validation_mae",
    "write_train_log",
]
