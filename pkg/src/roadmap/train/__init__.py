"""Desk-scale training harness: data, samplers, optimizers, loop, checkpoints."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .data import SyntheticConfig, generate_synthetic, holdout_split, read_csv, write_csv
from .loop import TrainConfig, TrainHistory, batch_step, embed, init_params, train
from .optim import OptimizerConfig, OptimizerState, optimizer_step
from .samplers import category_pair_batches, m_per_class_batches

__all__ = [
    "CheckpointError",
    "OptimizerConfig",
    "OptimizerState",
    "SyntheticConfig",
    "TrainConfig",
    "TrainHistory",
    "batch_step",
    "category_pair_batches",
    "embed",
    "generate_synthetic",
    "holdout_split",
    "init_params",
    "load_checkpoint",
    "m_per_class_batches",
    "optimizer_step",
    "read_csv",
    "save_checkpoint",
    "train",
    "write_csv",
]
