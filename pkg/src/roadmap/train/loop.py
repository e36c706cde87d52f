"""Training loop for a linear embedder under the AP surrogates."""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core import DomainError, cosine_similarity_matrix, cosine_similarity_matrix_backward
from ..decomp import dataset_gap, stratified_membership
from ..metrics import evaluate
from ..surrogates import LossConfig, SurrogateConfig, batch_loss
from .optim import OptimizerConfig, OptimizerState, optimizer_step
from .samplers import category_pair_batches, m_per_class_batches

log = logging.getLogger(__name__)

TRAIN_LOSSES = ("supap", "smoothap", "roadmap", "calibration")


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "roadmap"
    surrogate: SurrogateConfig = SurrogateConfig()
    loss_cfg: LossConfig = LossConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    epochs: int = 50
    batch_size: int = 32
    m: int = 4
    embed_dim: int = 16
    seed: int = 0
    probe_batches: int = 2
    # evaluation-split metrics every n epochs; the last epoch is always evaluated
    eval_every: int = 1
    ks: Tuple[int, ...] = (1, 2, 4, 8)
    categories: Optional[Dict[int, int]] = None

    def __post_init__(self):
        if self.loss not in TRAIN_LOSSES:
            raise DomainError(f"loss must be one of {TRAIN_LOSSES}, got {self.loss!r}")
        if self.epochs < 0 or self.embed_dim < 1 or self.eval_every < 1:
            raise DomainError("need epochs >= 0, embed_dim >= 1, eval_every >= 1")


@dataclass
class TrainHistory:
    epochs: List[dict] = field(default_factory=list)

    def losses(self) -> np.ndarray:
        return np.array([e["loss"] for e in self.epochs])

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.epochs)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_jsonl())


def init_params(feature_dim: int, embed_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 0])
    return rng.standard_normal((feature_dim, embed_dim)) / np.sqrt(feature_dim)


def embed(features, params) -> np.ndarray:
    return np.asarray(features, dtype=np.float64) @ params


def batch_step(params, features, labels, cfg: TrainConfig):
    """Loss and parameter gradient for one batch; ``None`` gradient if no valid query."""
    x = np.asarray(features, dtype=np.float64)
    emb = x @ params
    sim = cosine_similarity_matrix(emb)
    value, g_sim, valid = batch_loss(sim, labels, cfg.loss, cfg.surrogate, cfg.loss_cfg)
    if valid == 0:
        return value, None, 0
    g_emb = cosine_similarity_matrix_backward(emb, g_sim)
    return value, x.T @ g_emb, valid


def _epoch_batches(labels, cfg: TrainConfig, epoch: int):
    seed = [cfg.seed, 1, epoch]
    if cfg.categories:
        return category_pair_batches(labels, cfg.categories, cfg.batch_size, cfg.m, seed)
    return m_per_class_batches(labels, cfg.batch_size, cfg.m, seed)


def train(features, labels, cfg: TrainConfig = TrainConfig(), eval_features=None, eval_labels=None,
          params: Optional[np.ndarray] = None):
    """Fit the projection; returns ``(params, TrainHistory)``.

    When an evaluation split is given, each epoch records its metrics and
    the mean per-query decomposability gap over ``cfg.probe_batches``
    class-stratified batches. Deterministic for a fixed config.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    w = init_params(features.shape[1], cfg.embed_dim, cfg.seed) if params is None else np.array(params)
    state = OptimizerState.zeros(cfg.optimizer.kind, w.shape)
    history = TrainHistory()
    membership = None
    if eval_features is not None:
        membership = stratified_membership(eval_labels, cfg.probe_batches, seed=cfg.seed)
    for epoch in range(cfg.epochs):
        lr = cfg.optimizer.lr_at(epoch, cfg.epochs)
        losses = []
        for bidx in _epoch_batches(labels, cfg, epoch):
            value, grad, valid = batch_step(w, features[bidx], labels[bidx], cfg)
            if grad is None:
                log.warning("epoch %d: batch without a valid query skipped", epoch)
                continue
            losses.append(value)
            w, state = optimizer_step(w, grad, state, lr, cfg.optimizer)
        entry = {"epoch": epoch + 1, "lr": lr, "loss": float(np.mean(losses)) if losses else None}
        due = (epoch + 1) % cfg.eval_every == 0 or epoch + 1 == cfg.epochs
        if eval_features is not None and due:
            emb = embed(eval_features, w)
            entry["metrics"] = evaluate(emb, eval_labels, cfg.ks).to_dict()
            gap = dataset_gap(emb, eval_labels, membership, cfg.probe_batches,
                              cfg.loss_cfg.alpha, cfg.loss_cfg.beta)
            entry["dg"] = gap.dg
            entry["bound_worst"] = gap.bound_worst
            entry["bound_refined"] = gap.bound_refined
        history.epochs.append(entry)
    return w, history
