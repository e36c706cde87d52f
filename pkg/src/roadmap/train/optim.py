"""SGD-momentum and Adam with a step-decay learning-rate schedule."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core import DomainError


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"
    lr: float = 1e-3
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # None -> decay at 60% and 80% of the epoch budget
    decay_epochs: Optional[Tuple[int, ...]] = None
    decay_factor: float = 0.3

    def __post_init__(self):
        if self.kind not in ("adam", "sgd"):
            raise DomainError(f"optimizer must be 'adam' or 'sgd', got {self.kind!r}")
        if self.lr < 0:
            raise DomainError("learning rate must be >= 0")

    def milestones(self, epochs: int) -> Tuple[int, ...]:
        if self.decay_epochs is not None:
            return tuple(self.decay_epochs)
        return (int(round(0.6 * epochs)), int(round(0.8 * epochs)))

    def lr_at(self, epoch: int, epochs: int) -> float:
        passed = sum(epoch >= e for e in self.milestones(epochs))
        return self.lr * self.decay_factor**passed


@dataclass
class OptimizerState:
    kind: str
    step: int = 0
    first: Optional[np.ndarray] = None
    second: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, kind: str, shape) -> "OptimizerState":
        second = np.zeros(shape) if kind == "adam" else None
        return cls(kind, 0, np.zeros(shape), second)


def optimizer_step(params: np.ndarray, grads: np.ndarray, state: OptimizerState,
                   lr: float, cfg: OptimizerConfig = OptimizerConfig()):
    """Return ``(new_params, new_state)``; inputs are left untouched."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or state.first.shape != params.shape:
        raise DomainError(f"shape mismatch: params {params.shape}, grads {grads.shape}")
    step = state.step + 1
    if state.kind == "sgd":
        v = cfg.momentum * state.first + grads
        return params - lr * v, OptimizerState("sgd", step, v, None)
    m = cfg.beta1 * state.first + (1.0 - cfg.beta1) * grads
    v = cfg.beta2 * state.second + (1.0 - cfg.beta2) * grads * grads
    m_hat = m / (1.0 - cfg.beta1**step)
    v_hat = v / (1.0 - cfg.beta2**step)
    new = params - lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return new, OptimizerState("adam", step, m, v)
