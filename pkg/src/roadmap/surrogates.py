"""Smooth AP surrogates with analytic score gradients.

``supap_loss`` keeps the exact step for the positive-vs-positive rank and
uses :func:`h_minus` for negatives, which makes it an upper bound of the
AP loss. ``smoothap_loss`` is the all-sigmoid baseline. ``calibration_loss``
is the hinge pair loss on absolute scores, and ``roadmap_loss`` mixes the
two with weight ``lambda_``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import DomainError, RankingInstance, split_scores


def delta_from(tau: float, epsilon: float) -> float:
    """Offset where the sigmoid slope ``sigma'(t/tau)`` has dropped to ``epsilon``-level."""
    if not 0.0 < epsilon < 0.5:
        raise DomainError(f"epsilon must lie in (0, 0.5), got {epsilon}")
    if tau <= 0.0:
        raise DomainError(f"tau must be positive, got {tau}")
    return tau * math.log((1.0 - epsilon) / epsilon)


@dataclass(frozen=True)
class SurrogateConfig:
    tau: float = 0.01
    rho: float = 100.0
    epsilon: float = 0.01

    def __post_init__(self):
        if self.tau <= 0:
            raise DomainError(f"tau must be > 0, got {self.tau}")
        if self.rho < 0:
            raise DomainError(f"rho must be >= 0, got {self.rho}")
        if not 0.0 < self.epsilon < 0.5:
            raise DomainError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")

    @property
    def delta(self) -> float:
        return delta_from(self.tau, self.epsilon)


@dataclass(frozen=True)
class LossConfig:
    lambda_: float = 0.5
    alpha: float = 0.9
    beta: float = 0.6

    def __post_init__(self):
        if not 0.0 <= self.lambda_ <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lambda_}")
        if not self.beta < self.alpha:
            raise DomainError(f"need beta < alpha, got alpha={self.alpha}, beta={self.beta}")


@dataclass(frozen=True)
class RankBreakdown:
    """Per-positive ranks, in the order of ``instance.positives``."""

    rank_plus: np.ndarray
    rank_minus: np.ndarray
    smooth_rank_minus: np.ndarray = None


@dataclass(frozen=True)
class LossOutput:
    value: float
    grad: np.ndarray


def h_minus(t, cfg: SurrogateConfig = SurrogateConfig()):
    """Piecewise step surrogate for negatives.

    Sigmoid margin below 0, shifted sigmoid on ``[0, delta]``, slope ``rho``
    beyond. ``t = 0`` takes the middle branch so ``h_minus(0) == 1``.
    """
    out = kernels.h_minus_array(t, cfg.tau, cfg.rho, cfg.delta)
    return float(out) if np.ndim(out) == 0 else out


def h_minus_grad(t, cfg: SurrogateConfig = SurrogateConfig()):
    """Derivative of :func:`h_minus`; at ``t = 0`` and ``t = delta`` the middle-branch slope."""
    out = kernels.h_minus_grad_array(t, cfg.tau, cfg.rho, cfg.delta)
    return float(out) if np.ndim(out) == 0 else out


def heaviside(t):
    """Step with ``H(0) = 1``: ties count against the ranked item."""
    return (np.asarray(t) >= 0).astype(np.float64)


def _require_positives(instance: RankingInstance):
    if instance.flagged:
        raise DomainError(
            f"instance for query {instance.query_index} has no positives; losses need at least one"
        )


def exact_ranks(scores, instance: RankingInstance) -> RankBreakdown:
    """Integer ``rank+`` and ``rank-`` of each positive (ties count)."""
    _require_positives(instance)
    pos, neg = split_scores(scores, instance)
    rank_plus = heaviside(pos[None, :] - pos[:, None]).sum(axis=1)
    rank_minus = heaviside(neg[None, :] - pos[:, None]).sum(axis=1)
    return RankBreakdown(rank_plus.astype(np.int64), rank_minus.astype(np.int64))


def smooth_neg_rank(scores, instance: RankingInstance, cfg: SurrogateConfig = SurrogateConfig()):
    """``sum_{j in N} h_minus(s_j - s_k)`` for each positive ``k``."""
    _require_positives(instance)
    pos, neg = split_scores(scores, instance)
    if neg.size == 0:
        return np.zeros(pos.size)
    return np.asarray(h_minus(neg[None, :] - pos[:, None], cfg)).sum(axis=1)


def _scatter(n, instance, grad_pos, grad_neg):
    grad = np.zeros(n)
    grad[instance.positives] = grad_pos
    grad[instance.negatives] = grad_neg
    return grad


def supap_loss(scores, instance: RankingInstance, cfg: SurrogateConfig = SurrogateConfig()) -> LossOutput:
    _require_positives(instance)
    pos, neg = split_scores(scores, instance)
    value, gp, gn = kernels.supap_kernel(pos, neg, cfg.tau, cfg.rho, cfg.delta)
    return LossOutput(value, _scatter(np.shape(scores)[0], instance, gp, gn))


def smoothap_loss(scores, instance: RankingInstance, cfg: SurrogateConfig = SurrogateConfig()) -> LossOutput:
    """Sigmoid-everywhere AP surrogate with temperature ``cfg.tau``."""
    _require_positives(instance)
    pos, neg = split_scores(scores, instance)
    value, gp, gn = kernels.smoothap_kernel(pos, neg, cfg.tau)
    return LossOutput(value, _scatter(np.shape(scores)[0], instance, gp, gn))


def calibration_loss(scores, instance: RankingInstance, lcfg: LossConfig = LossConfig()) -> LossOutput:
    """Mean hinge of positives below ``alpha`` plus mean hinge of negatives above ``beta``.

    An empty side contributes 0; equality with a threshold has zero subgradient.
    """
    if instance.size == 0:
        raise DomainError("calibration loss needs at least one positive or negative")
    pos, neg = split_scores(scores, instance)
    value = 0.0
    gp = np.zeros(pos.size)
    gn = np.zeros(neg.size)
    if pos.size:
        value += np.maximum(lcfg.alpha - pos, 0.0).sum() / pos.size
        gp[pos < lcfg.alpha] = -1.0 / pos.size
    if neg.size:
        value += np.maximum(neg - lcfg.beta, 0.0).sum() / neg.size
        gn[neg > lcfg.beta] = 1.0 / neg.size
    return LossOutput(float(value), _scatter(np.shape(scores)[0], instance, gp, gn))


def roadmap_loss(
    scores,
    instance: RankingInstance,
    cfg: SurrogateConfig = SurrogateConfig(),
    lcfg: LossConfig = LossConfig(),
) -> LossOutput:
    sup = supap_loss(scores, instance, cfg)
    cal = calibration_loss(scores, instance, lcfg)
    lam = lcfg.lambda_
    return LossOutput(
        (1.0 - lam) * sup.value + lam * cal.value,
        (1.0 - lam) * sup.grad + lam * cal.grad,
    )


LOSS_KINDS = ("supap", "smoothap", "calibration", "roadmap")


def loss_by_kind(kind: str, scores, instance, cfg=SurrogateConfig(), lcfg=LossConfig()) -> LossOutput:
    if kind == "supap":
        return supap_loss(scores, instance, cfg)
    if kind == "smoothap":
        return smoothap_loss(scores, instance, cfg)
    if kind == "calibration":
        return calibration_loss(scores, instance, lcfg)
    if kind == "roadmap":
        return roadmap_loss(scores, instance, cfg, lcfg)
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


def _batch_calibration(sim, labels, lcfg):
    b = sim.shape[0]
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(b, dtype=bool)
    pos = same & off
    neg = ~same
    n_pos = pos.sum(axis=1)
    n_neg = neg.sum(axis=1)
    valid = n_pos > 0
    inv_p = np.where(n_pos > 0, 1.0 / np.maximum(n_pos, 1), 0.0)
    inv_n = np.where(n_neg > 0, 1.0 / np.maximum(n_neg, 1), 0.0)
    hinge_p = np.where(pos, np.maximum(lcfg.alpha - sim, 0.0), 0.0)
    hinge_n = np.where(neg, np.maximum(sim - lcfg.beta, 0.0), 0.0)
    per_query = hinge_p.sum(axis=1) * inv_p + hinge_n.sum(axis=1) * inv_n
    grad = np.where(pos & (sim < lcfg.alpha), -inv_p[:, None], 0.0)
    grad += np.where(neg & (sim > lcfg.beta), inv_n[:, None], 0.0)
    grad[~valid] = 0.0
    return float(per_query[valid].sum()), grad, int(valid.sum())


def batch_loss(sim, labels, kind: str, cfg=SurrogateConfig(), lcfg=LossConfig()):
    """Mean in-batch loss where each row of ``sim`` queries the other rows.

    Returns ``(value, grad wrt sim, valid query count)``. Queries with no
    in-batch positive are skipped and excluded from the mean; with no valid
    query the value is 0 and the gradient is zero.
    """
    sim = np.asarray(sim, dtype=np.float64)
    labels = np.asarray(labels)
    if kind in ("supap", "smoothap", "roadmap"):
        code = kernels.SMOOTHAP if kind == "smoothap" else kernels.SUPAP
        total, grad, valid = kernels.batch_kernel(sim, labels, code, cfg.tau, cfg.rho, cfg.delta)
        if kind == "roadmap":
            lam = lcfg.lambda_
            c_total, c_grad, _ = _batch_calibration(sim, labels, lcfg)
            total = (1.0 - lam) * total + lam * c_total
            grad = (1.0 - lam) * grad + lam * c_grad
    elif kind == "calibration":
        total, grad, valid = _batch_calibration(sim, labels, lcfg)
    else:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    if valid == 0:
        return 0.0, np.zeros_like(sim), 0
    return total / valid, grad / valid, valid
