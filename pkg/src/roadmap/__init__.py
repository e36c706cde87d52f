"""Differentiable average-precision surrogates and ranking diagnostics."""

from .core import (
    DomainError,
    RankingInstance,
    build_instance,
    cosine_similarity,
    cosine_similarity_backward,
)
from .kernels import BACKEND
from .metrics import MetricsReport, evaluate, exact_ap, map_at_r, recall_at_k
from .surrogates import (
    LossConfig,
    LossOutput,
    SurrogateConfig,
    calibration_loss,
    delta_from,
    exact_ranks,
    h_minus,
    h_minus_grad,
    roadmap_loss,
    smooth_neg_rank,
    smoothap_loss,
    supap_loss,
)

__version__ = "0.1.0"
