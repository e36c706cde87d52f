"""Exact retrieval metrics: AP, Recall@K and mAP@R."""

from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from .core import DomainError, RankingInstance, build_instance, cosine_similarity_matrix
from .surrogates import exact_ranks


def exact_ap(scores, instance: RankingInstance) -> float:
    """AP from step-function ranks; ties are counted pessimistically."""
    ranks = exact_ranks(scores, instance)
    rp = ranks.rank_plus.astype(np.float64)
    return float(np.mean(rp / (rp + ranks.rank_minus)))


def retrieval_order(scores, instance: RankingInstance) -> np.ndarray:
    """Retrieval-set element indices by descending score, ties by ascending index."""
    members = np.sort(np.concatenate([instance.positives, instance.negatives]))
    s = np.asarray(scores, dtype=np.float64)[members]
    order = np.lexsort((members, -s))
    return members[order]


def _relevance(scores, instance):
    order = retrieval_order(scores, instance)
    return np.isin(order, instance.positives)


def recall_at_k(scores, instance: RankingInstance, k: int) -> int:
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    rel = _relevance(scores, instance)
    return int(rel[: min(k, rel.size)].any())


def map_at_r(scores, instance: RankingInstance) -> float:
    if instance.flagged:
        raise DomainError("mAP@R needs at least one positive")
    r = instance.positives.size
    rel = _relevance(scores, instance)[:r]
    hits = np.cumsum(rel)
    precision = hits / np.arange(1, r + 1)
    return float(np.sum(precision * rel) / r)


@dataclass
class MetricsReport:
    map: float
    map_at_r: float
    recall_at: Dict[int, float] = field(default_factory=dict)
    query_count: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        out = {"map": self.map, "map_at_r": self.map_at_r}
        for k in sorted(self.recall_at):
            out[f"recall@{k}"] = self.recall_at[k]
        out["queries"] = self.query_count
        return out


def evaluate(embeddings, labels, ks: Sequence[int] = (1, 2, 4, 8)) -> MetricsReport:
    """Every element queries the rest by cosine similarity.

    Queries whose class has no other member are skipped and counted in
    ``skipped``.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n < 2:
        raise DomainError("evaluation needs at least 2 elements")
    sim = cosine_similarity_matrix(embeddings)
    aps, maprs = [], []
    recalls = {k: [] for k in ks}
    skipped = 0
    for i in range(n):
        inst = build_instance(labels, i)
        if inst.flagged:
            skipped += 1
            continue
        s = sim[i]
        aps.append(exact_ap(s, inst))
        maprs.append(map_at_r(s, inst))
        rel = _relevance(s, inst)
        for k in ks:
            recalls[k].append(float(rel[: min(k, rel.size)].any()))
    if not aps:
        raise DomainError("no query has a positive; nothing to evaluate")
    return MetricsReport(
        map=float(np.mean(aps)),
        map_at_r=float(np.mean(maprs)),
        recall_at={k: float(np.mean(v)) for k, v in recalls.items()},
        query_count=len(aps),
        skipped=skipped,
    )
