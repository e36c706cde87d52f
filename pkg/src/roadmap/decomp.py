"""Decomposability gap of AP across batches and its two upper bounds.

Batch ids are 0-based: ``membership[j]`` in ``range(n_batches)`` for every
element ``j`` of the score vector.
"""

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DomainError, RankingInstance, build_instance, cosine_similarity_matrix
from .metrics import exact_ap


@dataclass(frozen=True)
class BatchCounts:
    """Per-batch positive and negative counts for one query."""

    positives: tuple
    negatives: tuple

    def __post_init__(self):
        if len(self.positives) != len(self.negatives) or not self.positives:
            raise DomainError("positives and negatives need one count per batch, K >= 1")
        if min(self.positives) < 0 or min(self.negatives) < 0:
            raise DomainError("counts must be non-negative")

    @property
    def n_batches(self) -> int:
        return len(self.positives)

    @classmethod
    def uniform(cls, n_batches: int, n_pos: int, n_neg: int) -> "BatchCounts":
        return cls((n_pos,) * n_batches, (n_neg,) * n_batches)


@dataclass(frozen=True)
class BatchAssignment:
    membership: np.ndarray
    n_batches: int

    def __post_init__(self):
        m = np.asarray(self.membership)
        if m.size and (m.min() < 0 or m.max() >= self.n_batches):
            raise DomainError(f"batch ids must lie in [0, {self.n_batches})")

    def counts(self, instance: RankingInstance) -> BatchCounts:
        m = np.asarray(self.membership)
        p = np.bincount(m[instance.positives], minlength=self.n_batches)
        n = np.bincount(m[instance.negatives], minlength=self.n_batches)
        return BatchCounts(tuple(int(x) for x in p), tuple(int(x) for x in n))

    def batch_instance(self, instance: RankingInstance, b: int) -> RankingInstance:
        m = np.asarray(self.membership)
        return RankingInstance(
            instance.positives[m[instance.positives] == b],
            instance.negatives[m[instance.negatives] == b],
            instance.query_index,
        )


@dataclass(frozen=True)
class CalibrationStats:
    """Per-batch counts of positives/negatives that respect (G) or violate (E) the thresholds."""

    g_plus: tuple
    e_plus: tuple
    g_minus: tuple
    e_minus: tuple

    def counts(self) -> BatchCounts:
        return BatchCounts(
            tuple(g + e for g, e in zip(self.g_plus, self.e_plus)),
            tuple(g + e for g, e in zip(self.g_minus, self.e_minus)),
        )


@dataclass
class DgReport:
    batch_aps: list
    global_ap: float
    dg: float
    bound_worst: float
    bound_refined: Optional[float] = None
    assumption_holds: bool = True

    def to_dict(self) -> dict:
        return {
            "batch_aps": list(self.batch_aps),
            "global_ap": self.global_ap,
            "dg": self.dg,
            "bound_worst": self.bound_worst,
            "bound_refined": self.bound_refined,
        }


def worst_case_bound(counts: BatchCounts) -> float:
    """Gap bound when batches are perfectly ranked and stacked one after another.

    The ``b``-th batch's ``j``-th positive is assumed outranked by every
    element of the batches before it.
    """
    total_pos = sum(counts.positives)
    if total_pos == 0:
        raise DomainError("bound needs at least one positive")
    acc = 0.0
    p_prev = n_prev = 0
    for p_b, n_b in zip(counts.positives, counts.negatives):
        for j in range(1, p_b + 1):
            acc += (j + p_prev) / (j + p_prev + n_prev)
        p_prev += p_b
        n_prev += n_b
    return 1.0 - acc / total_pos


def worst_case_bound_any_order(counts: BatchCounts) -> float:
    """:func:`worst_case_bound` maximised over the stacking order of the batches.

    With unequal batch compositions the stacking order matters, and only the
    maximum bounds the gap.
    """
    batches = sorted(set(itertools.permutations(zip(counts.positives, counts.negatives))))
    return max(
        worst_case_bound(BatchCounts(tuple(p for p, _ in o), tuple(n for _, n in o)))
        for o in batches
    )


def calibration_stats(scores, instance: RankingInstance, assignment: BatchAssignment,
                      alpha: float, beta: float) -> CalibrationStats:
    """Positives respect the thresholds iff ``s >= alpha``; negatives iff ``s <= beta``."""
    if not beta < alpha:
        raise DomainError(f"need beta < alpha, got alpha={alpha}, beta={beta}")
    s = np.asarray(scores, dtype=np.float64)
    m = np.asarray(assignment.membership)
    k = assignment.n_batches
    pos_m, pos_s = m[instance.positives], s[instance.positives]
    neg_m, neg_s = m[instance.negatives], s[instance.negatives]
    g_plus = np.bincount(pos_m[pos_s >= alpha], minlength=k)
    e_plus = np.bincount(pos_m[pos_s < alpha], minlength=k)
    g_minus = np.bincount(neg_m[neg_s <= beta], minlength=k)
    e_minus = np.bincount(neg_m[neg_s > beta], minlength=k)
    as_t = lambda a: tuple(int(x) for x in a)  # noqa: E731
    return CalibrationStats(as_t(g_plus), as_t(e_plus), as_t(g_minus), as_t(e_minus))


def refined_bound(stats: CalibrationStats) -> float:
    """Gap bound using threshold-respecting counts, evaluated term by term.

    Respecting positives are ranked against earlier batches' respecting
    positives and violating negatives; violating positives against every
    earlier element plus their own batch's respecting positives.
    """
    counts = stats.counts()
    total_pos = sum(counts.positives)
    if total_pos == 0:
        raise DomainError("bound needs at least one positive")
    acc = 0.0
    g_prev = e_minus_prev = p_prev = n_prev = 0
    for b in range(counts.n_batches):
        g_b = stats.g_plus[b]
        for j in range(1, g_b + 1):
            acc += (j + g_prev) / (j + g_prev + e_minus_prev)
        for j in range(1, stats.e_plus[b] + 1):
            acc += (j + g_b + p_prev) / (j + g_b + p_prev + n_prev)
        g_prev += g_b
        e_minus_prev += stats.e_minus[b]
        p_prev += counts.positives[b]
        n_prev += counts.negatives[b]
    return 1.0 - acc / total_pos


def decomposability_gap(scores, instance: RankingInstance, assignment: BatchAssignment,
                        alpha: Optional[float] = None, beta: Optional[float] = None) -> DgReport:
    """Mean per-batch AP minus AP over the union, plus both bound values.

    ``assumption_holds`` is False when some batch AP is below 1; the bounds
    are still evaluated but only guarantee anything when it is True.
    """
    if instance.flagged:
        raise DomainError(f"query {instance.query_index} has no positives")
    batch_aps = []
    for b in range(assignment.n_batches):
        sub = assignment.batch_instance(instance, b)
        if sub.flagged:
            raise DomainError(
                f"batch {b} has no positive for query {instance.query_index}"
            )
        batch_aps.append(exact_ap(scores, sub))
    global_ap = exact_ap(scores, instance)
    dg = float(np.mean(batch_aps)) - global_ap
    refined = None
    if alpha is not None and beta is not None:
        refined = refined_bound(calibration_stats(scores, instance, assignment, alpha, beta))
    return DgReport(
        batch_aps=batch_aps,
        global_ap=global_ap,
        dg=dg,
        bound_worst=worst_case_bound(assignment.counts(instance)),
        bound_refined=refined,
        assumption_holds=all(ap == 1.0 for ap in batch_aps),
    )


def stratified_membership(labels, n_batches: int, seed: int = 0) -> np.ndarray:
    """Deal each class's (shuffled) members round-robin over ``n_batches`` batches."""
    if n_batches < 1:
        raise DomainError("n_batches must be >= 1")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    membership = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        membership[idx] = (np.arange(idx.size) + offset) % n_batches
        offset += idx.size
    return membership


@dataclass
class DatasetGap:
    dg: float
    bound_worst: float
    bound_refined: Optional[float]
    queries: int
    skipped: int
    assumption_violations: int
    reports: list

    def to_dict(self, per_query: bool = False) -> dict:
        out = {
            "dg": self.dg,
            "bound_worst": self.bound_worst,
            "bound_refined": self.bound_refined,
            "queries": self.queries,
            "skipped": self.skipped,
            "assumption_violations": self.assumption_violations,
        }
        if per_query:
            out["per_query"] = [r.to_dict() for r in self.reports]
        return out


def dataset_gap(embeddings, labels, membership: Sequence[int], n_batches: int,
                alpha: Optional[float] = None, beta: Optional[float] = None,
                skip_missing: bool = True) -> DatasetGap:
    """Mean per-query gap with every element as query against the rest.

    With ``skip_missing`` False, a query whose split leaves some batch
    without positives raises :class:`DomainError` naming the query.
    """
    labels = np.asarray(labels)
    sim = cosine_similarity_matrix(embeddings)
    assignment = BatchAssignment(np.asarray(membership), n_batches)
    reports = []
    skipped = 0
    for i in range(labels.shape[0]):
        inst = build_instance(labels, i)
        if inst.flagged:
            skipped += 1
            continue
        try:
            reports.append(decomposability_gap(sim[i], inst, assignment, alpha, beta))
        except DomainError as exc:
            if not skip_missing:
                raise DomainError(f"query {i}: {exc}") from exc
            skipped += 1
    if not reports:
        raise DomainError("no query admits a gap measurement under this split")
    refined = None
    if alpha is not None and beta is not None:
        refined = float(np.mean([r.bound_refined for r in reports]))
    return DatasetGap(
        dg=float(np.mean([r.dg for r in reports])),
        bound_worst=float(np.mean([r.bound_worst for r in reports])),
        bound_refined=refined,
        queries=len(reports),
        skipped=skipped,
        assumption_violations=sum(not r.assumption_holds for r in reports),
        reports=reports,
    )
