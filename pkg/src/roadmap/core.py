"""Embedding containers, cosine scoring and per-query ranking instances."""

from dataclasses import dataclass
from typing import Optional

import numpy as np


class DomainError(ValueError):
    """Raised when an input lies outside an operation's domain."""


def as_embeddings(data) -> np.ndarray:
    """Validate and return a (rows, dim) float64 embedding matrix."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DomainError(f"embeddings must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("embeddings contain non-finite values")
    return arr


def _row_norms(mat: np.ndarray, what: str) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", mat, mat))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DomainError(f"{what} row {int(zero[0])} has zero norm")
    return norms


def cosine_similarity(query, gallery) -> np.ndarray:
    """Cosine similarity of one query vector against every gallery row.

    Normalization is done here; inputs are not expected to be unit-norm.
    """
    q = np.asarray(query, dtype=np.float64).ravel()
    g = as_embeddings(gallery)
    if g.shape[1] != q.shape[0]:
        raise DomainError(f"dimension mismatch: query {q.shape[0]} vs gallery {g.shape[1]}")
    qn = _row_norms(q[None, :], "query")[0]
    gn = _row_norms(g, "gallery")
    return (g @ q) / (gn * qn)


def cosine_similarity_backward(query, gallery, upstream):
    """Gradients of ``sum_j upstream[j] * s_j`` w.r.t. the query and gallery rows.

    Returns ``(grad_query, grad_gallery)`` with the shapes of the inputs.
    """
    q = np.asarray(query, dtype=np.float64).ravel()
    g = as_embeddings(gallery)
    up = np.asarray(upstream, dtype=np.float64).ravel()
    if up.shape[0] != g.shape[0]:
        raise DomainError("upstream gradient length must equal gallery rows")
    qn = _row_norms(q[None, :], "query")[0]
    gn = _row_norms(g, "gallery")
    s = (g @ q) / (gn * qn)
    # ds_j/dq = g_j/(|q||g_j|) - s_j q/|q|^2 ; ds_j/dg_j = q/(|q||g_j|) - s_j g_j/|g_j|^2
    w = up / (gn * qn)
    grad_q = g.T @ w - (up @ s) * q / qn**2
    grad_g = np.outer(w, q) - (up * s / gn**2)[:, None] * g
    return grad_q, grad_g


def cosine_similarity_matrix(emb) -> np.ndarray:
    """All-pairs cosine similarity of the rows of ``emb``."""
    e = as_embeddings(emb)
    unit = e / _row_norms(e, "embedding")[:, None]
    return unit @ unit.T


def cosine_similarity_matrix_backward(emb, grad_sim) -> np.ndarray:
    """Back-propagate a gradient on the all-pairs similarity matrix to ``emb``."""
    e = as_embeddings(emb)
    norms = _row_norms(e, "embedding")
    unit = e / norms[:, None]
    g = np.asarray(grad_sim, dtype=np.float64)
    grad_unit = (g + g.T) @ unit
    radial = np.einsum("ij,ij->i", grad_unit, unit)
    return (grad_unit - radial[:, None] * unit) / norms[:, None]


@dataclass(frozen=True)
class RankingInstance:
    """A query's split of the retrieval set into positives and negatives.

    ``query_index`` is ``None`` for an external query. ``flagged`` marks an
    instance with no positives; metrics skip those, losses reject them.
    """

    positives: np.ndarray
    negatives: np.ndarray
    query_index: Optional[int] = None

    @property
    def flagged(self) -> bool:
        return self.positives.size == 0

    @property
    def size(self) -> int:
        return self.positives.size + self.negatives.size

    @classmethod
    def from_masks(cls, is_positive, query_index=None) -> "RankingInstance":
        mask = np.asarray(is_positive, dtype=bool)
        idx = np.arange(mask.size)
        if query_index is not None:
            keep = idx != query_index
            return cls(idx[keep & mask], idx[keep & ~mask], query_index)
        return cls(idx[mask], idx[~mask], None)


def build_instance(labels, query_index: int) -> RankingInstance:
    """Positives share the query's label; the query itself is excluded."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    if not 0 <= query_index < n:
        raise IndexError(f"query_index {query_index} out of range for {n} labels")
    return RankingInstance.from_masks(labels == labels[query_index], query_index)


def split_scores(scores, instance: RankingInstance):
    """Return ``(positive_scores, negative_scores)`` as float64 arrays."""
    s = np.asarray(scores, dtype=np.float64)
    return s[instance.positives], s[instance.negatives]
