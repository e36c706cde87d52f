"""Class-balanced batch samplers."""

import itertools
import logging
from typing import Dict, List

import numpy as np

from ..core import DomainError

log = logging.getLogger(__name__)


def m_per_class_batches(labels, batch_size: int, m: int, seed: int = 0) -> List[np.ndarray]:
    """One epoch of batches made of ``batch_size // m`` classes with ``m`` samples each.

    Each class is shuffled and cut into chunks of ``m`` (leftovers dropped);
    batches draw distinct classes that still have chunks, until fewer than
    ``batch_size // m`` such classes remain.
    """
    if m < 2:
        raise DomainError(f"m must be >= 2 so every element has an in-batch positive, got {m}")
    if batch_size % m:
        raise DomainError(f"batch size {batch_size} is not divisible by m={m}")
    per_batch = batch_size // m
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    chunks: Dict[int, list] = {}
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n_chunks = idx.size // m
        if n_chunks:
            chunks[int(c)] = [idx[i * m:(i + 1) * m] for i in range(n_chunks)]
    if len(chunks) < per_batch:
        raise DomainError(
            f"need {per_batch} classes with >= {m} samples, only {len(chunks)} available"
        )
    batches = []
    while True:
        live = sorted(c for c, v in chunks.items() if v)
        if len(live) < per_batch:
            break
        picked = rng.choice(live, size=per_batch, replace=False)
        batches.append(np.concatenate([chunks[int(c)].pop() for c in picked]))
    return batches


def category_pair_batches(labels, categories: Dict[int, int], batch_size: int, m: int,
                          seed: int = 0) -> List[np.ndarray]:
    """For each pair of super-categories, m-per-class batches restricted to their classes.

    ``categories`` maps class id to super-category id. Infeasible pairs are
    skipped with a warning.
    """
    labels = np.asarray(labels)
    cats = sorted(set(categories.values()))
    if len(cats) < 2:
        raise DomainError("category-pair sampling needs at least 2 categories")
    missing = set(np.unique(labels).tolist()) - set(categories)
    if missing:
        raise DomainError(f"classes without a category: {sorted(missing)[:5]}")
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(cats, 2))
    order = rng.permutation(len(pairs))
    elem_cat = np.array([categories[int(c)] for c in labels])
    batches = []
    for k, p in enumerate(order):
        a, b = pairs[p]
        subset = np.flatnonzero((elem_cat == a) | (elem_cat == b))
        try:
            local = m_per_class_batches(labels[subset], batch_size, m, seed=int(rng.integers(2**31)))
        except DomainError as exc:
            log.warning("skipping category pair (%s, %s): %s", a, b, exc)
            continue
        batches.extend(subset[bt] for bt in local)
    return batches
