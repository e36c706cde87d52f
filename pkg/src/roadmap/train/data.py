"""Synthetic retrieval data and the CSV dataset format."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import DomainError


@dataclass(frozen=True)
class SyntheticConfig:
    classes: int = 8
    per_class: int = 16
    feature_dim: int = 32
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2:
            raise DomainError(f"need at least 2 classes, got {self.classes}")
        if self.per_class < 1 or self.feature_dim < 1:
            raise DomainError("per_class and feature_dim must be >= 1")
        if self.noise_sigma < 0:
            raise DomainError("noise_sigma must be >= 0")


def generate_synthetic(cfg: SyntheticConfig):
    """Gaussian clusters around class means drawn uniformly on the unit sphere.

    Returns ``(features, labels)``, class-major order.
    """
    rng = np.random.default_rng(cfg.seed)
    means = rng.standard_normal((cfg.classes, cfg.feature_dim))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    labels = np.repeat(np.arange(cfg.classes), cfg.per_class)
    noise = rng.standard_normal((labels.size, cfg.feature_dim))
    features = means[labels] + cfg.noise_sigma * noise
    return features, labels


def holdout_split(labels, fraction: float = 0.25, seed: int = 0):
    """Stratified split; returns ``(train_idx, test_idx)``, both sorted.

    Each class sends ``round(fraction * n_c)`` members to the test side,
    keeping at least two on the train side where possible.
    """
    if not 0.0 <= fraction < 1.0:
        raise DomainError(f"holdout fraction must lie in [0, 1), got {fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    test = []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n_test = min(int(round(fraction * idx.size)), max(idx.size - 2, 0))
        test.extend(idx[:n_test].tolist())
    test_idx = np.array(sorted(test), dtype=np.int64)
    train_idx = np.setdiff1d(np.arange(labels.size), test_idx)
    return train_idx, test_idx


def write_csv(path, features, labels) -> None:
    features = np.asarray(features, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"f{i}" for i in range(features.shape[1])])
        for lab, row in zip(labels, features):
            w.writerow([int(lab)] + [repr(float(x)) for x in row])


def read_csv(path):
    """Read ``label,f0,...`` rows; raises :class:`DomainError` on malformed input."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DomainError(f"cannot read dataset {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "label":
            raise DomainError(f"{path}: header must start with 'label'")
        dim = len(header) - 1
        if dim < 1 or header[1:] != [f"f{i}" for i in range(dim)]:
            raise DomainError(f"{path}: feature columns must be f0..f{{d-1}}")
        labels, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != dim + 1:
                raise DomainError(f"{path}:{lineno}: expected {dim + 1} fields, got {len(rec)}")
            try:
                labels.append(int(rec[0]))
                rows.append([float(x) for x in rec[1:]])
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise DomainError(f"{path}: no data rows")
    features = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(features)):
        raise DomainError(f"{path}: non-finite feature values")
    return features, np.array(labels, dtype=np.int64)
