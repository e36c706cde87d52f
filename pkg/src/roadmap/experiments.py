"""Multi-seed training runs over one hyperparameter axis."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Iterable, List, NamedTuple

import numpy as np

from .core import DomainError
from .surrogates import LossConfig
from .train import TrainConfig, holdout_split, train

AXES = ("lambda", "rho", "margin", "batch")


class SweepRow(NamedTuple):
    value: float
    map_at_r: float
    seed: int
    dg: float


def config_for(base: TrainConfig, axis: str, value) -> TrainConfig:
    """``base`` with one hyperparameter replaced; ``margin`` sets ``beta = alpha - margin``."""
    if axis == "lambda":
        return replace(base, loss_cfg=replace(base.loss_cfg, lambda_=float(value)))
    if axis == "rho":
        return replace(base, surrogate=replace(base.surrogate, rho=float(value)))
    if axis == "margin":
        if value <= 0:
            raise DomainError(f"margin must be > 0 (beta < alpha strictly), got {value}")
        lc = base.loss_cfg
        return replace(base, loss_cfg=LossConfig(lc.lambda_, lc.alpha, lc.alpha - float(value)))
    if axis == "batch":
        return replace(base, batch_size=int(value))
    raise DomainError(f"unknown sweep axis {axis!r}; expected one of {AXES}")


def _run_one(args):
    features, labels, train_idx, test_idx, cfg, value = args
    _, hist = train(features[train_idx], labels[train_idx], cfg,
                    features[test_idx], labels[test_idx])
    last = hist.epochs[-1]
    return SweepRow(value, last["metrics"]["map_at_r"], cfg.seed, last["dg"])


def sweep(features, labels, axis: str, values: Iterable, base: TrainConfig,
          seeds: Iterable[int] = range(5), holdout: float = 0.25, split_seed: int = 0,
          jobs: int = 1) -> List[SweepRow]:
    """Train one model per (value, seed) and score it on the held-out split.

    Configs are validated before any training starts; rows come back in
    grid order whatever ``jobs`` is.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    values = list(values)
    seeds = list(seeds)
    cfgs = [(v, config_for(base, axis, v)) for v in values]
    if base.epochs < 1:
        raise DomainError("sweeps need at least one epoch")
    train_idx, test_idx = holdout_split(labels, holdout, split_seed)
    tasks = [
        (features, labels, train_idx, test_idx, replace(cfg, seed=s), v)
        for v, cfg in cfgs
        for s in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


def mean_by_value(rows: List[SweepRow]) -> dict:
    out = {}
    for v in dict.fromkeys(r.value for r in rows):
        out[v] = float(np.mean([r.map_at_r for r in rows if r.value == v]))
    return out


__all__ = ["AXES", "SweepRow", "config_for", "mean_by_value", "sweep"]
