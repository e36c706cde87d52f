"""Independent ground truth used to check the fast paths.

Nothing here calls the rank-counting code it is meant to verify: AP comes
from an explicit sort, worst-case gaps from enumerating interleavings, and
gradients from central differences.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .core import DomainError, RankingInstance
from .surrogates import LossConfig, SurrogateConfig, loss_by_kind

MAX_ENUM_ELEMENTS = 12
REL_ERR_FLOOR = 1e-4


def sort_based_ap(scores, instance: RankingInstance) -> float:
    """AP by sorting the retrieval set; requires distinct scores."""
    if instance.flagged:
        raise DomainError("AP needs at least one positive")
    members = np.concatenate([instance.positives, instance.negatives])
    s = np.asarray(scores, dtype=np.float64)[members]
    if np.unique(s).size != s.size:
        raise DomainError("sort-based AP is only defined for distinct scores")
    order = np.argsort(-s, kind="stable")
    relevant = np.isin(members[order], instance.positives)
    return label_sequence_ap(relevant)


def label_sequence_ap(relevant) -> float:
    """AP of a ranked list given as a boolean relevance sequence."""
    rel = np.asarray(relevant, dtype=bool)
    ranks = np.flatnonzero(rel) + 1
    return float(np.mean(np.arange(1, ranks.size + 1) / ranks))


def _interleavings(batch_sizes):
    seqs = tuple((1,) * p + (0,) * n for p, n in batch_sizes)

    @lru_cache(maxsize=None)
    def suffixes(state):
        # every distinct label sequence that can follow the given per-batch positions
        out = set()
        for b, pos in enumerate(state):
            if pos < len(seqs[b]):
                nxt = state[:b] + (pos + 1,) + state[b + 1:]
                head = seqs[b][pos]
                for tail in suffixes(nxt):
                    out.add((head,) + tail)
        return frozenset(out) if out else frozenset([()])

    return suffixes(tuple(0 for _ in seqs))


def enumerate_worst_dg(batch_sizes: Sequence[tuple]) -> float:
    """Largest gap over all global orderings of perfectly ranked batches.

    ``batch_sizes`` holds one ``(positives, negatives)`` pair per batch, every
    batch with at least one positive. All batch APs are 1, so the gap is
    ``1 - min global AP``.
    """
    sizes = [(int(p), int(n)) for p, n in batch_sizes]
    if not sizes or any(p < 1 or n < 0 for p, n in sizes):
        raise DomainError("every batch needs >= 1 positive and >= 0 negatives")
    if sum(p + n for p, n in sizes) > MAX_ENUM_ELEMENTS:
        raise DomainError(f"exhaustive enumeration limited to {MAX_ENUM_ELEMENTS} elements")
    worst = min(label_sequence_ap(seq) for seq in _interleavings(tuple(sizes)))
    return 1.0 - worst


@dataclass
class GradCheckReport:
    loss_kind: str
    tolerance: float
    max_rel_err: float = 0.0
    checked: int = 0
    skipped: int = 0
    trials: int = 0
    pairs: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance

    def to_dict(self, include_pairs: bool = True) -> dict:
        out = {
            "loss": self.loss_kind,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "max_rel_err": self.max_rel_err,
            "trials": self.trials,
            "checked": self.checked,
            "skipped": self.skipped,
        }
        if include_pairs:
            out["pairs"] = [[a, n] for a, n in self.pairs]
        return out


def _near_boundary(kind, scores, instance, cfg, lcfg, radius):
    s = np.asarray(scores, dtype=np.float64)
    near = np.zeros(s.size, dtype=bool)
    pos, neg = instance.positives, instance.negatives
    if kind in ("supap", "roadmap"):
        # rank+ step at 0 between positives; h_minus jump at 0 and kink at delta
        dpp = s[pos][:, None] - s[pos][None, :]
        np.fill_diagonal(dpp, np.inf)
        pp = np.abs(dpp) < radius
        t = s[neg][None, :] - s[pos][:, None]
        pn = (np.abs(t) < radius) | (np.abs(t - cfg.delta) < radius)
        near[pos] |= pp.any(axis=1) | pn.any(axis=1)
        near[neg] |= pn.any(axis=0)
    if kind in ("calibration", "roadmap"):
        near[pos] |= np.abs(s[pos] - lcfg.alpha) < radius
        near[neg] |= np.abs(s[neg] - lcfg.beta) < radius
    return near


def finite_diff_grad(loss_kind: str, scores, instance: RankingInstance,
                     cfg: SurrogateConfig = SurrogateConfig(), lcfg: LossConfig = LossConfig(),
                     h: float = 1e-6):
    """Central-difference gradient and a mask of coordinates to skip.

    A coordinate is skipped when one of its pairwise differences (or its
    own score, for the hinge terms) lies within ``10 * h`` of a point where
    the loss is not smooth.
    """
    if h <= 0:
        raise DomainError("h must be positive")
    s = np.array(scores, dtype=np.float64)
    est = np.zeros(s.size)
    members = np.concatenate([instance.positives, instance.negatives])
    for j in members:
        orig = s[j]
        s[j] = orig + h
        f_plus = loss_by_kind(loss_kind, s, instance, cfg, lcfg).value
        s[j] = orig - h
        f_minus = loss_by_kind(loss_kind, s, instance, cfg, lcfg).value
        s[j] = orig
        est[j] = (f_plus - f_minus) / (2.0 * h)
    skipped = _near_boundary(loss_kind, s, instance, cfg, lcfg, 10.0 * h)
    return est, skipped


def relative_error(analytic, numeric, floor: float = REL_ERR_FLOOR):
    """``|a - n| / max(|a|, |n|, floor)``; below ``floor`` the comparison is absolute."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def random_instance(trial: int, seed: int = 0, max_pos: int = 20, max_neg: int = 20):
    """Scores uniform on [-1, 1]; |P| and |N| uniform on [1, max]. Positives come first."""
    rng = np.random.default_rng([seed, trial])
    n_pos = int(rng.integers(1, max_pos + 1))
    n_neg = int(rng.integers(1, max_neg + 1))
    scores = rng.uniform(-1.0, 1.0, n_pos + n_neg)
    inst = RankingInstance(np.arange(n_pos), np.arange(n_pos, n_pos + n_neg))
    return scores, inst


def grad_check(loss_kind: str, trials: int = 100, tolerance: float = 1e-4,
               cfg: SurrogateConfig = SurrogateConfig(), lcfg: LossConfig = LossConfig(),
               h: float = 1e-6, seed: int = 0,
               instance_generator: Optional[Callable] = None) -> GradCheckReport:
    if trials < 1:
        raise DomainError("trials must be >= 1")
    gen = instance_generator or (lambda t: random_instance(t, seed))
    report = GradCheckReport(loss_kind, tolerance, trials=trials)
    for t in range(trials):
        scores, inst = gen(t)
        analytic = loss_by_kind(loss_kind, scores, inst, cfg, lcfg).grad
        numeric, skip = finite_diff_grad(loss_kind, scores, inst, cfg, lcfg, h)
        members = np.concatenate([inst.positives, inst.negatives])
        for j in members:
            if skip[j]:
                report.skipped += 1
                continue
            report.checked += 1
            report.pairs.append((float(analytic[j]), float(numeric[j])))
            err = float(relative_error(analytic[j], numeric[j]))
            report.max_rel_err = max(report.max_rel_err, err)
    return report
