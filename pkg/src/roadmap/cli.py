"""Command-line front end.

Exit codes: 0 success, 1 invalid flags or configuration, 2 failure while
running (unreadable files, infeasible sampling, failed gradient check).
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .core import DomainError, RankingInstance
from .decomp import dataset_gap, stratified_membership
from .experiments import AXES, config_for, sweep
from .metrics import evaluate, exact_ap
from .oracle import grad_check
from .surrogates import LOSS_KINDS, LossConfig, SurrogateConfig, smoothap_loss, supap_loss
from .train import (
    CheckpointError,
    OptimizerConfig,
    SyntheticConfig,
    TrainConfig,
    generate_synthetic,
    holdout_split,
    load_checkpoint,
    read_csv,
    save_checkpoint,
    train,
    write_csv,
)
from .train.loop import TRAIN_LOSSES, embed

log = logging.getLogger("roadmap")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _unit_interval(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


def _add_surrogate_flags(p):
    g = p.add_argument_group("loss hyperparameters")
    g.add_argument("--lambda", dest="lambda_", type=_unit_interval, default=0.5,
                   help="weight of the calibration term")
    g.add_argument("--tau", type=float, default=0.01, help="sigmoid temperature")
    g.add_argument("--rho", type=float, default=100.0, help="slope of the linear branch")
    g.add_argument("--epsilon", type=float, default=0.01, help="sigmoid-slope cutoff defining delta")
    g.add_argument("--alpha", type=float, default=0.9, help="positive score threshold")
    g.add_argument("--beta", type=float, default=0.6, help="negative score threshold")


def _add_train_flags(p):
    p.add_argument("--data", required=True, help="dataset CSV (label,f0,...)")
    p.add_argument("--loss", choices=TRAIN_LOSSES, default="roadmap")
    _add_surrogate_flags(p)
    g = p.add_argument_group("training")
    g.add_argument("--batch", type=int, default=32, help="batch size")
    g.add_argument("--m", type=int, default=4, help="samples per class in a batch")
    g.add_argument("--epochs", type=int, default=50)
    g.add_argument("--embed-dim", type=int, default=16)
    g.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    g.add_argument("--lr", type=float, default=1e-3)
    g.add_argument("--decay-factor", type=float, default=0.3,
                   help="learning-rate factor applied at 60%% and 80%% of the epochs")
    g.add_argument("--holdout", type=float, default=0.25,
                   help="stratified fraction held out for evaluation")
    g.add_argument("--probe-batches", type=int, default=2,
                   help="batches used for the held-out decomposability gap")
    g.add_argument("--categories", help="JSON file mapping class id to super-category; "
                                        "enables category-pair batches")
    g.add_argument("--seed", type=int, default=0)


def _train_config(a) -> TrainConfig:
    categories = None
    if a.categories:
        try:
            raw = json.loads(Path(a.categories).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"--categories: cannot read {a.categories}: {exc}")
        categories = {int(k): int(v) for k, v in raw.items()}
    if a.batch < 1 or a.m < 1:
        raise UsageError("--batch and --m must be >= 1")
    if not 0.0 <= a.holdout < 1.0:
        raise UsageError(f"--holdout must lie in [0, 1), got {a.holdout}")
    try:
        return TrainConfig(
            loss=a.loss,
            surrogate=SurrogateConfig(a.tau, a.rho, a.epsilon),
            loss_cfg=LossConfig(a.lambda_, a.alpha, a.beta),
            optimizer=OptimizerConfig(kind=a.optimizer, lr=a.lr, decay_factor=a.decay_factor),
            epochs=a.epochs,
            batch_size=a.batch,
            m=a.m,
            embed_dim=a.embed_dim,
            seed=a.seed,
            probe_batches=a.probe_batches,
            categories=categories,
        )
    except DomainError as exc:
        raise UsageError(str(exc))


def _write_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _subset(features, labels, a):
    if a.subset == "all":
        return features, labels
    tr, te = holdout_split(labels, a.holdout, a.split_seed)
    idx = te if a.subset == "test" else tr
    return features[idx], labels[idx]


def cmd_gen(a):
    try:
        cfg = SyntheticConfig(a.classes, a.per_class, a.dim, a.sigma, a.seed)
    except DomainError as exc:
        raise UsageError(str(exc))
    x, y = generate_synthetic(cfg)
    write_csv(a.out, x, y)
    log.info("wrote %d rows to %s", y.size, a.out)


def cmd_train(a):
    cfg = _train_config(a)
    x, y = read_csv(a.data)
    tr, te = holdout_split(y, a.holdout, a.seed)
    ev_x, ev_y = (x[te], y[te]) if te.size else (None, None)
    params, hist = train(x[tr], y[tr], cfg, ev_x, ev_y)
    save_checkpoint(params, a.ckpt)
    hist.write(a.history)
    summary = {"checkpoint": a.ckpt, "history": a.history, "epochs": len(hist.epochs)}
    if hist.epochs:
        summary["final"] = hist.epochs[-1]
    _write_json(summary, None)


def cmd_eval(a):
    x, y = read_csv(a.data)
    params = load_checkpoint(a.ckpt)
    if params.shape[0] != x.shape[1]:
        raise DomainError(f"checkpoint expects {params.shape[0]} features, dataset has {x.shape[1]}")
    x, y = _subset(x, y, a)
    report = evaluate(embed(x, params), y, a.ks)
    _write_json(report.to_dict(), a.out)


def cmd_dg(a):
    if not a.beta < a.alpha:
        raise UsageError(f"need --beta < --alpha, got {a.beta} >= {a.alpha}")
    if a.batches < 1:
        raise UsageError("--batches must be >= 1")
    x, y = read_csv(a.data)
    params = load_checkpoint(a.ckpt)
    if params.shape[0] != x.shape[1]:
        raise DomainError(f"checkpoint expects {params.shape[0]} features, dataset has {x.shape[1]}")
    x, y = _subset(x, y, a)
    membership = stratified_membership(y, a.batches, a.seed)
    gap = dataset_gap(embed(x, params), y, membership, a.batches, a.alpha, a.beta,
                      skip_missing=False)
    _write_json(gap.to_dict(per_query=a.per_query), a.out)


def cmd_gradcheck(a):
    try:
        cfg = SurrogateConfig(a.tau, a.rho, a.epsilon)
        lcfg = LossConfig(a.lambda_, a.alpha, a.beta)
    except DomainError as exc:
        raise UsageError(str(exc))
    if a.trials < 1 or a.h <= 0:
        raise UsageError("--trials must be >= 1 and --h > 0")
    report = grad_check(a.loss, a.trials, a.tol, cfg, lcfg, a.h, a.seed)
    _write_json(report.to_dict(include_pairs=a.pairs), a.out)
    status = "pass" if report.passed else "FAIL"
    print(f"gradcheck {a.loss}: {status} max_rel_err={report.max_rel_err:.3e} "
          f"checked={report.checked} skipped={report.skipped}", file=sys.stderr)
    return 0 if report.passed else 2


def cmd_sweep(a):
    base = _train_config(a)
    try:
        for v in a.values:
            config_for(base, a.axis, v)
    except DomainError as exc:
        raise UsageError(str(exc))
    x, y = read_csv(a.data)
    rows = sweep(x, y, a.axis, a.values, base, a.seeds, a.holdout, a.split_seed, a.jobs)
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "map_at_r", "seed"])
        for r in rows:
            w.writerow([repr(float(r.value)), repr(r.map_at_r), r.seed])


def toy_example(s1: float = 0.70, tau: float = 0.01) -> dict:
    """Two positives 0.01 apart, one negative 0.13 above the higher positive."""
    s = np.array([s1, s1 + 0.01, s1 + 0.14])
    inst = RankingInstance(np.array([0, 1]), np.array([2]))
    cfg = SurrogateConfig(tau=tau)
    smooth = smoothap_loss(s, inst, cfg)
    sup = supap_loss(s, inst, cfg)
    ap_loss = 1.0 - exact_ap(s, inst)
    return {
        "scores": s.tolist(),
        "roles": ["positive", "positive", "negative"],
        "tau": tau,
        "ap_loss": ap_loss,
        "smoothap": {
            "value": smooth.value,
            "grad": smooth.grad.tolist(),
            "grad_s1_plus_s2": float(smooth.grad[0] + smooth.grad[1]),
            "upper_bound": smooth.value >= ap_loss,
        },
        "supap": {
            "value": sup.value,
            "grad": sup.grad.tolist(),
            "upper_bound": sup.value >= ap_loss,
        },
    }


def cmd_toy(a):
    _write_json(toy_example(a.s1, a.tau), a.out)


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="roadmap", description=__doc__.splitlines()[0], formatter_class=fmt)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic Gaussian-cluster dataset", formatter_class=fmt)
    g.add_argument("--classes", type=int, default=8)
    g.add_argument("--per-class", type=int, default=16)
    g.add_argument("--dim", type=int, default=32)
    g.add_argument("--sigma", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a linear embedder", formatter_class=fmt)
    _add_train_flags(t)
    t.add_argument("--ckpt", default="model.bin", help="checkpoint output path")
    t.add_argument("--history", default="history.jsonl", help="JSON-lines history output path")
    t.set_defaults(func=cmd_train)

    def add_subset(q):
        q.add_argument("--subset", choices=("all", "train", "test"), default="all",
                       help="evaluate on the whole file or one side of the holdout split")
        q.add_argument("--holdout", type=float, default=0.25)
        q.add_argument("--split-seed", type=int, default=0,
                       help="seed of the holdout split (train uses its --seed)")

    e = sub.add_parser("eval", help="Recall@K, mAP and mAP@R of a checkpoint", formatter_class=fmt)
    e.add_argument("--data", required=True)
    e.add_argument("--ckpt", required=True)
    e.add_argument("--ks", type=_int_list, default=[1, 2, 4, 8])
    add_subset(e)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("dg", help="decomposability gap and its bounds", formatter_class=fmt)
    d.add_argument("--data", required=True)
    d.add_argument("--ckpt", required=True)
    d.add_argument("--batches", type=int, default=4)
    d.add_argument("--alpha", type=float, default=0.9)
    d.add_argument("--beta", type=float, default=0.6)
    d.add_argument("--seed", type=int, default=0, help="seed of the class-stratified batch split")
    d.add_argument("--per-query", action="store_true", help="include every per-query report")
    add_subset(d)
    d.add_argument("--out")
    d.set_defaults(func=cmd_dg)

    c = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients", formatter_class=fmt)
    c.add_argument("--loss", choices=LOSS_KINDS, default="supap")
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--tol", type=float, default=1e-4)
    c.add_argument("--h", type=float, default=1e-6)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--pairs", action="store_true", help="include (analytic, numeric) pairs")
    _add_surrogate_flags(c)
    c.add_argument("--out")
    c.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("sweep", help="mAP@R over one hyperparameter axis", formatter_class=fmt)
    s.add_argument("--axis", choices=AXES, required=True)
    s.add_argument("--values", type=_float_list, required=True)
    s.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4])
    s.add_argument("--split-seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1, help="parallel training runs")
    s.add_argument("--out", required=True, help="CSV output: value,map_at_r,seed")
    _add_train_flags(s)
    s.set_defaults(func=cmd_sweep)

    y = sub.add_parser("toy", help="three-point SmoothAP vs SupAP example", formatter_class=fmt)
    y.add_argument("--s1", type=float, default=0.70, help="score of the lower positive")
    y.add_argument("--tau", type=float, default=0.01)
    y.add_argument("--out")
    y.set_defaults(func=cmd_toy)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
