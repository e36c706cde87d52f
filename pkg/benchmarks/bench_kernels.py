"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 20]
"""

import argparse
import timeit

import numpy as np

from roadmap import _kernels_py
from roadmap.core import cosine_similarity_matrix
from roadmap.surrogates import SurrogateConfig

try:
    from roadmap import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _cases(rng):
    cfg = SurrogateConfig()
    pos, neg = rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 200)
    for batch in (32, 128):
        labels = np.repeat(np.arange(batch // 4), 4).astype(np.int64)
        sim = cosine_similarity_matrix(rng.standard_normal((batch, 16)))
        yield f"batch_kernel supap B={batch}", lambda k, s=sim, l=labels: k.batch_kernel(
            s, l, k.SUPAP, cfg.tau, cfg.rho, cfg.delta)
        yield f"batch_kernel smoothap B={batch}", lambda k, s=sim, l=labels: k.batch_kernel(
            s, l, k.SMOOTHAP, cfg.tau, cfg.rho, cfg.delta)
    yield "supap_kernel |P|=20 |N|=200", lambda k: k.supap_kernel(pos, neg, cfg.tau, cfg.rho, cfg.delta)
    yield "smoothap_kernel |P|=20 |N|=200", lambda k: k.smoothap_kernel(pos, neg, cfg.tau)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    if _kernels_c is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'case':34s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in _cases(np.random.default_rng(0)):
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeats)) * 1e3
        if _kernels_c is None:
            print(f"{name:34s} {t_py:10.3f} {'-':>10s} {'-':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_kernels_c), number=1, repeat=args.repeats)) * 1e3
        print(f"{name:34s} {t_py:10.3f} {t_c:10.3f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
