"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Checks that both backends return the same result on each workload, then
prints the median wall time of each and the speed-up.
"""
from __future__ import annotations

import argparse
import statistics
import time
from itertools import combinations

import numpy as np

from capacity_lab import _fallback
from capacity_lab.biht import generate_dataset

try:
    from capacity_lab import _kernels
except ImportError:  # pragma: no cover
    raise SystemExit("compiled extension not built; run pip install -e .")


def timed(fn, repeat):
    out, times = None, []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return out, statistics.median(times)


def workloads():
    d = generate_dataset(64, 77, "binary", 0)
    w0 = np.random.default_rng(1).standard_normal(64) / 8.0
    fixed = np.zeros(64, np.uint8)
    fixed[:10] = 1
    args = (d.X, d.y, w0, 12, fixed, 0.002 / 77, 1e-8, 1000)
    yield "biht_stage N=64 P=77 K=12 L=1000", \
        (lambda k: k.biht_stage(*args)), \
        (lambda a, b: a[1] == b[1] and np.allclose(a[0], b[0], atol=1e-12))

    e = generate_dataset(12, 17, "binary", 2)
    Z = e.y[:, None] * e.X
    S = np.array(list(combinations(range(12), 6)), dtype=np.int64)[::-1].copy()
    yield "first_separable N=12 M=6 P=17 (924 supports)", \
        (lambda k: k.first_separable(Z, S)), (lambda a, b: a == b)

    U = generate_dataset(8, 16, "spherical", 3)
    Zs = U.y[:, None] * U.X
    yield "separable P=16 M=8 spherical", \
        (lambda k: k.separable(Zs)), (lambda a, b: a == b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'workload':48s} {'python [s]':>12s} {'compiled [s]':>13s} {'speed-up':>9s}")
    for name, run, same in workloads():
        a, tp = timed(lambda: run(_fallback), max(1, args.repeat // 2))
        b, tc = timed(lambda: run(_kernels), args.repeat)
        if not same(a, b):
            raise SystemExit(f"backends disagree on {name}")
        print(f"{name:48s} {tp:12.4g} {tc:13.4g} {tp / tc:9.1f}")


if __name__ == "__main__":
    main()
