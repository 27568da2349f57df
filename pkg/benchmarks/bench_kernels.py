"""Compiled kernels vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Prints the best-of-N wall time per kernel and backend, plus the speedup.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from escapeset import _kernels
from escapeset._kernels import _fallback

try:
    from escapeset._kernels import _core
except ImportError:  # extension not built
    _core = None


def cases():
    rng = np.random.default_rng(0)
    one = np.array([[0.5, 0.2, 0.1]])
    batch = rng.uniform(-1, 1, (50, 3))
    a, b = rng.uniform(-10, 10, (200, 2)), rng.uniform(-10, 10, (200, 2))
    ring = np.column_stack([np.cos(np.arange(20_000) * 2.39996), np.sin(np.arange(20_000) * 2.39996)])
    return [
        ("rk4 r3saddle, 1 orbit, 100k steps", lambda k: k.rk4_samples(_kernels.FIELD_R3SADDLE, one, 1e-3, 1000, 100, 1e6)),
        ("rk4 r3saddle, 50 orbits, 10k steps", lambda k: k.rk4_samples(_kernels.FIELD_R3SADDLE, batch, 1e-3, 100, 100, 1e6)),
        ("hausdorff 200 x 200 points", lambda k: k.hausdorff(a, b)),
        ("greedy clusters, 20k ring samples", lambda k: k.greedy_cluster(ring, 0.05)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace` first")
        return 1
    print(f"{'kernel':40s} {'cython [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s}")
    for name, fn in cases():
        tc = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        print(f"{name:40s} {tc:11.4f} {tp:11.4f} {tp / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
