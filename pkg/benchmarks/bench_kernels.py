"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per workload and the speedup. Both
backends must produce the same results; the script checks that first.
"""

import argparse
import sys
import time

import numpy as np

from powerjsr import _backend

GOLDEN = np.array([[[1.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 1.0]]])


def workloads():
    rng = np.random.default_rng(0)
    random_set = np.ascontiguousarray(rng.uniform(0, 1, size=(3, 4, 4)))
    radii = [rng.uniform(0, 1, size=(8, 8)) for _ in range(200)]
    return [
        ("enumerate golden pair, depth 12", lambda k: k.enumerate_words(GOLDEN, 12, 1, 1e-7, 1e-10, 1e-9)),
        ("enumerate 3 x 4x4, depth 8", lambda k: k.enumerate_words(random_set, 8, 1, 1e-7, 1e-10, 1e-9)),
        ("max norms by length, 3 x 4x4, depth 9", lambda k: k.max_log_norms_by_length(random_set, 9, 2)),
        ("spectral radius, 200 x 8x8", lambda k: [k.spectral_radius(a, 1e-10, 64) for a in radii]),
        ("expand 3 x 4x4, 2000 calls", lambda k: [k.expand(np.eye(4), 0.0, random_set, 1, 1e-7) for _ in range(2000)]),
    ]


def best_time(fn, kern, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(kern)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    names = _backend.available()
    if "cython" not in names:
        print("compiled kernels are not built; run `pip install -e .` first", file=sys.stderr)
        return 1
    cy, py = _backend.load("cython"), _backend.load("python")

    a = cy.enumerate_words(GOLDEN, 10, 1, 1e-7, 1e-10, 1e-9)
    b = py.enumerate_words(GOLDEN, 10, 1, 1e-7, 1e-10, 1e-9)
    assert tuple(a[1]) == tuple(b[1]) and a[3] == b[3], "backends disagree"

    print(f"{'workload':42s} {'cython s':>10s} {'python s':>10s} {'speedup':>9s}")
    for title, fn in workloads():
        tc = best_time(fn, cy, args.repeat)
        tp = best_time(fn, py, args.repeat)
        print(f"{title:42s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
