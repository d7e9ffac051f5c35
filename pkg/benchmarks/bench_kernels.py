"""Compare the compiled and pure-Python orbit-time kernels.

    python3 benchmarks/bench_kernels.py [--points N] [--repeat R]

Reports the best wall time of ``orbit_solve`` over ``R`` runs for each
available backend, and the largest disagreement in ``t`` between them.
"""
import argparse
import time

import numpy as np
import scipy.linalg as sla

from lcklab import kernels

FIXTURES = {
    "radial": np.diag([0.5, 0.5]).astype(complex),
    "jordan": np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex),
    "diag4": np.diag([0.5, 0.4 + 0.1j, 0.3, 0.2j]).astype(complex),
}


def points(n, count, seed=0):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    return Z * rng.uniform(0.25, 4.0, size=(count, 1)) / np.linalg.norm(Z, axis=1, keepdims=True)


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    names = sorted(kernels.BACKENDS)
    print(f"{'fixture':<8} " + " ".join(f"{b + ' [s]':>14}" for b in names)
          + f" {'speedup':>9} {'max |dt|':>10}")
    for label, A in FIXTURES.items():
        L = sla.logm(A)
        P = np.eye(A.shape[0], dtype=complex)
        Z = points(A.shape[0], args.points)
        times, outs = {}, {}
        for b in names:
            times[b], outs[b] = best_time(lambda: kernels.orbit_solve(L, P, Z, backend=b),
                                          args.repeat)
        row = f"{label:<8} " + " ".join(f"{times[b]:>14.4f}" for b in names)
        if len(names) == 2:
            dt = np.max(np.abs(outs["compiled"][0] - outs["python"][0]))
            row += f" {times['python'] / times['compiled']:>8.1f}x {dt:>10.2e}"
        print(row)


if __name__ == "__main__":
    main()
