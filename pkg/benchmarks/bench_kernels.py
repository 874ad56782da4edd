"""Compare the compiled kernel backend against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--n N] [--d D] [--repeats R]
"""

import argparse
import time

import numpy as np

from calibcov import kernels


def best_of(fn, repeats):
    times = []
    fn()  # warm-up
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        times.append(time.perf_counter_ns() - t0)
    return min(times) / 1e6


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--d", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.standard_normal((args.n, args.d)))
    w = rng.uniform(0.1, 1.0, size=args.n)
    G = rng.standard_normal((args.d, args.d))
    R = np.linalg.cholesky(G @ G.T + np.eye(args.d))

    backends = {"python": kernels.get_backend("python")}
    try:
        backends["compiled"] = kernels.get_backend("compiled")
    except ImportError:
        print("compiled backend not built; benchmarking python only")

    cases = {
        "row_norms": lambda mod: mod.row_norms(X),
        "weighted_outer_mean": lambda mod: mod.weighted_outer_mean(X, w),
        "whiten_norms": lambda mod: mod.whiten_norms(R, X),
    }

    print(f"n={args.n} d={args.d} repeats={args.repeats} (best-of, ms)")
    header = f"{'kernel':<22}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, call in cases.items():
        times = {b: best_of(lambda m=mod: call(m), args.repeats)
                 for b, mod in backends.items()}
        row = f"{name:<22}" + "".join(f"{times[b]:>12.2f}" for b in backends)
        if len(backends) == 2:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)

    if len(backends) == 2:
        py, cc = backends["python"], backends["compiled"]
        assert np.allclose(py.row_norms(X), cc.row_norms(X))
        assert np.allclose(py.weighted_outer_mean(X, w), cc.weighted_outer_mean(X, w))
        assert np.allclose(py.whiten_norms(R, X), cc.whiten_norms(R, X))
        print("agreement check: ok")


if __name__ == "__main__":
    main()
