"""Timing comparison of the compiled numeric core against the NumPy
fallback.

Kernel benchmarks call both backend modules directly on identical
inputs. The end-to-end row times a full maximum-likelihood fit in a
subprocess per backend, since the backend choice is fixed at import.

Usage: python benchmarks/compare_backends.py [--repeats 7] [--skip-fit]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from kgopt._kernels import compiled_backend, numpy_backend

FIT_PROBE = (
    "import numpy as np, time\n"
    "from kgopt.kriging import Dataset\n"
    "from kgopt.hyperfit import mle_fit\n"
    "rng = np.random.default_rng(0)\n"
    "X = rng.random((60, 4))\n"
    "y = np.sin(3 * X[:, 0]) + (X ** 2).sum(axis=1)\n"
    "data = Dataset(X=X, y=y, lower=np.zeros(4), upper=np.ones(4))\n"
    "t0 = time.perf_counter()\n"
    "mle_fit(data, rng=np.random.default_rng(1))\n"
    "print(time.perf_counter() - t0)\n"
)


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def kernel_cases(n, d, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    theta = 10.0 ** rng.uniform(-0.5, 0.5, size=d)
    y = rng.standard_normal(n)
    F = np.ones((n, 1))
    B = rng.random((256, d))
    return X, theta, y, F, B


def bench_kernels(repeats):
    rows = []
    for n, d in ((20, 2), (50, 2), (100, 2), (50, 6), (100, 6)):
        X, theta, y, F, B = kernel_cases(n, d)
        for label, call in (
            ("corr_matrix", lambda be: be.corr_matrix(X, theta)),
            ("cross_corr(256)", lambda be: be.cross_corr(X, B, theta)),
            ("nll_core", lambda be: be.nll_core(X, F, y, theta, 1e-10, 10.0, 1e-4)),
        ):
            t_np = best_of(lambda: call(numpy_backend), repeats)
            t_c = best_of(lambda: call(compiled_backend), repeats)
            rows.append((f"{label} n={n} d={d}", t_np, t_c))
    return rows


def bench_fit():
    rows = []
    times = {}
    for backend in ("numpy", "compiled"):
        env = os.environ.copy()
        env["KGOPT_BACKEND"] = backend
        proc = subprocess.run(
            [sys.executable, "-c", FIT_PROBE], capture_output=True, text=True, env=env
        )
        if proc.returncode != 0:
            raise RuntimeError(f"fit probe failed under {backend}: {proc.stderr}")
        times[backend] = float(proc.stdout.strip())
    rows.append(("mle_fit n=60 d=4 (subprocess)", times["numpy"], times["compiled"]))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7, help="timing repeats (median reported)")
    parser.add_argument("--skip-fit", action="store_true", help="skip the end-to-end fit probe")
    args = parser.parse_args(argv)

    if compiled_backend is None:
        print("compiled extension is not built; nothing to compare")
        return 1

    rows = bench_kernels(args.repeats)
    if not args.skip_fit:
        rows.extend(bench_fit())

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numpy':>10}  {'compiled':>10}  {'speedup':>8}")
    for label, t_np, t_c in rows:
        print(
            f"{label:<{width}}  {t_np * 1e3:>8.3f}ms  {t_c * 1e3:>8.3f}ms  "
            f"{t_np / t_c:>7.1f}x"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
