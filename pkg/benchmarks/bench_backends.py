"""Compare the numba and pure-numpy backends on the three hot kernels.

    python3 benchmarks/bench_backends.py [--repeats 5] [--M 60]

Each kernel is warmed up once (numba compiles on first call), then timed as
the median of ``--repeats`` calls. Bit states must match exactly; kernel values
may differ by one ulp because numpy's vectorized exp rounds differently.
"""

import argparse
import statistics
import time

import numpy as np

from qmsvm._accel import HAS_NUMBA
from qmsvm.data import Dataset
from qmsvm.kernel import KernelParams, kernel_matrix
from qmsvm.qubo import QmsvmParams, build_qubo
from qmsvm.sampler import AnnealConfig, anneal_states, solve_exact


def timed(fn, repeats):
    result = fn()  # warmup
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return result, statistics.median(times)


def instance(M, C=3, B=2, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((M, 2))
    y = rng.integers(0, C, M)
    K = kernel_matrix(X, X, KernelParams())
    return build_qubo(Dataset(X, y, C), K, QmsvmParams(B))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--M", type=int, default=60, help="subset size of the annealing instance")
    ap.add_argument("--num-reads", type=int, default=1000)
    ap.add_argument("--rows", type=int, default=4000, help="rows of the kernel-matrix benchmark")
    args = ap.parse_args()

    if not HAS_NUMBA:
        print("numba unavailable or disabled (QMSVM_DISABLE_NUMBA); timing numpy only")
    backends = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]

    rng = np.random.default_rng(1)
    A = rng.standard_normal((args.rows, 2))
    S = rng.standard_normal((args.M, 2))
    q_sa = instance(args.M)
    q_exact = instance(4, C=3, B=2, seed=2)  # 24 bits
    cfg = AnnealConfig(num_reads=args.num_reads, sweeps=100, seed=3)

    cases = [
        (f"kernel_matrix {args.rows}x{args.M}", lambda b: kernel_matrix(A, S, KernelParams(), backend=b)),
        (f"anneal dim={q_sa.dim} reads={args.num_reads}", lambda b: anneal_states(q_sa, cfg, backend=b)),
        (f"exact dim={q_exact.dim}", lambda b: solve_exact(q_exact, backend=b).states),
    ]

    print(f"{'kernel':<34s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases:
        results, secs = [], []
        for b in backends:
            r, t = timed(lambda: fn(b), args.repeats)
            results.append(r)
            secs.append(t)
        if results[0].dtype.kind == "f":
            same = all(np.allclose(results[0], r, rtol=1e-15, atol=0) for r in results[1:])
        else:
            same = all(np.array_equal(results[0], r) for r in results[1:])
        row = f"{name:<34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in secs)
        if len(secs) == 2:
            row += f"{secs[1] / secs[0]:11.1f}x"
        if not same:
            row += "  MISMATCH"
        print(row)


if __name__ == "__main__":
    main()
