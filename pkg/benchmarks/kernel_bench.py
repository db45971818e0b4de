"""Compare the compiled and numpy recurrence kernels.

Times legendre_table on both backends over a range of (points, degrees)
shapes, checks the outputs stay bitwise identical, and finishes with one
end-to-end plan build per backend.  Run as a script:

    python3 benchmarks/kernel_bench.py [--n 2048] [--repeats 3]
"""
import argparse
import time

import numpy as np

from bfsht.alt import plan_alt
from bfsht.kernels import available_backends, legendre_table
from bfsht.lowrank import SamplingConfig
from bfsht.special import gauss_legendre


def time_table(m, x, degrees, backend, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        legendre_table(m, x, degrees, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2048,
                    help="half-size for the plan-build comparison")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; timing numpy only")

    quad = gauss_legendre(2 * args.n)
    x = quad.nodes[args.n:]
    print(f"{'points':>8} {'degrees':>8} {'span':>6} "
          + " ".join(f"{b:>12}" for b in backends) + "  identical")
    for npts, ndeg, m in [(256, 64, 100), (1024, 256, 500),
                          (2048, 512, 1000), (args.n, 1024, args.n)]:
        npts = min(npts, x.size)
        degrees = np.arange(m, m + 2 * ndeg, 2)
        tables = {}
        row = f"{npts:>8} {ndeg:>8} {2 * ndeg:>6} "
        for b in backends:
            dt = time_table(m, x[:npts], degrees, b, args.repeats)
            tables[b] = legendre_table(m, x[:npts], degrees, backend=b)
            row += f"{dt * 1e3:>10.2f}ms "
        same = all(np.array_equal(tables[b], tables["numpy"])
                   for b in backends)
        print(row + f" {same}")

    print(f"\nplan build, N={args.n}, m={args.n}:")
    # the backend is normally fixed at import; swap the module pointer here
    # so one process can time both
    import bfsht.kernels as K
    orig = K._impl
    try:
        for b in backends:
            K._impl = backends[b]
            t0 = time.perf_counter()
            plan = plan_alt(args.n, args.n, SamplingConfig(seed=0),
                            n0=max(32, args.n // 8), quadrature=quad)
            dt = time.perf_counter() - t0
            print(f"  {b:>9}: {dt:.3f}s  (factor {plan.stats['t_factor']:.3f}s,"
                  f" nnz {plan.stats['total_nnz']})")
    finally:
        K._impl = orig


if __name__ == "__main__":
    main()
