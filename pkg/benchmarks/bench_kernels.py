"""Compare the compiled simulation kernel with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 20000] [--repeat 3]

For each preset the script checks that both backends return identical
arrays, then reports the best-of-``repeat`` wall time of each and the speedup.
"""

import argparse
import time

import numpy as np

from tailcause import kernels
from tailcause.models import model1, model3, model4, simulate


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if not kernels.compiled_available():
        print("compiled extension not built; only the Python fallback is available")
        return 1

    cases = {"model1 (VAR(2))": model1(0.5), "model3 (VAR(3), d=3)": model3(1.0), "model4 (NAAR + confounder)": model4()}
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'model':<28}{'compiled [ms]':>15}{'python [ms]':>14}{'speedup':>10}")
    for name, spec in cases.items():
        fast = simulate(spec, args.n, args.seed, backend="compiled")
        slow = simulate(spec, args.n, args.seed, backend="python")
        for a, b in zip(fast, slow):
            if not np.array_equal(a.values, b.values):
                raise SystemExit(f"{name}: backends disagree")
        tc = best_time(lambda: simulate(spec, args.n, args.seed, backend="compiled"), args.repeat)
        tp = best_time(lambda: simulate(spec, args.n, args.seed, backend="python"), args.repeat)
        print(f"{name:<28}{1e3 * tc:>15.2f}{1e3 * tp:>14.2f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
