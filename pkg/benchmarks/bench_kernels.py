"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--sizes 50 200 400] [--repeat 5]

Times a Borwein-Preiss sweep (set filtering and argmin dominate) and a full
triangle scan on random asymmetric tables, once per available backend.
"""
import argparse
import time

import numpy as np

from varprin import _kernels, borwein_preiss, ekeland
from varprin.problem import generate_instance


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bp_sweep(problems):
    for p in problems:
        borwein_preiss(p.distance, p.objective, p.schedule, p.z0, "quasi", 0)
        ekeland(p.distance, p.objective, p.schedule.epsilon, p.z0, "quasi", 0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 200, 400])
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = sorted(_kernels.BACKENDS)
    before = _kernels.BACKEND
    print(f"backends: {backends}")
    print(f"{'kernel':<16}{'n':>6}" + "".join(f"{b:>12}" for b in backends))
    for n in args.sizes:
        problems = [generate_instance(s, n, "table", "bp") for s in range(args.instances)]
        for p in problems:
            p.distance.matrix, p.distance._columns  # warm the caches outside the timing
        D = np.ascontiguousarray(problems[0].distance.matrix)
        row_sweep, row_tri = [], []
        for b in backends:
            _kernels.set_backend(b)
            row_sweep.append(best_of(lambda: bp_sweep(problems), args.repeat))
            row_tri.append(best_of(lambda: _kernels.triangle_scan(D, 1e-9, 0), args.repeat))
        print(f"{'bp+ekeland':<16}{n:>6}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row_sweep))
        print(f"{'triangle_scan':<16}{n:>6}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row_tri))
    _kernels.set_backend(before)


if __name__ == "__main__":
    main()
