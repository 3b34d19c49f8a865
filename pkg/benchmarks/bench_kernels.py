"""Time the compiled and NumPy extension kernels on the same workload.

    python3 benchmarks/bench_kernels.py [--points N] [--h H] [--repeat K]

Reports the best wall time per backend and the largest absolute
difference between their outputs.
"""
import argparse
import time

import numpy as np

from restriction_lab import kernels
from restriction_lab.extension import EvalGrid, evaluate_extension
from restriction_lab.families import random_smooth


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--h", type=float, default=1 / 256)
    ap.add_argument("--radius", type=float, default=30.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    f = random_smooth(0).sample(args.h)
    pts = EvalGrid.random_ball(args.radius, args.points, seed=1)
    kernels.set_num_threads(args.threads)
    print(f"grid nodes {f.values.size}, points {args.points}, threads {args.threads}")
    results = {}
    for backend in ("python", "compiled"):
        if backend == "compiled" and kernels.BACKEND != "compiled":
            print("compiled: not built, skipped")
            continue
        t, v = best_time(lambda: evaluate_extension(f, pts, backend=backend), args.repeat)
        results[backend] = (t, v)
        print(f"{backend:9s} {t:9.4f} s")
    if len(results) == 2:
        tp, vp = results["python"]
        tc, vc = results["compiled"]
        print(f"speedup   {tp / tc:9.2f}x")
        print(f"max |diff| {np.max(np.abs(vp - vc)):.3e}")


if __name__ == "__main__":
    main()
