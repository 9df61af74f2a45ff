"""Benchmark the recurrent kernels under both backends.

The backend is fixed at import time by the PRONTRAIN_NUMBA environment
variable, so this script re-invokes itself once per backend and reports
the per-call timings side by side.

Usage: python3 benchmarks/bench_kernels.py [--iters N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def run_worker(iters: int) -> dict:
    from prontrain import kernels

    rng = np.random.default_rng(0)
    T, D, H = 40, 80, 128
    x = rng.normal(size=(T, D))
    w = rng.normal(size=(D, 4 * H)) * 0.1
    u = rng.normal(size=(H, 4 * H)) * 0.1
    b = rng.normal(size=4 * H) * 0.1
    dhs = rng.normal(size=(T, H))

    # warm-up covers jit compilation so it is excluded from the timings
    hs, cs, gates = kernels.lstm_forward(x, w, u, b)
    kernels.lstm_backward(x, hs, cs, gates, u, dhs)

    start = time.perf_counter()
    for _ in range(iters):
        hs, cs, gates = kernels.lstm_forward(x, w, u, b)
    fwd = (time.perf_counter() - start) / iters

    start = time.perf_counter()
    for _ in range(iters):
        kernels.lstm_backward(x, hs, cs, gates, u, dhs)
    bwd = (time.perf_counter() - start) / iters

    return {"backend": kernels.BACKEND, "forward_ms": fwd * 1e3,
            "backward_ms": bwd * 1e3}


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--iters", type=int, default=200)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(run_worker(args.iters)))
        return

    results = []
    for flag in ("1", "0"):
        env = dict(os.environ, PRONTRAIN_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, __file__, "--worker", "--iters", str(args.iters)],
            env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(out.stdout.strip().splitlines()[-1]))

    print(f"{'backend':<8} {'forward ms':>12} {'backward ms':>12}")
    for r in results:
        print(f"{r['backend']:<8} {r['forward_ms']:>12.3f} {r['backward_ms']:>12.3f}")
    if results[0]["backend"] != results[1]["backend"]:
        speedup = results[1]["forward_ms"] / results[0]["forward_ms"]
        print(f"forward speedup ({results[0]['backend']} vs "
              f"{results[1]['backend']}): {speedup:.1f}x")


if __name__ == "__main__":
    main()
