"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--rows 1000000] [--repeat 3]

Each kernel is timed on both backends with identical inputs; the full
``diagnose`` pipeline is timed in a subprocess per backend because the
backend is chosen once, at import.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from asiaudit import _pykernels

try:
    from asiaudit import _ckernels
except ImportError:
    _ckernels = None

DIAGNOSE_SNIPPET = """
import time
from asiaudit import diagnose, kernels
from asiaudit.synth import SimulationConfig, simulate_panel
panel = simulate_panel(SimulationConfig(n_firms={firms}, n_years=10, seed=1))
best = float("inf")
for _ in range({repeat}):
    t0 = time.perf_counter()
    diagnose(panel)
    best = min(best, time.perf_counter() - t0)
print(kernels.BACKEND, best)
"""


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(rows):
    rng = np.random.default_rng(0)
    X = np.column_stack([np.ones(rows), rng.normal(size=rows), rng.normal(size=rows)])
    y = rng.normal(size=rows)
    v = rng.normal(size=rows)
    return {
        f"householder {rows}x3": lambda m: m.householder(X, y),
        f"compensated_sum {rows}": lambda m: m.compensated_sum(v),
        f"compensated_dot {rows}": lambda m: m.compensated_dot(v, y),
        "betacf x 10000": lambda m: [m.betacf(500.0, 0.5, 0.999, 300, 1e-14) for _ in range(10000)],
    }


def diagnose_timing(rows, repeat, pure):
    env = dict(os.environ)
    if pure:
        env["ASIAUDIT_PURE_PYTHON"] = "1"
    else:
        env.pop("ASIAUDIT_PURE_PYTHON", None)
    code = DIAGNOSE_SNIPPET.format(firms=max(rows // 10, 2), repeat=repeat)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, seconds = out.stdout.split()
    return backend, float(seconds)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled extension not built; timing the Python backend only")
    print(f"{'case':32s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, fn in kernel_cases(args.rows).items():
        tp = best_of(lambda: fn(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:32s} {tp:11.4f} {'-':>11s} {'-':>8s}")
            continue
        tc = best_of(lambda: fn(_ckernels), args.repeat)
        print(f"{name:32s} {tp:11.4f} {tc:11.4f} {tp / tc:7.1f}x")

    _, tp = diagnose_timing(args.rows, args.repeat, pure=True)
    backend, tc = diagnose_timing(args.rows, args.repeat, pure=False)
    name = f"diagnose {args.rows} rows"
    if backend == "cython":
        print(f"{name:32s} {tp:11.4f} {tc:11.4f} {tp / tc:7.1f}x")
    else:
        print(f"{name:32s} {tp:11.4f} {'-':>11s} {'-':>8s}")


if __name__ == "__main__":
    main()
