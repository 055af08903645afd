"""Side-by-side timing of the compiled kernels and their numpy fallbacks.

The kernel path is chosen once at import time from EIBENCH_DISABLE_NUMBA,
so this script times each path in its own subprocess and prints a table:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --rows 500000 --repeat 7

Per-kernel numbers are the best wall-clock time over --repeat runs,
after one untimed warmup call that also absorbs JIT compilation.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

KERNELS = (
    "row_top",
    "ei_rows",
    "js_rows",
    "l2_rows",
    "consistency_rows",
    "conf_diff_rows",
    "huber_line_fit",
    "bootstrap_lines",
)


def run_workload(rows, repeat, seed):
    from eibench import _kernels

    rng = np.random.default_rng(seed)
    k = 10
    orig = rng.dirichlet(np.ones(k), size=rows)
    trans = rng.dirichlet(np.ones(k), size=rows)
    x = rng.uniform(0.0, 1.0, 2000)
    y = 2.0 * x + 1.0 + rng.normal(0.0, 0.3, 2000)
    xs = rng.uniform(0.0, 1.0, 150)
    ys = 1.2 * xs + 0.3 + rng.normal(0.0, 0.3, 150)
    idx = rng.integers(0, xs.size, size=(1000, xs.size)).astype(np.int64)

    cases = {
        "row_top": lambda: _kernels.row_top(orig),
        "ei_rows": lambda: _kernels.ei_rows(orig, trans),
        "js_rows": lambda: _kernels.js_rows(orig, trans),
        "l2_rows": lambda: _kernels.l2_rows(orig, trans),
        "consistency_rows": lambda: _kernels.consistency_rows(orig, trans),
        "conf_diff_rows": lambda: _kernels.conf_diff_rows(orig, trans),
        "huber_line_fit": lambda: _kernels.huber_line_fit(x, y),
        "bootstrap_lines": lambda: _kernels.bootstrap_lines(xs, ys, idx),
    }
    timings = {}
    for name in KERNELS:
        fn = cases[name]
        fn()
        best = min(_timed(fn) for _ in range(repeat))
        timings[name] = best
    return {"using_numba": _kernels.USING_NUMBA, "timings": timings}


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def _spawn(disable_numba, args):
    env = dict(os.environ)
    if disable_numba:
        env["EIBENCH_DISABLE_NUMBA"] = "1"
    else:
        env.pop("EIBENCH_DISABLE_NUMBA", None)
    cmd = [sys.executable, os.path.abspath(__file__), "--worker",
           "--rows", str(args.rows), "--repeat", str(args.repeat),
           "--seed", str(args.seed)]
    out = subprocess.run(cmd, env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=200_000,
                        help="sample pairs per row-kernel call (default 200000)")
    parser.add_argument("--repeat", type=int, default=5,
                        help="timed runs per kernel, best is kept (default 5)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args.worker:
        json.dump(run_workload(args.rows, args.repeat, args.seed), sys.stdout)
        return 0

    numpy_side = _spawn(True, args)
    compiled_side = _spawn(False, args)
    if compiled_side["using_numba"]:
        label = "numba"
    else:
        label = "numpy (numba unavailable)"

    print(f"rows={args.rows} repeat={args.repeat} seed={args.seed}")
    print(f"{'kernel':<18} {'numpy':>12} {label:>12} {'speedup':>9}")
    for name in KERNELS:
        base = numpy_side["timings"][name]
        fast = compiled_side["timings"][name]
        print(f"{name:<18} {base * 1e3:>10.2f}ms {fast * 1e3:>10.2f}ms {base / fast:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
