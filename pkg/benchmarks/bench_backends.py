"""Time the compiled and interpreted backends on the same workloads.

Each backend runs in a fresh interpreter with CRITPOINT_NUMBA set, so the
selection at import time is exercised exactly as users see it. Compile time is
reported separately from the steady-state run.

    python3 benchmarks/bench_backends.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from critpoint import HessianMode, backend_name, make_test_objective, restarted_agd, sym_eigendecomp

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
A = rng.standard_normal((60, 60))
M = 0.5 * (A + A.T)
obj = make_test_objective("quad_cos", 2, {"x0_scale": 0.5}, seed=0)

def jacobi():
    sym_eigendecomp(M)

def solver():
    restarted_agd(obj, 0.0, 0.2, 1, HessianMode.exact(), record_trace=False)

out = {"backend": backend_name()}
for name, fn in (("jacobi_d60", jacobi), ("restarted_quad_cos_d2", solver)):
    t0 = time.perf_counter()
    fn()
    first = time.perf_counter() - t0
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    out[name] = {"first_s": first, "best_s": min(times)}
print(json.dumps(out))
"""


def run_backend(flag, repeat):
    env = dict(os.environ, CRITPOINT_NUMBA=flag)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True,
                          text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    fast, slow = run_backend("1", args.repeat), run_backend("0", args.repeat)
    print(f"{'workload':<24} {fast['backend'] + ' first':>14} {fast['backend'] + ' best':>12} "
          f"{slow['backend'] + ' best':>12} {'speedup':>9}")
    for name in ("jacobi_d60", "restarted_quad_cos_d2"):
        f, s = fast[name], slow[name]
        print(f"{name:<24} {f['first_s']:>14.3f} {f['best_s']:>12.3f} {s['best_s']:>12.3f} "
              f"{s['best_s'] / f['best_s']:>8.1f}x")


if __name__ == "__main__":
    main()
