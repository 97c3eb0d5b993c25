#!/usr/bin/env python3
"""Time the stepping kernels with and without the numba backend.

Runs each bundled benchmark scenario in two subprocesses (AWPI_NUMBA=1
and AWPI_NUMBA=0) so both paths start from a clean import, warms the
JIT once, then reports the best-of-N wall time per full simulation.

Usage: python benchmarks/compare_backends.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys

SCENARIOS = ("paper_sec5_epm", "paper_sec5_elm", "paper_sec5_itm")

_WORKER = """
import json, time
import numpy as np
import awpi
from awpi import kernels
from awpi.signals import as_breakpoints

repeats = {repeats}
out = {{"numba": awpi.NUMBA_ENABLED, "timings": {{}}, "kernel": {{}}}}
for name in {scenarios!r}:
    cfg = awpi.load_scenario(name)
    awpi.simulate(cfg.params, cfg.signal, cfg.method, cfg)  # warm-up / JIT
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        log = awpi.simulate(cfg.params, cfg.signal, cfg.method, cfg)
        best = min(best, time.perf_counter() - t0)
    out["timings"][name] = {{"seconds": best, "records": len(log.records)}}

# kernel-only march (arrays in, arrays out) on a fine grid
cfg = awpi.load_scenario("paper_sec5_epm")
bx, by = as_breakpoints(cfg.signal)
p = cfg.params
n = 450_000  # the benchmark horizon at h = 1e-5
h = cfg.t_end / n
arrays = [np.empty(n) for _ in range(4)] + [np.empty(n, np.int64) for _ in range(2)]
kernels.epm_march(bx, by, p.kp, p.ki, p.w_min, p.w_max, 0.0, 0, 0.0, h, n, *arrays)
best = float("inf")
for _ in range(repeats):
    t0 = time.perf_counter()
    kernels.epm_march(bx, by, p.kp, p.ki, p.w_min, p.w_max, 0.0, 0, 0.0, h, n, *arrays)
    best = min(best, time.perf_counter() - t0)
out["kernel"]["epm_march_450k"] = best
print(json.dumps(out))
"""


def run_backend(numba_flag: str, repeats: int) -> dict:
    env = dict(os.environ, AWPI_NUMBA=numba_flag)
    code = _WORKER.format(repeats=repeats, scenarios=SCENARIOS)
    proc = subprocess.run([sys.executable, "-c", code],
                          capture_output=True, text=True, env=env)
    if proc.returncode != 0:
        raise RuntimeError(f"worker failed:\n{proc.stderr}")
    return json.loads(proc.stdout)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repetitions per scenario (default: 5)")
    args = parser.parse_args()

    jit = run_backend("1", args.repeats)
    py = run_backend("0", args.repeats)
    if not jit["numba"]:
        print("warning: numba unavailable; comparing the fallback to itself")

    print(f"{'scenario':<22} {'records':>8} {'numba [ms]':>12} "
          f"{'python [ms]':>12} {'speedup':>8}")
    for name in SCENARIOS:
        tj = jit["timings"][name]["seconds"]
        tp = py["timings"][name]["seconds"]
        recs = jit["timings"][name]["records"]
        print(f"{name:<22} {recs:>8} {tj * 1e3:>12.2f} {tp * 1e3:>12.2f} "
              f"{tp / tj:>7.1f}x")
    tj = jit["kernel"]["epm_march_450k"]
    tp = py["kernel"]["epm_march_450k"]
    print(f"{'epm_march (kernel)':<22} {450000:>8} {tj * 1e3:>12.2f} "
          f"{tp * 1e3:>12.2f} {tp / tj:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
