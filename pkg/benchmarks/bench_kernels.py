"""Timing comparison: compiled scheduling kernel vs the pure-Python path.

The kernel module picks its implementation at import time from the
PLATOONSIM_NO_NUMBA environment variable, so the two paths have to run
in separate interpreters. This script re-execs itself once with the flag
set and reports both timings plus the speedup.

Usage:
    python3 benchmarks/bench_kernels.py [N_VEHICLES] [REPEATS]
"""
from __future__ import annotations

import json
import os
import subprocess
import sys
import time


def bench(n_vehicles: int, repeats: int) -> dict:
    from platoonsim.core import RunConfig, SimParams
    from platoonsim.sim import run
    from platoonsim import _kernels

    params = SimParams().with_rho(0.5)
    config = RunConfig(params=params, pfa="exhaustive", horizon_vehicles=n_vehicles, seed=7)

    run(config)  # warm: triggers any JIT compilation outside the timed region
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = run(config)
        best = min(best, time.perf_counter() - t0)
    return {
        "path": "numba" if _kernels.USE_NUMBA else "python",
        "n_vehicles": n_vehicles,
        "best_seconds": best,
        "mean_delay": res.mean,
    }


def main() -> int:
    n_vehicles = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    repeats = int(sys.argv[2]) if len(sys.argv) > 2 else 3

    if os.environ.get("_BENCH_CHILD"):
        print(json.dumps(bench(n_vehicles, repeats)))
        return 0

    results = []
    for no_numba in ("0", "1"):
        env = dict(os.environ)
        env["PLATOONSIM_NO_NUMBA"] = no_numba
        env["_BENCH_CHILD"] = "1"
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), str(n_vehicles), str(repeats)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        results.append(json.loads(out.stdout.splitlines()[-1]))

    fast, slow = results
    print(f"vehicles per run: {n_vehicles}, repeats: {repeats} (best-of shown)")
    for r in results:
        print(f"  {r['path']:>6}: {r['best_seconds']:.4f} s  (mean delay {r['mean_delay']:.4f})")
    if fast["mean_delay"] != slow["mean_delay"]:
        print("  WARNING: paths disagree on the simulated mean delay")
        return 1
    print(f"  speedup: {slow['best_seconds'] / fast['best_seconds']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
