"""Benchmark the jitted stream kernels against the pure-Python fallback.

Runs each kernel in a subprocess with SATRACK_NUMBA on and off, on identical
gradient streams, and verifies the outputs match bitwise before reporting the
timings.

    python3 benchmarks/bench_kernels.py [-T 5000] [--repeats 20]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

WORKER = r"""
import json, sys, time
import numpy as np
from satrack import kernels

path, T, repeats = sys.argv[1], int(sys.argv[2]), int(sys.argv[3])
rng = np.random.default_rng(0)
g = rng.uniform(-1.0, 1.0, T)
target = np.where(rng.random(T) < 0.5, 1.0, -1.0)

kernels.betting_run(g, 1.0, 1.0, 1.0, 1.0, 10.0)  # compile / warm up
t0 = time.perf_counter()
for _ in range(repeats):
    out_plain = kernels.betting_run(g, 1.0, 1.0, 1.0, 1.0, 10.0)
plain = (time.perf_counter() - t0) / repeats

kernels.betting_run_target(target, 1.0, 0.0, 1.0, 1.0, 5.0)
t0 = time.perf_counter()
for _ in range(repeats):
    out_target = kernels.betting_run_target(target, 1.0, 0.0, 1.0, 1.0, 5.0)
pursuit = (time.perf_counter() - t0) / repeats

np.savez(path + ".npz", x=out_plain[0], w=out_plain[2], xt=out_target[0])
print(json.dumps({"numba": kernels.NUMBA_ENABLED,
                  "betting_run_s": plain, "betting_run_target_s": pursuit}))
"""


def run_worker(numba: str, path: str, T: int, repeats: int) -> dict:
    env = dict(os.environ, SATRACK_NUMBA=numba)
    proc = subprocess.run([sys.executable, "-c", WORKER, path, str(T), str(repeats)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-T", type=int, default=5000)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    import numpy as np

    with tempfile.TemporaryDirectory() as tmp:
        jit = run_worker("1", f"{tmp}/jit", args.T, args.repeats)
        py = run_worker("0", f"{tmp}/py", args.T, args.repeats)
        a = np.load(f"{tmp}/jit.npz")
        b = np.load(f"{tmp}/py.npz")
        for key in ("x", "w", "xt"):
            if not np.array_equal(a[key], b[key]):
                print(f"MISMATCH in {key}: paths disagree", file=sys.stderr)
                return 1

    assert jit["numba"] and not py["numba"]
    print(f"T={args.T}, {args.repeats} repeats, outputs bitwise identical")
    print(f"{'kernel':<24}{'numba':>12}{'fallback':>12}{'speedup':>10}")
    for key, label in (("betting_run_s", "betting_run"),
                       ("betting_run_target_s", "betting_run_target")):
        ratio = py[key] / jit[key]
        print(f"{label:<24}{jit[key] * 1e3:>10.2f}ms{py[key] * 1e3:>10.2f}ms"
              f"{ratio:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
