"""Throughput of the compiled trial kernel against the pure-Python one.

Both kernels run the same sampled faults, so their failure counts must
agree; the script checks that before reporting trials per second.

    python3 benchmarks/bench_kernel.py [--trials N] [--setting NAME] [--p P]
"""

from __future__ import annotations

import argparse
import time

from bs9arch.sim import backend, estimate_pec
from bs9arch.sim.settings import SETTINGS, Setting


def _time(prog, trials: int, kernel: str, seed: int):
    t0 = time.perf_counter()
    est = estimate_pec(prog, trials, seed, workers=1, kernel=kernel)
    return est, time.perf_counter() - t0


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--setting", choices=SETTINGS, default="native")
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--trials", type=int, default=8192)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    prog = Setting(args.setting).program(args.p)
    print(f"setting={args.setting} p={args.p} ops/cycle={prog.n_ops} trials={args.trials}")
    results = {}
    for kernel in backend.available():
        est, dt = _time(prog, args.trials, kernel, args.seed)
        results[kernel] = est
        print(f"{kernel:>9}: {args.trials / dt:12.0f} trials/s  ({dt:.2f} s, {est.failures} failures)")
    if len(results) == 2:
        a, b = results["compiled"], results["python"]
        same = (a.failures, a.x_failures, a.z_failures) == (b.failures, b.x_failures, b.z_failures)
        print("kernels agree" if same else "KERNELS DISAGREE")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
