"""Compare the compiled closed-loop kernel with the pure-Python fallback.

Runs the same noisy four-channel step simulation through both backends,
checks that they agree, and prints the best-of-N wall time for each.

    python benchmarks/bench_kernels.py --seconds 2 --repeat 3
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from quadpida import kernels
from quadpida.dynamics import QuadParams, hover_state
from quadpida.simulate import simulate
from quadpida.tuning import pole_placement_gains


def workload(seconds: float, dt: float, seed: int):
    n = int(round(seconds / dt))
    rng = np.random.default_rng(seed)
    refs = np.tile([np.radians(-5.0), np.radians(10.0), np.radians(30.0), 20.0], (n, 1))
    refs[: n // 4] = [0.0, 0.0, 0.0, 50.0]
    noise = rng.standard_normal((n, 4)) * [1e-3, 1e-3, 1e-3, 1e-2]
    return hover_state((0.0, 0.0, -50.0)), refs, noise


def best_time(run, repeat: int) -> tuple[float, object]:
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = run()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=2.0, help="simulated time per run")
    ap.add_argument("--dt", type=float, default=0.001)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    params = QuadParams()
    gains = pole_placement_gains(params)
    x0, refs, noise = workload(args.seconds, args.dt, args.seed)
    steps = len(refs)

    backends = {"python": kernels.python_run_closed_loop}
    if kernels.compiled_run_closed_loop is not None:
        backends["cython"] = kernels.compiled_run_closed_loop
    else:
        print("compiled extension not built; timing the Python kernel only", file=sys.stderr)

    times, results = {}, {}
    for name, backend in backends.items():
        times[name], results[name] = best_time(
            lambda b=backend: simulate(x0, gains, params, refs, args.dt, noise, backend=b), args.repeat
        )

    print(f"{steps} steps of {args.dt:g} s, best of {args.repeat}")
    for name, t in times.items():
        print(f"  {name:>7}: {t * 1e3:10.2f} ms  {steps / t:12.0f} steps/s")
    if "cython" in times:
        gap = float(np.max(np.abs(results["cython"].states - results["python"].states)))
        print(f"  speedup {times['python'] / times['cython']:.1f}x, max state difference {gap:.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
