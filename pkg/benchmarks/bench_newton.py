"""Compare the compiled and numpy Newton kernels on the reduced Lagrange system.

Both backends run the same start points for each documented design and
mode; the script reports wall time per backend, the speedup, and the
largest difference between converged roots.

    python benchmarks/bench_newton.py --starts 4096 --repeat 3
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pentasing import kernels
from pentasing.model import Design, Pose, canonicalize
from pentasing.optimize import Mode, SolverSettings, build_lagrange, start_points

DESIGNS = {
    "position-linear": Design(
        [[0, 0, 0], [-0.5, 0, 0], [1, 2, 0], [-3, -1, 0], [-1, 2, 0]], [0, 1, 2, 4, 6]
    ),
    "orientation-linear": Design(
        [[0, 0, 0], [1, 0, 0], [-0.5, 1.5, 0], [-3, 4, 0], [-1, 2, 0]], [0, 1, 3, 5, 6]
    ),
}
QUERY = Pose([1 / 3, 2 / 3, 2 / 3], [1, 2, 3])


def _best_of(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(starts: int, repeat: int, seed: int) -> int:
    backends = kernels.available()
    print(f"backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled kernel not built; only the numpy kernel is timed")
    print(f"{'case':<30}{'backend':>9}{'starts':>8}{'seconds':>10}{'speedup':>9}{'root diff':>11}")
    for name, design in DESIGNS.items():
        d = canonicalize(design)
        for mode in Mode:
            sys = build_lagrange(d, QUERY, mode)
            y0 = start_points(sys, SolverSettings(seed=seed, starts=starts)).full
            args = sys.kernel_args()
            out, times = {}, {}
            for b in backends:
                newton = kernels.get_backend(b).newton_batch
                out[b] = newton(y0, *args)
                times[b] = _best_of(lambda: newton(y0, *args), repeat)
            ref = times["python"]
            for b in backends:
                diff = ""
                if b != "python":
                    ok = (out[b][2] == 0) & (out["python"][2] == 0)
                    diff = f"{np.abs(out[b][0][ok] - out['python'][0][ok]).max(initial=0.0):.1e}"
                print(f"{name + '/' + mode.value:<30}{b:>9}{len(y0):>8}{times[b]:>10.3f}"
                      f"{ref / times[b]:>9.1f}{diff:>11}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--starts", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)
    return run(a.starts, a.repeat, a.seed)


if __name__ == "__main__":
    raise SystemExit(main())
