"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py --levels 16 20 22 --repeat 3

Each kernel is warmed up once (numba compiles on first call), then the best
of ``--repeat`` runs is reported.  Outputs are compared so a speedup never
hides a wrong answer.
"""
import argparse
import time

import numpy as np

from minkmoments import kernels


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(level, nmax):
    half = 1 << level
    s = kernels.stern_range(0, 2 * half + 1, impl="numpy")
    num, den = s[1:half], s[half + 1 : 2 * half]
    block = s[half:]
    return {
        "stern_range": lambda impl: kernels.stern_range(half, half + 1, impl=impl),
        "box_power_sums": lambda impl: kernels.box_power_sums(num, den, nmax, impl=impl),
        "log_sum": lambda impl: kernels.log_sum(block, impl=impl),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[16, 20, 22])
    ap.add_argument("--nmax", type=int, default=64, help="highest power for box_power_sums")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is disabled (MINKMOMENTS_DISABLE_NUMBA); nothing to compare")

    print(f"{'kernel':<16}{'level':>6}{'numba s':>12}{'numpy s':>12}{'speedup':>9}  agree")
    for level in args.levels:
        for name, run in cases(level, args.nmax).items():
            t_nb, a = best_of(lambda: run("numba"), args.repeat)
            t_np, b = best_of(lambda: run("numpy"), args.repeat)
            if name == "stern_range":
                agree = np.array_equal(a, b)
            else:
                agree = np.allclose(a, b, rtol=1e-12, atol=0)
            print(f"{name:<16}{level:>6}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}  {agree}")


if __name__ == "__main__":
    main()
