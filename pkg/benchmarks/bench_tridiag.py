"""Compare the compiled and pure-Python tridiagonal kernels.

    python benchmarks/bench_tridiag.py --sizes 8,64,512,4096 --repeat 20

Prints one row per (size, kernel) with the best factor+solve time and the
speedup of the compiled kernel. Also checks that both kernels agree bitwise.
"""
import argparse
import time

import numpy as np

from arkimex.tridiag import KERNELS, TridiagonalSystem


def system(n, rng):
    sub = rng.uniform(-1, 1, n - 1)
    sup = rng.uniform(-1, 1, n - 1)
    diag = rng.uniform(-1, 1, n) + 2.5
    return sub, diag, sup, rng.standard_normal(n)


def best_time(kernel, sub, diag, sup, rhs, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        x = TridiagonalSystem(sub, diag, sup, kernel=kernel).factor().solve(rhs)
        best = min(best, time.perf_counter() - t0)
    return best, x


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="8,64,512,4096")
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    if "compiled" not in KERNELS:
        print("compiled kernel not available; timing the Python kernel only")
    print(f"{'n':>6s} {'kernel':>9s} {'seconds':>11s} {'speedup':>8s}")
    for n in (int(s) for s in args.sizes.split(",")):
        sub, diag, sup, rhs = system(n, rng)
        t_py, x_py = best_time(KERNELS["python"], sub, diag, sup, rhs, args.repeat)
        print(f"{n:6d} {'python':>9s} {t_py:11.3e} {'':>8s}")
        if "compiled" in KERNELS:
            t_c, x_c = best_time(KERNELS["compiled"], sub, diag, sup, rhs, args.repeat)
            same = np.array_equal(x_py, x_c)
            print(f"{n:6d} {'compiled':>9s} {t_c:11.3e} {t_py / t_c:7.1f}x"
                  + ("" if same else "  (results differ)"))


if __name__ == "__main__":
    main()
