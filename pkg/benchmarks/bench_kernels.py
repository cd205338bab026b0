"""Time the numba and numpy kernel paths side by side.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per call for each kernel and the speedup.
"""

import argparse
import timeit

import numpy as np

from scrkit import _kernels


def cases():
    rng = np.random.default_rng(0)
    f = np.linspace(5.0e9 - 1e5, 5.0e9 + 1e5, 2001)
    yield "s21_eval (2001 pts)", "s21_eval", (f, 5.0e9, 3.9e5, 1e5, 0.1)
    for n in (10, 100):
        pos = rng.standard_normal((n, 2))
        yield f"coulomb_energy_grad (n={n})", "coulomb_energy_grad", (pos,)
        yield f"coulomb_hessian (n={n})", "coulomb_hessian", (pos,)
        yield f"coulomb_coefficients (n={n})", "coulomb_coefficients", (pos, 1.0)


def best(fn, args, repeat):
    fn(*args)  # warm up / compile
    number = 20
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args()
    nb = _kernels.numba_impl
    print(f"{'kernel':<32}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for label, name, args in cases():
        t_np = best(getattr(_kernels.numpy_impl, name), args, a.repeat)
        if nb is None:
            print(f"{label:<32}{t_np * 1e6:>10.1f}us{'n/a':>12}{'':>10}")
            continue
        t_nb = best(getattr(nb, name), args, a.repeat)
        print(f"{label:<32}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
