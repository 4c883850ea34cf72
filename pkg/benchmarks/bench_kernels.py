"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 16,64,128] [--repeat 5]

Prints the best-of-``repeat`` wall time per call for each backend and the
speedup of the compiled one.
"""
import argparse
import timeit

import numpy as np

from gpspr import kernels


def _cases(n, rng):
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = B @ B.conj().T + n * np.eye(n)
    L = np.linalg.cholesky(M)
    rhs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    X = rng.standard_normal((2 * n, n))
    z = rng.standard_normal(8 * n) + 1j * rng.standard_normal(8 * n)
    b = rng.random(8 * n)
    return {
        "cholesky": lambda k: k.cholesky(M),
        "cho_solve": lambda k: k.cho_solve(L, rhs),
        "jacobi_svd": lambda k: k.jacobi_svd(X),
        "prox_amplitude": lambda k: k.prox_amplitude(z, b),
    }


def best_time(fn, repeat):
    number = 1
    # grow the batch until one batch takes ~20 ms
    while timeit.timeit(fn, number=number) < 0.02 and number < 10**5:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,64,128")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = {name: kernels.load_backend(name) for name in kernels.available_backends()}
    if len(backends) < 2:
        print(f"only {list(backends)} available; build the extension to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>5}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, call in _cases(n, rng).items():
            times = {b: best_time(lambda: call(mod), args.repeat) for b, mod in backends.items()}
            row = f"{name:<16}{n:>5}" + "".join(f"{times[b] * 1e6:>10.1f}us" for b in backends)
            if "cython" in times and "python" in times:
                row += f"{times['python'] / times['cython']:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
