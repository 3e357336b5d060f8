"""Compare the numba kernels with their plain-python fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3]

The fallback is the same source run through ``.py_func``, which is what
``PSIEC_DISABLE_JIT=1`` selects at import time.
"""
import argparse
import time

import numpy as np

from psiec import _jit
from psiec import specfun


def best_of(func, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    x, w = np.polynomial.legendre.leggauss(24)
    leg = specfun.normalized_legendre(14, x)
    nodes = np.linspace(-1.0, 1.0, 4000)
    yield "normalized_legendre lmax=32, 4000 pts", specfun._normalized_legendre, (32, nodes)
    yield "gaunt table lmax=14", specfun._gaunt_kernel, (leg, w, 14)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if not _jit.JIT_ENABLED:
        print("numba disabled (PSIEC_DISABLE_JIT); nothing to compare")
        return 0
    print(f"{'kernel':<40}{'numba [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for name, kernel, kargs in cases():
        kernel(*kargs)  # compile
        fast, a = best_of(lambda: kernel(*kargs), args.repeat)
        slow, b = best_of(lambda: kernel.py_func(*kargs), 1)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14), name
        print(f"{name:<40}{fast:>12.4f}{slow:>12.4f}{slow / fast:>9.0f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
