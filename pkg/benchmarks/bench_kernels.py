"""Compare the numba and numpy backends of the dense kernels.

    python3 benchmarks/bench_kernels.py [--repeats N]

Times ``eigh`` on random Hermitian matrices and ``singular_values`` on
random complex matrices at the sizes the criteria use (the numba timings
exclude the first, compiling call).
"""

import argparse
import timeit

import numpy as np

from esic import _kernels

SIZES = (4, 9, 16, 36, 49, 81)


def _hermitian(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeats", type=int, default=20)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>4}{'numba ms':>12}{'numpy ms':>12}{'ratio':>8}")
    for n in SIZES:
        h = _hermitian(n, rng)
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        for name, fn, x in (("eigh", _kernels.eigh, h), ("singular_values", _kernels.singular_values, m)):
            fn(x, use_numba=True)  # compile
            t_nb = min(timeit.repeat(lambda: fn(x, use_numba=True), number=1, repeat=args.repeats)) * 1e3
            t_np = min(timeit.repeat(lambda: fn(x, use_numba=False), number=1, repeat=args.repeats)) * 1e3
            print(f"{name:<16}{n:>4}{t_nb:>12.3f}{t_np:>12.3f}{t_nb / t_np:>8.2f}")


if __name__ == "__main__":
    main()
