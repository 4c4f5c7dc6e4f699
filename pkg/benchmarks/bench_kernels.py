"""Element kernel timings: numba loops vs the vectorised numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--elements-per-side N] [--repeat R]``.
The first numba call (compilation or cache load) is excluded.
"""
import argparse
import time

import numpy as np

from lrcontact.contact import ContactParams, element_penalties
from lrcontact.kernels import _numba, _numpy
from lrcontact.lr.build import flat_sheet
from lrcontact.membrane import MembraneModel


def setup(n, p):
    mesh = flat_sheet(2.0, 2.0, n, n, p)
    model = MembraneModel(mesh, prestretch=1.1, nq=p + 2)
    disc = model.disc
    rng = np.random.default_rng(0)
    x = model.reference_x() + 0.01 * rng.standard_normal((mesh.n_functions, 3))
    x[:, 2] -= 0.2 * np.exp(-((x[:, 0] - 1) ** 2 + (x[:, 1] - 1) ** 2))
    Ainv, dA = model.reference()
    eps = element_penalties(disc, ContactParams(10.0, p))
    return disc, x, Ainv, dA, eps


def calls(mod, disc, x, Ainv, dA, eps):
    return {
        "membrane": lambda: mod.membrane(disc.conn, disc.N1, disc.N2, x, Ainv, dA, 1.0, True),
        "volume": lambda: mod.volume(disc.conn, disc.N, disc.N1, disc.N2, disc.wq, x, True),
        "contact": lambda: mod.contact(disc.conn, disc.N, disc.N1, disc.N2, disc.wq, x,
                                       np.array([1.0, 1.0, 0.7]), 1.0, eps, True),
    }


def best_of(fn, repeat):
    fn()
    t = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        t.append(time.perf_counter() - t0)
    return min(t)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--elements-per-side", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'elements':>8} {'kernel':>9} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for n in args.elements_per_side:
        data = setup(n, args.degree)
        a, b = calls(_numpy, *data), calls(_numba, *data)
        for name in a:
            tn, tj = best_of(a[name], args.repeat), best_of(b[name], args.repeat)
            print(f"{n * n:>8} {name:>9} {1e3 * tn:>11.2f} {1e3 * tj:>11.2f} {tn / tj:>8.1f}")


if __name__ == "__main__":
    main()
