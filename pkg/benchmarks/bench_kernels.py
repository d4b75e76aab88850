"""Compare the compiled and numpy energy kernels on random chains.

    python3 benchmarks/bench_kernels.py [--units 10 50 200] [--repeat 5]
"""

import argparse
import time

import numpy as np

from polyframe import _pykernels, kernels
from polyframe.builders import random_polymer
from polyframe.energy import energy_terms, toy_energy


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--units", type=int, nargs="+", default=[10, 50, 200])
    p.add_argument("--atoms-per-unit", type=int, default=12)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    if kernels.compiled_backend is None:
        print("compiled kernels unavailable; only the numpy backend can run")
    rng = np.random.default_rng(args.seed)
    print(f"{'atoms':>7} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8} {'|dE|/E':>9}")
    for n in args.units:
        graph, conf, _, _ = random_polymer(rng, n, args.atoms_per_unit)
        energy_terms(graph)  # warm the topology cache
        t_py = best_of(lambda: toy_energy(conf, graph, backend=_pykernels), args.repeat)
        e_py = toy_energy(conf, graph, backend=_pykernels)
        if kernels.compiled_backend is None:
            print(f"{graph.total_atoms:>7} {t_py * 1e3:>11.2f} {'-':>12} {'-':>8} {'-':>9}")
            continue
        t_cy = best_of(lambda: toy_energy(conf, graph, backend=kernels.compiled_backend), args.repeat)
        e_cy = toy_energy(conf, graph, backend=kernels.compiled_backend)
        rel = abs(e_cy - e_py) / max(abs(e_py), 1e-300)
        print(f"{graph.total_atoms:>7} {t_py * 1e3:>11.2f} {t_cy * 1e3:>12.2f} {t_py / t_cy:>8.1f} {rel:>9.1e}")


if __name__ == "__main__":
    main()
