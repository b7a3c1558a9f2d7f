"""Time the compiled and pure-Python GF(2) column reductions.

Inputs are boundary columns of random flag complexes and of the depth
filtration of the largest bundled fixture. Usage::

    python3 bench/bench_reduce.py [--sizes 200 400 800] [--repeat 3]
"""

import argparse
import random
import time

from singulock import _kernels, explore, homology
from singulock.corpus import load_fixture
from singulock.topology import depth_filtration


def random_columns(rng, n_vertices, p):
    """Vertex, edge and triangle columns of a random clique complex, faces first."""
    edges = [(a, b) for a in range(n_vertices) for b in range(a + 1, n_vertices) if rng.random() < p]
    eid = {e: n_vertices + i for i, e in enumerate(edges)}
    adj = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
    cols = [[] for _ in range(n_vertices)]
    cols += [[a, b] for a, b in edges]
    for a, b in edges:
        for c in sorted(adj.get(b, set()) & adj.get(a, set())):
            cols.append(sorted((eid[a, b], eid[b, c], eid[a, c])))
    return cols


def filtration_columns(graph):
    """The columns persistent_h1 hands to the reducer for ``graph``."""
    captured = []
    original = homology.reduce_columns

    def spy(cols):
        captured.append(cols)
        return original(cols)

    homology.reduce_columns = spy
    try:
        homology.persistent_h1(depth_filtration(graph))
    finally:
        homology.reduce_columns = original
    return captured[0]


def best_of(fn, cols, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(cols)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--density", type=float, default=0.1)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    cases = [(f"random n={n}", random_columns(rng, n, args.density)) for n in args.sizes]
    graph = explore(load_fixture("FX-PHIL3")[0])
    cases.append(("FX-PHIL3 filtration", filtration_columns(graph)))

    print(f"compiled kernel available: {_kernels.reduce_columns_ext is not None}")
    print(f"{'case':<24}{'columns':>9}{'python s':>12}{'compiled s':>12}{'speedup':>9}")
    for name, cols in cases:
        py = best_of(_kernels.reduce_columns_py, cols, args.repeat)
        if _kernels.reduce_columns_ext is None:
            print(f"{name:<24}{len(cols):>9}{py:>12.4f}{'-':>12}{'-':>9}")
            continue
        ext = best_of(_kernels.reduce_columns_ext, cols, args.repeat)
        assert list(_kernels.reduce_columns_ext(cols)[0]) == _kernels.reduce_columns_py(cols)[0]
        print(f"{name:<24}{len(cols):>9}{py:>12.4f}{ext:>12.4f}{py / ext:>9.1f}x")


if __name__ == "__main__":
    main()
