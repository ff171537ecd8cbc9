"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Times all-pairs BFS on a 60-node, 1000-edge graph and the path-product
kernel on one transition-sweep batch, and checks both backends agree.
"""

import argparse
import timeit

import numpy as np

from qsubnet import kernels
from qsubnet.netmodel import generate_random_subnetwork


def workloads():
    g = generate_random_subnetwork(60, 1000, seed=1)
    indptr, indices = g.csr
    rng = np.random.default_rng(0)
    lengths = rng.integers(1, 8, size=20_000)
    path_indptr = np.concatenate([[0], np.cumsum(lengths)])
    path_edges = rng.integers(0, 2001, size=int(path_indptr[-1]))
    x = rng.uniform(0.8, 1.0, 2001)
    eta = rng.uniform(0.2, 1.0, 2001)
    return {
        "all_pairs_hops(60 nodes, 1000 edges)": (kernels.all_pairs_hops, (indptr, indices, g.node_count)),
        "path_products(20000 paths)": (kernels.path_products, (path_indptr, path_edges, x, eta)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = kernels.backends()
    print(f"default backend: {kernels.BACKEND}; available: {', '.join(sorted(backends))}")
    for name, (fn, fargs) in workloads().items():
        results, times = {}, {}
        for bname, mod in sorted(backends.items()):
            results[bname] = fn(*fargs, impl=mod)
            times[bname] = min(timeit.repeat(lambda: fn(*fargs, impl=mod), number=1, repeat=args.repeat))
        ref = results["python"]
        same = all(np.array_equal(np.asarray(r), np.asarray(ref)) for r in results.values())
        line = ", ".join(f"{b} {t * 1e3:.2f} ms" for b, t in times.items())
        if "cython" in times:
            line += f", speed-up x{times['python'] / times['cython']:.0f}"
        print(f"{name}: {line}, identical={same}")


if __name__ == "__main__":
    main()
