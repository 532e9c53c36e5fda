"""Benchmark the jitted graph kernels against the pure-Python/NumPy fallback.

The two hot kernels are the degree-preserving rewiring (run N times per
standardized-modularity report) and the edge-list modularity evaluation.
Both paths produce bit-identical output; this script measures the speed
difference and verifies the equality on the benchmark graph.

Usage:
    python benchmarks/bench_kernels.py [--nodes 400] [--prob 0.04] [--samples 30]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from falcon import accel
from falcon.fixtures import random_signed_graph


def run(nodes: int, prob: float, samples: int) -> None:
    graph = random_signed_graph(nodes, prob, seed=1, weights=(-2.0, 1.0, 2.0))
    u, v, w = graph.edge_arrays()
    m = len(u)
    comm = np.array([i % 2 for i in range(graph.n_nodes)], dtype=np.int64)
    print(f"graph: {graph.n_nodes} nodes, {m} edges; "
          f"{samples} null samples of {10 * m} swaps each")

    paths = accel.available_paths()
    if "numba" in paths:
        # warm the JIT outside the timed region
        mod_k, rew_k = paths["numba"]
        rew_k(u, v, w, graph.n_nodes, 10, 100, 0)
        mod_k(u, v, w, comm, graph.n_nodes, 2)

    results = {}
    timings = {}
    for name, (mod_k, rew_k) in sorted(paths.items()):
        start = time.perf_counter()
        qs = []
        for seed in range(samples):
            u2, v2, w2, _ = rew_k(u, v, w, graph.n_nodes, 10 * m, 100 * m, seed)
            qs.append(mod_k(u2, v2, w2, comm, graph.n_nodes, 2))
        timings[name] = time.perf_counter() - start
        results[name] = qs
        print(f"{name:>7}: {timings[name]:8.3f} s "
              f"({timings[name] / samples * 1e3:7.2f} ms/sample)")

    if len(results) == 2:
        identical = results["python"] == results["numba"]
        print(f"outputs identical across paths: {identical}")
        if timings["numba"] > 0:
            print(f"speedup: {timings['python'] / timings['numba']:.1f}x")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=400)
    parser.add_argument("--prob", type=float, default=0.04)
    parser.add_argument("--samples", type=int, default=30)
    args = parser.parse_args()
    run(args.nodes, args.prob, args.samples)
