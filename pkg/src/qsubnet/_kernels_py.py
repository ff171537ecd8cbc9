"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``."""

from collections import deque

import numpy as np


def all_pairs_hops(indptr, indices, n):
    """Hop distance matrix by BFS from every node; -1 marks unreachable pairs."""
    indptr = [int(v) for v in indptr]
    indices = [int(v) for v in indices]
    dist = np.full((n, n), -1, dtype=np.int32)
    for s in range(n):
        row = [-1] * n
        row[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if row[w] < 0:
                    row[w] = row[u] + 1
                    queue.append(w)
        dist[s] = row
    return dist


def path_products(path_indptr, path_edges, edge_x, edge_eta):
    """Per-path products of the Werner parameter and the success probability."""
    path_indptr = [int(v) for v in path_indptr]
    path_edges = [int(v) for v in path_edges]
    edge_x = [float(v) for v in edge_x]
    edge_eta = [float(v) for v in edge_eta]
    n_paths = len(path_indptr) - 1
    px = np.empty(n_paths, dtype=np.float64)
    pe = np.empty(n_paths, dtype=np.float64)
    for d in range(n_paths):
        x = 1.0
        eta = 1.0
        for k in range(path_indptr[d], path_indptr[d + 1]):
            e = path_edges[k]
            x = x * edge_x[e]
            eta = eta * edge_eta[e]
        px[d] = x
        pe[d] = eta
    return px, pe
