# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for graph traversal and path products.

Must stay numerically identical to :mod:`qsubnet._kernels_py`: products are
left folds in path order so both backends round the same way.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def all_pairs_hops(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices, Py_ssize_t n):
    """Hop distance matrix by BFS from every node; -1 marks unreachable pairs."""
    dist_arr = np.full((n, n), -1, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] dist = dist_arr
    queue_arr = np.empty(max(n, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef Py_ssize_t s, head, tail, u, k, w
    with nogil:
        for s in range(n):
            dist[s, s] = 0
            queue[0] = s
            head = 0
            tail = 1
            while head < tail:
                u = queue[head]
                head += 1
                for k in range(indptr[u], indptr[u + 1]):
                    w = indices[k]
                    if dist[s, w] < 0:
                        dist[s, w] = dist[s, u] + 1
                        queue[tail] = w
                        tail += 1
    return dist_arr


def path_products(
    const cnp.int64_t[::1] path_indptr,
    const cnp.int64_t[::1] path_edges,
    const double[::1] edge_x,
    const double[::1] edge_eta,
):
    """Per-path products of the Werner parameter and the success probability."""
    cdef Py_ssize_t n_paths = path_indptr.shape[0] - 1
    px_arr = np.empty(n_paths, dtype=np.float64)
    pe_arr = np.empty(n_paths, dtype=np.float64)
    cdef double[::1] px = px_arr
    cdef double[::1] pe = pe_arr
    cdef Py_ssize_t d, k, e
    cdef double x, eta
    with nogil:
        for d in range(n_paths):
            x = 1.0
            eta = 1.0
            for k in range(path_indptr[d], path_indptr[d + 1]):
                e = path_edges[k]
                x = x * edge_x[e]
                eta = eta * edge_eta[e]
            px[d] = x
            pe[d] = eta
    return px_arr, pe_arr
