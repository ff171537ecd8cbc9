"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when
``QSUBNET_PURE_PYTHON=1`` is set, the pure-Python twins are used. Both
backends return bit-identical results.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("QSUBNET_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"



def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def all_pairs_hops(indptr, indices, n, impl=None):
    """Hop distance matrix (int32, -1 for unreachable) of a CSR graph."""
    return (impl or _impl).all_pairs_hops(_i64(indptr), _i64(indices), int(n))


def path_products(path_indptr, path_edges, edge_x, edge_eta, impl=None):
    """Left-fold products of Werner parameters and probabilities per path."""
    return (impl or _impl).path_products(_i64(path_indptr), _i64(path_edges), _f64(edge_x),
                                         _f64(edge_eta))


def backends():
    """Mapping of every importable backend name to its module."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
