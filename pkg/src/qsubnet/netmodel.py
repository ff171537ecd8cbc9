"""Sub-network graphs, random instances, edge-parameter sampling and hop geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.special import ndtr, ndtri

from . import kernels
from .errors import (
    DegenerateDistributionError,
    InfeasibleEdgeCountError,
    InvalidGraphError,
    MissingCoordinatesError,
    ResampleLimitError,
)

MAX_RESAMPLES = 10_000
SEPARATION_THRESHOLD = 10.0


def _canonical_edges(node_count, edges):
    seen = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise InvalidGraphError(f"self-loop at node {u}")
        if not (0 <= u < node_count and 0 <= v < node_count):
            raise InvalidGraphError(f"edge ({u}, {v}) references a node outside 0..{node_count - 1}")
        pair = (u, v) if u < v else (v, u)
        if pair in seen:
            raise InvalidGraphError(f"duplicate edge {pair}")
        seen.add(pair)
    return tuple(sorted(seen))


def _csr(node_count, edges):
    nbrs = [[] for _ in range(node_count)]
    for u, v in edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    indices = []
    for u in range(node_count):
        row = sorted(nbrs[u])
        indices.extend(row)
        indptr[u + 1] = indptr[u] + len(row)
    return indptr, np.asarray(indices, dtype=np.int64)


def _center(hops):
    ecc = hops.max(axis=1)
    return int(np.argmin(ecc))  # argmin returns the first (smallest) index on ties


@dataclass(frozen=True)
class SubNetworkGraph:
    """Connected simple graph with a distinguished gateway node.

    Build instances with :meth:`build`, which canonicalises the edge list and
    picks the graph center as gateway when none is given.
    """

    id: str
    node_count: int
    edges: tuple[tuple[int, int], ...]
    gateway: int
    node_coords: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.node_count < 1:
            raise InvalidGraphError("node_count must be positive")
        canon = _canonical_edges(self.node_count, self.edges)
        if canon != tuple(self.edges):
            object.__setattr__(self, "edges", canon)
        if not 0 <= self.gateway < self.node_count:
            raise InvalidGraphError(f"gateway {self.gateway} is not a node")
        if self.node_coords is not None and len(self.node_coords) != self.node_count:
            raise InvalidGraphError("node_coords must give one position per node")
        if (self.hops[self.gateway] < 0).any():
            raise InvalidGraphError(f"graph {self.id!r} is not connected")

    @classmethod
    def build(cls, node_count, edges, gateway=None, id="G", node_coords=None):
        edges = _canonical_edges(node_count, edges)
        if gateway is None:
            indptr, indices = _csr(node_count, edges)
            hops = kernels.all_pairs_hops(indptr, indices, node_count)
            if (hops < 0).any():
                raise InvalidGraphError(f"graph {id!r} is not connected")
            gateway = _center(hops)
        if node_coords is not None:
            node_coords = tuple((float(x), float(y)) for x, y in node_coords)
        return cls(id=str(id), node_count=int(node_count), edges=edges,
                   gateway=int(gateway), node_coords=node_coords)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency as (indptr, indices) with ascending neighbour lists."""
        return _csr(self.node_count, self.edges)

    @cached_property
    def hops(self) -> np.ndarray:
        indptr, indices = self.csr
        return kernels.all_pairs_hops(indptr, indices, self.node_count)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edges)}

    def neighbors(self, u):
        indptr, indices = self.csr
        return indices[indptr[u]:indptr[u + 1]]

    def to_json_dict(self) -> dict:
        out = {
            "id": self.id,
            "node_count": self.node_count,
            "edges": [list(e) for e in self.edges],
            "gateway": self.gateway,
        }
        if self.node_coords is not None:
            out["coords"] = [list(c) for c in self.node_coords]
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "SubNetworkGraph":
        unknown = set(data) - {"id", "node_count", "edges", "gateway", "coords"}
        if unknown:
            raise InvalidGraphError(f"unknown graph keys: {sorted(unknown)}")
        try:
            return cls.build(data["node_count"], [tuple(e) for e in data["edges"]],
                             gateway=data.get("gateway"), id=data.get("id", "G"),
                             node_coords=data.get("coords"))
        except KeyError as exc:
            raise InvalidGraphError(f"graph is missing key {exc}") from None


@dataclass(frozen=True)
class EdgeState:
    fidelity: float
    probability: float

    def __post_init__(self):
        if not (0.0 <= self.fidelity <= 1.0 and 0.0 <= self.probability <= 1.0):
            raise ValueError(f"edge state outside the unit interval: {self}")


@dataclass(frozen=True)
class ParameterDistribution:
    """Edge-parameter law: a point mass or a normal truncated to ``support``."""

    kind: str
    mean: float
    std: float = 0.0
    support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("homogeneous", "truncated-normal"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        lo, hi = self.support
        if lo > hi:
            raise ValueError("support must be an ordered interval")
        if not lo <= self.mean <= hi:
            raise ValueError(f"mean {self.mean} outside support {self.support}")
        if self.std < 0:
            raise ValueError("std must be non-negative")
        if self.kind == "homogeneous" and self.std != 0:
            raise ValueError("homogeneous distribution requires std = 0")
        if self.std > 0:
            a, b = self._standard_bounds()
            if ndtr(b) - ndtr(a) <= 0.0:
                raise DegenerateDistributionError(
                    f"no probability mass of N({self.mean}, {self.std}) inside {self.support}")

    @classmethod
    def homogeneous(cls, mean, support=(0.0, 1.0)):
        return cls("homogeneous", float(mean), 0.0, tuple(support))

    @classmethod
    def truncated_normal(cls, mean, std, support=(0.0, 1.0)):
        return cls("truncated-normal", float(mean), float(std), tuple(support))

    def _standard_bounds(self):
        lo, hi = self.support
        return (lo - self.mean) / self.std, (hi - self.mean) / self.std

    def with_mean(self, mean) -> "ParameterDistribution":
        return ParameterDistribution(self.kind, float(mean), self.std, self.support)

    def quantile(self, u) -> np.ndarray:
        """Inverse CDF at uniforms ``u``.

        For fixed ``u`` the result is non-decreasing in ``mean``, which keeps
        sweeps over the mean pathwise monotone under common random numbers.
        """
        u = np.asarray(u, dtype=np.float64)
        if self.std == 0:
            return np.full(u.shape, self.mean)
        a, b = self._standard_bounds()
        # a <= 0 <= b because the mean lies in the support; invert from the
        # nearer tail to keep precision on both sides
        lo_mass, hi_mass = ndtr(a), ndtr(-b)
        width = 1.0 - lo_mass - hi_mass
        p = lo_mass + u * width
        q = hi_mass + (1.0 - u) * width
        z = np.where(p < 0.5, ndtri(p), -ndtri(q))
        return np.clip(self.mean + self.std * z, *self.support)

    def sample(self, size, rng) -> np.ndarray:
        rng = np.random.default_rng(rng)
        if self.std == 0:
            return np.full(size, self.mean)
        return self.quantile(rng.random(size))


@dataclass(frozen=True)
class SubNetworkProfile:
    """Aggregate parameters of one sub-network as seen by costs and optimiser."""

    edge_count: int
    l_max: int
    eta_bare: float

    def __post_init__(self):
        if self.edge_count < 1:
            raise ValueError("edge_count must be >= 1")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if not 0.0 < self.eta_bare < 1.0:
            raise ValueError("eta_bare must lie in (0, 1)")


@dataclass(frozen=True)
class Backbone:
    """Logical edge joining two gateways."""

    fidelity: float
    probability: float

    def __post_init__(self):
        if not 0.25 < self.fidelity <= 1.0:
            raise ValueError("backbone fidelity must lie in (1/4, 1]")
        if not 0.0 < self.probability <= 1.0:
            raise ValueError("backbone probability must lie in (0, 1]")


@dataclass(frozen=True)
class SeparationReport:
    ok: bool
    ratio: float
    intra_means: tuple[float, ...] = field(default=())
    inter_mean: float = math.nan


def _connected(node_count, pairs):
    parent = list(range(node_count))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    components = node_count
    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            components -= 1
    return components == 1


def generate_random_subnetwork(node_count: int, edge_count: int, seed: int,
                               id: str = "G", max_resamples: int = MAX_RESAMPLES) -> SubNetworkGraph:
    """Uniform G(n, m) graph conditioned on being connected.

    Draws are repeated until a connected graph appears; the gateway is the
    graph center.
    """
    max_edges = node_count * (node_count - 1) // 2
    if node_count < 1 or not (node_count - 1 <= edge_count <= max_edges) or edge_count < 1:
        raise InfeasibleEdgeCountError(
            f"{edge_count} edges cannot form a connected simple graph on {node_count} nodes")
    iu, ju = np.triu_indices(node_count, k=1)
    rng = np.random.default_rng(seed)
    for _ in range(max_resamples):
        picks = np.sort(rng.choice(max_edges, size=edge_count, replace=False))
        pairs = list(zip(iu[picks].tolist(), ju[picks].tolist()))
        if _connected(node_count, pairs):
            return SubNetworkGraph.build(node_count, pairs, id=id)
    raise ResampleLimitError(
        f"no connected G({node_count}, {edge_count}) sample after {max_resamples} draws")


def select_gateway(graph: SubNetworkGraph) -> int:
    """Node of minimum eccentricity; smallest index wins ties."""
    return _center(graph.hops)


def shortest_graph_path(graph: SubNetworkGraph, u: int, v: int) -> list[int]:
    """Hop-minimal path from u to v, lexicographically smallest among ties."""
    n = graph.node_count
    if not (0 <= u < n and 0 <= v < n):
        raise InvalidGraphError(f"nodes ({u}, {v}) not in graph {graph.id!r}")
    to_v = graph.hops[:, v]
    if to_v[u] < 0:
        raise InvalidGraphError(f"no path between {u} and {v}")
    path = [u]
    cur = u
    while cur != v:
        want = to_v[cur] - 1
        for w in graph.neighbors(cur):
            if to_v[w] == want:
                cur = int(w)
                break
        path.append(cur)
    return path


def gateway_eccentricity(graph: SubNetworkGraph) -> int:
    """Largest hop count from any node to the gateway (``l_max``)."""
    return int(graph.hops[graph.gateway].max())


def profile_of(graph: SubNetworkGraph, eta_bare: float) -> SubNetworkProfile:
    return SubNetworkProfile(len(graph.edges), max(gateway_eccentricity(graph), 1), eta_bare)


def sample_edge_arrays(graph: SubNetworkGraph, fidelity_dist: ParameterDistribution,
                       prob_dist: ParameterDistribution, seed) -> tuple[np.ndarray, np.ndarray]:
    """Fidelity and probability arrays aligned with ``graph.edges``.

    Fidelities are drawn before probabilities from a single stream.
    """
    for dist, name in ((fidelity_dist, "fidelity"), (prob_dist, "probability")):
        lo, hi = dist.support
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"{name} support must lie inside [0, 1]")
    rng = np.random.default_rng(seed)
    m = len(graph.edges)
    u = rng.random((2, m))
    return fidelity_dist.quantile(u[0]), prob_dist.quantile(u[1])


def sample_edge_states(graph: SubNetworkGraph, fidelity_dist: ParameterDistribution,
                       prob_dist: ParameterDistribution, seed) -> dict[tuple[int, int], EdgeState]:
    fid, prob = sample_edge_arrays(graph, fidelity_dist, prob_dist, seed)
    return {e: EdgeState(float(f), float(p)) for e, f, p in zip(graph.edges, fid, prob)}


def validate_separation(networks: Sequence[SubNetworkGraph],
                        threshold: float = SEPARATION_THRESHOLD) -> SeparationReport:
    """Check that intra-network distances are much smaller than inter-network ones.

    ``ratio`` is the smallest mean inter-network distance over the largest
    mean intra-network distance; the check passes when ``ratio >= threshold``.
    """
    coords = []
    for g in networks:
        if g.node_coords is None:
            raise MissingCoordinatesError(f"network {g.id!r} has no node coordinates")
        coords.append(np.asarray(g.node_coords, dtype=np.float64))
    intra = tuple(float(pdist(c).mean()) if len(c) > 1 else 0.0 for c in coords)
    inter = min(float(cdist(coords[i], coords[j]).mean())
                for i in range(len(coords)) for j in range(i + 1, len(coords)))
    worst = max(intra)
    ratio = math.inf if worst == 0 else inter / worst
    return SeparationReport(ok=worst <= inter / threshold, ratio=ratio,
                            intra_means=intra, inter_mean=inter)
