"""Monte Carlo satisfiability of random connection demands.

Intra-network demands follow the lexicographically smallest shortest path.
Inter-network demands run source -> own gateway -> backbone -> remote
gateway -> destination. Path products are evaluated in batches by
:mod:`qsubnet.kernels`.

Seeding: a work unit ``(r index, sample index)`` owns two streams,
``SeedSequence(master_seed, spawn_key=(ri, si, 0))`` for demands and
``(ri, si, 1)`` for edge uniforms. The fidelity grid index is deliberately
not part of the key, so every grid point of a unit sees the same demands
and the same uniforms (common random numbers) and P_SAT curves are pathwise
monotone.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .costs import TaskThresholds
from .entanglement import KeyRateParams, chain_fidelity, chain_probability, secure_key_fraction, secure_key_rate
from .netmodel import Backbone, EdgeState, ParameterDistribution, SubNetworkGraph, shortest_graph_path

THRESHOLD = "threshold"
KEYRATE = "keyrate"
INTRA = "intra"
INTER = "inter"


@dataclass(frozen=True)
class Demand:
    source: tuple[int, int]
    destination: tuple[int, int]
    kind: str

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError("demand endpoints must differ")
        expected = INTER if self.source[0] != self.destination[0] else INTRA
        if self.kind != expected:
            raise ValueError(f"demand between networks {self.source[0]} and "
                             f"{self.destination[0]} must be {expected}")


@dataclass(frozen=True)
class SatisfiabilityConfig:
    networks: tuple
    backbone: Backbone
    thresholds: TaskThresholds
    mode: str = THRESHOLD
    demand_count: int = 200
    r: float = 0.5
    config_samples: int = 20
    master_seed: int = 0
    fidelity_dist: ParameterDistribution = ParameterDistribution.homogeneous(0.95)
    probability_dist: ParameterDistribution = ParameterDistribution.homogeneous(0.5)

    def __post_init__(self):
        object.__setattr__(self, "networks", tuple(self.networks))
        if not self.networks:
            raise ValueError("at least one network is required")
        if self.mode not in (THRESHOLD, KEYRATE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == KEYRATE and not self.thresholds.has_rate:
            raise ValueError("keyrate mode needs key_rate and rep_rate thresholds")
        if self.mode == THRESHOLD and not self.thresholds.has_pair:
            raise ValueError("threshold mode needs fidelity and probability thresholds")
        if self.demand_count < 1 or self.config_samples < 1:
            raise ValueError("demand_count and config_samples must be positive")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("r must lie in [0, 1]")


@dataclass(frozen=True)
class SweepRow:
    mean_fidelity: float
    r: float
    mean_psat: float
    std_psat: float
    samples: int


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def curve(self, r: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(grid, mean, std) arrays for one demand ratio."""
        sel = [row for row in self.rows if row.r == r]
        return (np.array([s.mean_fidelity for s in sel]), np.array([s.mean_psat for s in sel]),
                np.array([s.std_psat for s in sel]))


# ---------------------------------------------------------------------------
# Demands


def _split_intra(networks, n_intra):
    n = len(networks)
    counts = [n_intra // n] * n
    # remainder goes to the larger networks first
    order = sorted(range(n), key=lambda i: (-networks[i].node_count, i))
    for i in order[: n_intra % n]:
        counts[i] += 1
    return counts


def _draw_demands(networks, demand_count, r, rng):
    """Demand endpoints as four int arrays (src_net, src_node, dst_net, dst_node)."""
    n_inter = int(math.floor(r * demand_count + 0.5))
    n_intra = demand_count - n_inter
    nets = len(networks)
    if n_inter and nets < 2:
        raise ValueError("inter-network demands need at least two networks")
    sizes = np.array([g.node_count for g in networks])
    src_net = rng.integers(nets, size=n_inter)
    dst_net = (src_net + 1 + rng.integers(max(nets - 1, 1), size=n_inter)) % nets
    src_node = np.floor(rng.random(n_inter) * sizes[src_net]).astype(np.int64)
    dst_node = np.floor(rng.random(n_inter) * sizes[dst_net]).astype(np.int64)
    parts = [(src_net, src_node, dst_net, dst_node)]
    for k, count in enumerate(_split_intra(networks, n_intra)):
        if count == 0:
            continue
        size = networks[k].node_count
        if size < 2:
            raise ValueError(f"network {networks[k].id!r} has a single node; no intra demand possible")
        s = rng.integers(size, size=count)
        d = rng.integers(size - 1, size=count)
        d = d + (d >= s)
        net = np.full(count, k)
        parts.append((net, s, net, d))
    return tuple(np.concatenate([p[i] for p in parts]).astype(np.int64) for i in range(4))


def generate_demands(config: SatisfiabilityConfig, seed, r: Optional[float] = None) -> list[Demand]:
    """``round(r * count)`` inter demands (halves round up), the rest intra."""
    rng = np.random.default_rng(seed)
    arrays = _draw_demands(config.networks, config.demand_count, config.r if r is None else r, rng)
    return [Demand((int(a), int(b)), (int(c), int(d)), INTER if a != c else INTRA)
            for a, b, c, d in zip(*arrays)]


# ---------------------------------------------------------------------------
# Paths


class _Routing:
    """Global edge numbering and cached per-network paths.

    Edges of network k occupy ``offsets[k] : offsets[k + 1]``; the backbone is
    the extra edge ``offsets[-1]``.
    """

    def __init__(self, networks: Sequence[SubNetworkGraph]):
        self.networks = tuple(networks)
        self.offsets = np.cumsum([0] + [len(g.edges) for g in networks])
        self.backbone_edge = int(self.offsets[-1])
        self._paths = {}

    def leg(self, net, u, v):
        key = (net, u, v)
        edges = self._paths.get(key)
        if edges is None:
            g = self.networks[net]
            nodes = shortest_graph_path(g, u, v)
            idx = g.edge_index
            off = int(self.offsets[net])
            edges = [off + idx[(a, b) if a < b else (b, a)] for a, b in zip(nodes, nodes[1:])]
            self._paths[key] = edges
        return edges

    def path(self, sn, su, dn, du):
        if sn == dn:
            return self.leg(sn, su, du)
        return (self.leg(sn, su, self.networks[sn].gateway) + [self.backbone_edge]
                + self.leg(dn, self.networks[dn].gateway, du))

    def csr(self, arrays):
        indptr = [0]
        flat = []
        for sn, su, dn, du in zip(*(a.tolist() for a in arrays)):
            flat.extend(self.path(sn, su, dn, du))
            indptr.append(len(flat))
        return np.asarray(indptr, dtype=np.int64), np.asarray(flat, dtype=np.int64)


def _satisfied(fidelity, probability, thresholds: TaskThresholds, mode):
    if mode == THRESHOLD:
        return (fidelity >= thresholds.fidelity) & (probability >= thresholds.probability)
    rate = thresholds.rep_rate * probability * secure_key_fraction(fidelity)
    return rate >= thresholds.key_rate


def _batch(routing_csr, edge_f, edge_p, backbone, thresholds, mode):
    x = (4.0 * np.append(edge_f, backbone.fidelity) - 1.0) / 3.0
    eta = np.append(edge_p, backbone.probability)
    px, pe = kernels.path_products(routing_csr[0], routing_csr[1], x, eta)
    fid = 0.25 + 0.75 * px
    return fid, pe, _satisfied(fid, pe, thresholds, mode)


def _flatten_states(networks, edge_states):
    f = np.concatenate([[edge_states[k][e].fidelity for e in g.edges] for k, g in enumerate(networks)])
    p = np.concatenate([[edge_states[k][e].probability for e in g.edges] for k, g in enumerate(networks)])
    return f, p


# ---------------------------------------------------------------------------
# Public evaluation


def demand_details(demand: Demand, networks: Sequence[SubNetworkGraph],
                   edge_states: Sequence[dict], backbone: Backbone,
                   thresholds: TaskThresholds, mode: str = THRESHOLD) -> dict:
    """Route one demand and report path, end-to-end parameters and verdict."""
    (sn, su), (dn, du) = demand.source, demand.destination
    if sn == dn:
        nodes = shortest_graph_path(networks[sn], su, du)
        legs = [(sn, nodes)]
        route = [[sn, v] for v in nodes]
    else:
        a = shortest_graph_path(networks[sn], su, networks[sn].gateway)
        b = shortest_graph_path(networks[dn], networks[dn].gateway, du)
        legs = [(sn, a), None, (dn, b)]
        route = [[sn, v] for v in a] + [[dn, v] for v in b]
    fids, probs = [], []
    for leg in legs:
        if leg is None:
            fids.append(backbone.fidelity)
            probs.append(backbone.probability)
            continue
        net, nodes = leg
        for u, v in zip(nodes, nodes[1:]):
            st: EdgeState = edge_states[net][(u, v) if u < v else (v, u)]
            fids.append(st.fidelity)
            probs.append(st.probability)
    fid = chain_fidelity(fids)
    prob = chain_probability(probs)
    rate = None
    if thresholds.has_rate:
        rate = secure_key_rate(KeyRateParams(thresholds.rep_rate, prob), fid)
    if mode == THRESHOLD:
        ok = fid >= thresholds.fidelity and prob >= thresholds.probability
    else:
        ok = rate >= thresholds.key_rate
    return {
        "source": list(demand.source),
        "destination": list(demand.destination),
        "kind": demand.kind,
        "path": route,
        "hops": len(fids),
        "fidelity": fid,
        "probability": prob,
        "key_rate": rate,
        "satisfied": bool(ok),
    }


def evaluate_demand(demand: Demand, networks: Sequence[SubNetworkGraph], edge_states: Sequence[dict],
                    backbone: Backbone, thresholds: TaskThresholds, mode: str = THRESHOLD) -> bool:
    return demand_details(demand, networks, edge_states, backbone, thresholds, mode)["satisfied"]


def p_sat(config: SatisfiabilityConfig, edge_states: Sequence[dict], demands: Sequence[Demand]) -> float:
    """Fraction of ``demands`` satisfied on one sampled configuration."""
    if not demands:
        raise ValueError("p_sat needs at least one demand")
    routing = _Routing(config.networks)
    arrays = tuple(np.array(col, dtype=np.int64) for col in zip(
        *[(d.source[0], d.source[1], d.destination[0], d.destination[1]) for d in demands]))
    f, p = _flatten_states(config.networks, edge_states)
    _, _, ok = _batch(routing.csr(arrays), f, p, config.backbone, config.thresholds, config.mode)
    return float(np.count_nonzero(ok)) / len(demands)


def _unit_streams(master_seed, ri, si):
    demand_rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(ri, si, 0)))
    edge_rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(ri, si, 1)))
    return demand_rng, edge_rng


def _edge_uniforms(networks, edge_rng):
    return [edge_rng.random((2, len(g.edges))) for g in networks]


def _edge_values(uniforms, fidelity_dist, probability_dist):
    f = np.concatenate([fidelity_dist.quantile(u[0]) for u in uniforms])
    p = np.concatenate([probability_dist.quantile(u[1]) for u in uniforms])
    return f, p


def _run_unit(config, routing, grid, r, ri, si):
    demand_rng, edge_rng = _unit_streams(config.master_seed, ri, si)
    arrays = _draw_demands(config.networks, config.demand_count, r, demand_rng)
    csr = routing.csr(arrays)
    uniforms = _edge_uniforms(config.networks, edge_rng)
    out = np.empty(len(grid))
    for gi, mean in enumerate(grid):
        f, p = _edge_values(uniforms, config.fidelity_dist.with_mean(mean), config.probability_dist)
        _, _, ok = _batch(csr, f, p, config.backbone, config.thresholds, config.mode)
        out[gi] = np.count_nonzero(ok) / config.demand_count
    return out


def sweep_transition(config: SatisfiabilityConfig, fidelity_grid: Sequence[float],
                     r_list: Sequence[float], threads: int = 1) -> SweepResult:
    """Mean and spread of P_SAT over ``config_samples`` configurations per (mean, r).

    Rows come out grid-major, then in ``r_list`` order. Results do not depend
    on ``threads``.
    """
    grid = [float(v) for v in fidelity_grid]
    r_list = [float(v) for v in r_list]
    routing = _Routing(config.networks)
    # paths are cached lazily; fill the cache before threads share it
    for k, g in enumerate(config.networks):
        for u in range(g.node_count):
            routing.leg(k, u, g.gateway)
            routing.leg(k, g.gateway, u)
    units = [(ri, si) for ri in range(len(r_list)) for si in range(config.config_samples)]

    def work(unit):
        ri, si = unit
        return _run_unit(config, routing, grid, r_list[ri], ri, si)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, units))
    else:
        results = [work(u) for u in units]
    table = np.array(results).reshape(len(r_list), config.config_samples, len(grid))
    ddof = 1 if config.config_samples > 1 else 0
    rows = []
    for gi, mean in enumerate(grid):
        for ri, r in enumerate(r_list):
            vals = table[ri, :, gi]
            rows.append(SweepRow(mean, r, float(vals.mean()), float(vals.std(ddof=ddof)),
                                 config.config_samples))
    return SweepResult(rows)


def simulate(config: SatisfiabilityConfig) -> dict:
    """One sampled configuration with a per-demand breakdown."""
    demand_rng, edge_rng = _unit_streams(config.master_seed, 0, 0)
    arrays = _draw_demands(config.networks, config.demand_count, config.r, demand_rng)
    f, p = _edge_values(_edge_uniforms(config.networks, edge_rng),
                        config.fidelity_dist, config.probability_dist)
    states = []
    start = 0
    for g in config.networks:
        stop = start + len(g.edges)
        states.append({e: EdgeState(float(a), float(b))
                       for e, a, b in zip(g.edges, f[start:stop], p[start:stop])})
        start = stop
    demands = [Demand((int(a), int(b)), (int(c), int(d)), INTER if a != c else INTRA)
               for a, b, c, d in zip(*arrays)]
    details = [demand_details(d, config.networks, states, config.backbone, config.thresholds, config.mode)
               for d in demands]
    psat = sum(d["satisfied"] for d in details) / len(details)
    return {"psat": psat, "demands": details}
