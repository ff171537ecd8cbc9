import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsubnet.errors import (DegenerateDistributionError, InfeasibleEdgeCountError, InvalidGraphError,
                            MissingCoordinatesError)
from qsubnet.netmodel import (ParameterDistribution, SubNetworkGraph, gateway_eccentricity,
                              generate_random_subnetwork, profile_of, sample_edge_arrays,
                              sample_edge_states, select_gateway, shortest_graph_path,
                              validate_separation)


def path3():
    return SubNetworkGraph.build(3, [(0, 1), (1, 2)])


def star(hub=2, n=5):
    return SubNetworkGraph.build(n, [(hub, v) for v in range(n) if v != hub])


def test_triangle_generation():
    for seed in range(5):
        g = generate_random_subnetwork(3, 3, seed)
        assert g.edges == ((0, 1), (0, 2), (1, 2))


def test_single_edge():
    g = generate_random_subnetwork(2, 1, 11)
    assert g.edges == ((0, 1),)


def test_large_instance_invariants():
    g = generate_random_subnetwork(60, 1000, seed=7)
    assert g.node_count == 60 and len(g.edges) == 1000
    assert len(set(g.edges)) == 1000
    assert all(u < v for u, v in g.edges)
    ref = nx.Graph(list(g.edges))
    assert nx.is_connected(ref) and ref.number_of_nodes() == 60


def test_generation_is_seeded():
    a = generate_random_subnetwork(30, 60, seed=3)
    b = generate_random_subnetwork(30, 60, seed=3)
    c = generate_random_subnetwork(30, 60, seed=4)
    assert a.edges == b.edges
    assert a.edges != c.edges


@pytest.mark.parametrize("n,m", [(3, 1), (3, 4), (0, 0), (5, 3)])
def test_edge_count_out_of_range(n, m):
    with pytest.raises(InfeasibleEdgeCountError):
        generate_random_subnetwork(n, m, 0)


def test_invalid_graphs_rejected():
    with pytest.raises(InvalidGraphError):
        SubNetworkGraph.build(3, [(0, 1)])  # disconnected
    with pytest.raises(InvalidGraphError):
        SubNetworkGraph.build(2, [(0, 0), (0, 1)])
    with pytest.raises(InvalidGraphError):
        SubNetworkGraph.build(2, [(0, 1), (1, 0)])
    with pytest.raises(InvalidGraphError):
        SubNetworkGraph.build(3, [(0, 1), (1, 2)], gateway=7)


def test_gateway_selection():
    assert select_gateway(path3()) == 1
    assert select_gateway(star(hub=2)) == 2
    assert select_gateway(SubNetworkGraph.build(3, [(0, 1), (1, 2), (0, 2)])) == 0
    assert path3().gateway == 1


def test_shortest_paths():
    tri = SubNetworkGraph.build(3, [(0, 1), (1, 2), (0, 2)])
    assert shortest_graph_path(tri, 0, 1) == [0, 1]
    assert shortest_graph_path(path3(), 0, 2) == [0, 1, 2]
    cyc = SubNetworkGraph.build(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    assert shortest_graph_path(cyc, 0, 2) == [0, 1, 2]
    assert shortest_graph_path(cyc, 2, 2) == [2]


def test_shortest_path_is_lexicographic_minimum():
    g = generate_random_subnetwork(25, 40, seed=5)
    ref = nx.Graph(list(g.edges))
    for u in range(0, 25, 4):
        for v in range(1, 25, 5):
            best = min(nx.all_shortest_paths(ref, u, v))
            assert shortest_graph_path(g, u, v) == best


def test_eccentricity():
    assert gateway_eccentricity(SubNetworkGraph.build(3, [(0, 1), (1, 2)], gateway=0)) == 2
    assert gateway_eccentricity(star()) == 1
    g = generate_random_subnetwork(60, 1000, seed=7)
    ref = nx.single_source_shortest_path_length(nx.Graph(list(g.edges)), g.gateway)
    assert gateway_eccentricity(g) == max(ref.values())
    assert profile_of(g, 0.1).l_max == max(ref.values())


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 25), st.data())
def test_hops_match_networkx(n, data):
    max_m = n * (n - 1) // 2
    m = data.draw(st.integers(n - 1, max_m))
    g = generate_random_subnetwork(n, m, data.draw(st.integers(0, 2 ** 32)))
    ref = dict(nx.all_pairs_shortest_path_length(nx.Graph(list(g.edges))))
    for u in range(n):
        for v in range(n):
            assert g.hops[u, v] == ref[u][v]


def test_json_round_trip():
    g = SubNetworkGraph.build(3, [(1, 2), (0, 1)], id="A", node_coords=[(0, 0), (1, 0), (2, 0)])
    assert SubNetworkGraph.from_json_dict(g.to_json_dict()) == g
    with pytest.raises(InvalidGraphError):
        SubNetworkGraph.from_json_dict({**g.to_json_dict(), "extra": 1})


def test_homogeneous_sampling():
    g = generate_random_subnetwork(10, 20, seed=1)
    states = sample_edge_states(g, ParameterDistribution.homogeneous(0.95),
                                ParameterDistribution.homogeneous(0.5), seed=0)
    assert set(states) == set(g.edges)
    assert all(s.fidelity == 0.95 and s.probability == 0.5 for s in states.values())


def test_truncated_normal_mean():
    d = ParameterDistribution.truncated_normal(0.9, 0.05)
    x = d.sample(100_000, np.random.default_rng(0))
    assert abs(x.mean() - 0.9) < 0.005
    assert x.min() >= 0.0 and x.max() <= 1.0


def test_quantile_matches_scipy():
    from scipy.stats import truncnorm
    d = ParameterDistribution.truncated_normal(0.93, 0.05)
    u = np.linspace(0.001, 0.999, 101)
    a, b = (0 - 0.93) / 0.05, (1 - 0.93) / 0.05
    ref = truncnorm.ppf(u, a, b, loc=0.93, scale=0.05)
    np.testing.assert_allclose(d.quantile(u), ref, rtol=0, atol=1e-12)


def test_quantile_monotone_in_mean():
    u = np.random.default_rng(1).random(500)
    prev = None
    for mean in np.linspace(0.9, 1.0, 51):
        cur = ParameterDistribution.truncated_normal(mean, 0.05).quantile(u)
        if prev is not None:
            assert np.all(cur >= prev)
        prev = cur


def test_zero_std_truncated_is_homogeneous():
    g = generate_random_subnetwork(8, 12, seed=2)
    p = ParameterDistribution.homogeneous(0.5)
    a = sample_edge_arrays(g, ParameterDistribution.truncated_normal(0.9, 0.0), p, seed=4)
    b = sample_edge_arrays(g, ParameterDistribution.homogeneous(0.9), p, seed=4)
    np.testing.assert_array_equal(a[0], b[0])


def test_degenerate_distribution():
    with pytest.raises(DegenerateDistributionError):
        ParameterDistribution.truncated_normal(0.5, 1e-300, support=(0.5, 0.5))
    with pytest.raises(ValueError):
        ParameterDistribution.homogeneous(1.5)


def _cluster(center, n=4, spread=0.5):
    return [(center[0] + spread * np.cos(k), center[1] + spread * np.sin(k)) for k in range(n)]


def _ring(n, coords, id):
    return SubNetworkGraph.build(n, [(i, (i + 1) % n) if i < n - 1 else (0, n - 1) for i in range(n)],
                                 id=id, node_coords=coords)


def test_separation():
    a = _ring(4, _cluster((0, 0)), "A")
    b = _ring(4, _cluster((1000, 0)), "B")
    rep = validate_separation([a, b])
    assert rep.ok and rep.ratio > 500
    c = _ring(4, _cluster((0.2, 0)), "C")
    assert not validate_separation([a, c]).ok


def test_separation_boundary_inclusive():
    a = SubNetworkGraph.build(2, [(0, 1)], id="A", node_coords=[(0, 0), (1, 0)])
    b = SubNetworkGraph.build(2, [(0, 1)], id="B", node_coords=[(10.5, 0), (10.5, 0)])
    # intra mean 1 for A, 0 for B; inter mean (10.5 + 9.5) / 2 = 10
    rep = validate_separation([a, b], threshold=10.0)
    assert rep.ratio == 10.0 and rep.ok


def test_separation_needs_coordinates():
    with pytest.raises(MissingCoordinatesError):
        validate_separation([path3(), path3()])
