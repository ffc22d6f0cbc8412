import math
import pickle

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import naive_bfs, random_graphs, to_adj
from opinion_forge.errors import EmptySourceSetError, GraphLoadError, NodeOutOfRangeError, SelfLoopError
from opinion_forge.graph import (
    UNREACHED,
    build_graph,
    disjoint_union,
    edge_count_between,
    eccentricity_of_set,
    format_edge_list,
    graph_stats,
    layers_from,
    parse_edge_list,
    read_edge_list,
    write_edge_list,
)
from opinion_forge.generators import cycle_power, star

TRIANGLE = [(0, 1), (1, 2), (0, 2)]


def test_triangle():
    g = build_graph(3, TRIANGLE)
    assert g.m == 3
    assert g.adjacency == ((1, 2), (0, 2), (0, 1))


def test_isolated_pair():
    g = build_graph(2, [])
    assert g.m == 0 and g.degrees.tolist() == [0, 0]


def test_self_loop_rejected():
    with pytest.raises(SelfLoopError):
        build_graph(2, [(0, 0)])


def test_out_of_range_rejected():
    with pytest.raises(NodeOutOfRangeError):
        build_graph(2, [(0, 2)])


def test_duplicates_collapse():
    g = build_graph(3, [(0, 1), (1, 0), (0, 1), (2, 1)])
    assert g.m == 2
    assert g.adjacency == ((1,), (0, 2), (1,))


def test_immutable_and_picklable():
    g = build_graph(3, TRIANGLE)
    with pytest.raises(AttributeError):
        g.n = 4
    with pytest.raises(ValueError):
        g.indices[0] = 2
    assert pickle.loads(pickle.dumps(g)) == g


def test_layers_path():
    g = build_graph(4, [(0, 1), (1, 2), (2, 3)])
    dec = layers_from(g, [0])
    assert [layer.tolist() for layer in dec.layers] == [[0], [1], [2], [3]]


def test_layers_sources_are_layer_zero():
    dec = layers_from(build_graph(3, TRIANGLE), {0, 1, 2})
    assert [layer.tolist() for layer in dec.layers] == [[0, 1, 2]]


def test_layers_star_from_leaf():
    dec = layers_from(star(5), {1})
    assert [layer.tolist() for layer in dec.layers] == [[1], [0], [2, 3, 4]]


def test_layers_empty_sources():
    with pytest.raises(EmptySourceSetError):
        layers_from(build_graph(3, TRIANGLE), [])


def test_unreachable_distance():
    dec = layers_from(build_graph(3, [(0, 1)]), [0])
    assert dec.dist[2] == UNREACHED and dec.distance(2) == math.inf
    assert eccentricity_of_set(build_graph(3, [(0, 1)]), [0]) is None


def test_edge_count_examples():
    g = build_graph(3, TRIANGLE)
    assert edge_count_between(g, {0}, {1, 2}) == 2
    assert edge_count_between(g, set(), {1, 2}) == 0
    assert edge_count_between(g, {0, 1, 2}, {0, 1, 2}) == 6


def test_stats_examples():
    s = graph_stats(star(6))
    assert (s.max_degree, s.min_degree, s.diameter, s.connected) == (5, 1, 2, True)
    c8 = graph_stats(cycle_power(8, 1))
    assert (c8.max_degree, c8.min_degree, c8.diameter) == (2, 2, 4)
    iso = graph_stats(build_graph(2, []))
    assert iso.diameter == math.inf and not iso.connected
    assert iso.to_dict()["diameter"] is None


@given(random_graphs())
def test_graph_invariants(data):
    n, edges = data
    g = build_graph(n, edges)
    for v in range(n):
        nb = g.adjacency[v]
        assert list(nb) == sorted(set(nb)) and v not in nb
        for u in nb:
            assert v in g.adjacency[u]
    assert int(g.degrees.sum()) == 2 * g.m
    assert g.m == len(set(edges))


@given(random_graphs(), st.data())
def test_layers_match_naive_bfs(data, draw):
    n, edges = data
    g = build_graph(n, edges)
    sources = draw.draw(st.sets(st.integers(0, n - 1), min_size=1))
    dec = layers_from(g, sources)
    ref = naive_bfs(to_adj(n, edges), sorted(sources))
    for v in range(n):
        assert dec.dist[v] == ref.get(v, UNREACHED)
    seen = set()
    assert set(dec.layers[0].tolist()) == set(sources)
    for t, layer in enumerate(dec.layers):
        members = set(layer.tolist())
        assert not members & seen
        seen |= members
        if t >= 1:
            for v in members:
                ds = [dec.dist[u] for u in g.adjacency[v]]
                assert t - 1 in ds and min(ds) == t - 1
    assert seen == set(ref)


@given(random_graphs(), st.data())
def test_edge_count_symmetric(data, draw):
    n, edges = data
    g = build_graph(n, edges)
    S = draw.draw(st.sets(st.integers(0, n - 1)))
    S2 = draw.draw(st.sets(st.integers(0, n - 1)))
    expected = sum(1 for v in S for u in S2 if g.has_edge(v, u))
    assert edge_count_between(g, S, S2) == edge_count_between(g, S2, S) == expected


@given(random_graphs(min_n=2))
def test_neighborhood_growth_lower_bound(data):
    # |N_hat_t(v)| >= (t-1) * min_degree / 3 whenever N_t(v) is nonempty
    n, edges = data
    g = build_graph(n, edges)
    for v in range(n):
        dec = layers_from(g, [v])
        for t in range(len(dec.layers)):
            assert dec.ball(t).size >= (t - 1) * g.min_degree / 3


@given(random_graphs(min_n=1, max_n=12))
def test_stats_match_networkx(data):
    n, edges = data
    g = build_graph(n, edges)
    h = nx.Graph()
    h.add_nodes_from(range(n))
    h.add_edges_from(edges)
    s = graph_stats(g)
    assert s.connected == nx.is_connected(h)
    if s.connected:
        assert s.diameter == nx.diameter(h) and s.diameter < max(n, 1)
    assert s.min_degree <= s.max_degree < max(n, 1)


def test_edge_list_round_trip(tmp_path):
    g = disjoint_union([star(4), build_graph(3, TRIANGLE)])
    path = tmp_path / "g.el"
    write_edge_list(g, path, comments=["hello"])
    text = path.read_text()
    assert text.startswith("# hello\n7 6\n")
    assert read_edge_list(path) == g


@pytest.mark.parametrize("text", ["", "3\n", "2 1\n0 1\n1 0\n", "2 1\n0 x\n", "2 1\n0 0\n", "2 1\n0 5\n"])
def test_malformed_edge_lists(text):
    with pytest.raises(GraphLoadError):
        parse_edge_list(text)


def test_missing_file():
    with pytest.raises(GraphLoadError):
        read_edge_list("/nonexistent/graph.el")


def test_comments_ignored():
    g = parse_edge_list("# c\n3 2\n# mid\n0 1\n\n1 2\n")
    assert g.m == 2


def test_gather_large_degrees():
    g = star(50)
    seg, nb = g.gather(np.array([0, 3]))
    assert nb.tolist() == list(range(1, 50)) + [0]
    assert seg.tolist() == [0] * 49 + [1]
    assert format_edge_list(g).splitlines()[0] == "50 49"
