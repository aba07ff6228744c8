import io as _io
import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ciaug import Graph, ParseError, RpgParams, generate_er, generate_rpg, parse_edge_list
from ciaug.graph import (
    BipartiteFeatureGraph,
    build_feature_bipartite,
    complement_adjacency,
    normalized_laplacian,
)
from ciaug.generators import rpg_probabilities
from ciaug.io import format_edge_list, graph_from_dict, graph_to_dict, read_graph, read_graph_json, write_graph_json

from conftest import make_graph


@st.composite
def weighted_graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    weights = draw(st.lists(st.floats(0.05, 5.0), min_size=len(chosen), max_size=len(chosen)))
    return make_graph(n, chosen, weights)


# ---------------------------------------------------------------- model


def test_edges_are_canonical_and_sorted():
    g = make_graph(4, [(3, 1), (2, 0), (0, 1)], [1.0, 2.0, 3.0])
    assert g.edges.tolist() == [[0, 1], [0, 2], [1, 3]]
    assert g.weights.tolist() == [3.0, 2.0, 1.0]
    assert g.m == 3


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(n=2, edges=[(0, 0)]), "self-loop"),
        (dict(n=2, edges=[(0, 2)]), "out of range"),
        (dict(n=3, edges=[(0, 1), (1, 0)]), "duplicate"),
        (dict(n=2, edges=[(0, 1)], weights=[-1.0]), "negative"),
        (dict(n=2, edges=[(0, 1)], features=[[1.0], [-0.5]]), "negative"),
        (dict(n=2, edges=[(0, 1)], features=[[1.0]]), "shape"),
    ],
)
def test_invalid_graphs_rejected(kwargs, message):
    with pytest.raises(ValueError, match=message):
        Graph(**kwargs)


def test_graph_is_immutable(k3):
    with pytest.raises(ValueError):
        k3.edges[0, 0] = 2


def test_relabel_maps_node_v_to_perm_v():
    g = make_graph(3, [(0, 1)], labels=[5, 6, 7])
    h = g.relabel([2, 0, 1])
    assert h.edges.tolist() == [[0, 2]]
    assert h.labels.tolist() == [6, 7, 5]


# ---------------------------------------------------------------- parsing


def test_parse_smallest_graph():
    g = parse_edge_list("2 1\n0 1")
    assert g.n == 2 and g.edges.tolist() == [[0, 1]] and g.weights.tolist() == [1.0]


def test_parse_triangle(k3):
    assert parse_edge_list("3 3\n0 1\n0 2\n1 2") == k3


@pytest.mark.parametrize(
    "text, message",
    [
        ("2 1\n0 0", "self-loop at line 2"),
        ("2 1\n0 2", "at line 2"),
        ("3 2\n0 1\n1 0", "duplicate edge (0, 1) (first seen at line 2) at line 3"),
        ("2 1\n0 1 -1", "negative weight at line 2"),
        ("2 1\n0 x", "malformed edge at line 2"),
        ("2 2\n0 1", "declares 2 edges"),
        ("", "missing header"),
    ],
)
def test_parse_errors_name_the_line(text, message):
    with pytest.raises(ParseError, match=message.replace("(", r"\(").replace(")", r"\)")):
        parse_edge_list(text)


@settings(max_examples=40, deadline=None)
@given(weighted_graphs())
def test_edge_list_and_json_round_trip(g):
    assert parse_edge_list(format_edge_list(g)) == g
    assert graph_from_dict(graph_to_dict(g)) == g
    buf = _io.StringIO()
    write_graph_json(g, buf)
    buf.seek(0)
    assert read_graph_json(buf) == g


def test_read_graph_picks_format_by_suffix(tmp_path, k3):
    (tmp_path / "g.txt").write_text(format_edge_list(k3))
    write_graph_json(k3.with_features(np.eye(3)), tmp_path / "g.json")
    assert read_graph(tmp_path / "g.txt") == k3
    assert read_graph(tmp_path / "g.json").features.tolist() == np.eye(3).tolist()


# ---------------------------------------------------------------- Laplacian


def test_laplacian_of_single_edge(p2):
    assert normalized_laplacian(p2).tolist() == [[1.0, -1.0], [-1.0, 1.0]]


def test_laplacian_of_triangle(k3):
    lap = normalized_laplacian(k3)
    np.testing.assert_allclose(lap, np.eye(3) - k3.adjacency() / 2, atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(lap), [0.0, 1.5, 1.5], atol=1e-12)


def test_isolated_node_row_is_zero():
    lap = normalized_laplacian(make_graph(3, [(0, 1)]))
    assert np.all(lap[2] == 0) and np.all(lap[:, 2] == 0)


@settings(max_examples=60, deadline=None)
@given(weighted_graphs())
def test_laplacian_properties(g):
    lap = normalized_laplacian(g)
    assert np.array_equal(lap, lap.T)
    np.testing.assert_allclose(lap @ np.sqrt(g.degrees()), 0.0, atol=1e-12)
    lam = np.linalg.eigvalsh(lap)
    assert lam.min() >= -1e-9 and lam.max() <= 2 + 1e-9
    np.testing.assert_allclose(normalized_laplacian(g, sparse=True).toarray(), lap, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(weighted_graphs())
def test_laplacian_matches_networkx_on_non_isolated_nodes(g):
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n))
    nxg.add_weighted_edges_from((int(i), int(j), float(w)) for (i, j), w in zip(g.edges, g.weights))
    ref = nx.normalized_laplacian_matrix(nxg, nodelist=range(g.n)).toarray()
    active = g.degrees() > 0
    np.testing.assert_allclose(normalized_laplacian(g)[np.ix_(active, active)], ref[np.ix_(active, active)], atol=1e-12)


# ---------------------------------------------------------------- complement


def test_complement_examples(k3):
    assert complement_adjacency(k3).shape == (0, 2)
    assert complement_adjacency(make_graph(3, [])).tolist() == [[0, 1], [0, 2], [1, 2]]
    assert complement_adjacency(make_graph(3, [(0, 1)])).tolist() == [[0, 2], [1, 2]]


@settings(max_examples=40, deadline=None)
@given(weighted_graphs())
def test_complement_partitions_pairs(g):
    comp = {tuple(p) for p in complement_adjacency(g).tolist()}
    assert not comp & g.edge_set()
    assert comp | g.edge_set() == set(itertools.combinations(range(g.n), 2))


# ---------------------------------------------------------------- bipartite


def test_bipartite_single_cell():
    b = build_feature_bipartite(make_graph(1, [], features=[[1.0]]))
    assert isinstance(b, BipartiteFeatureGraph)
    assert b.base.n == 2 and b.base.edges.tolist() == [[0, 1]] and b.base.weights.tolist() == [1.0]


def test_bipartite_identity_features_give_disjoint_edges():
    b = build_feature_bipartite(make_graph(2, [(0, 1)], features=np.eye(2)))
    assert b.base.edges.tolist() == [[0, 2], [1, 3]]


def test_bipartite_block_structure():
    rng = np.random.default_rng(3)
    x = rng.random((5, 4)) * (rng.random((5, 4)) < 0.5)
    b = build_feature_bipartite(make_graph(5, [], features=x))
    a = b.base.adjacency()
    np.testing.assert_array_equal(a[:5, 5:], x)
    assert np.all(a[:5, :5] == 0) and np.all(a[5:, 5:] == 0)
    assert np.all((b.base.edges[:, 0] < 5) & (b.base.edges[:, 1] >= 5))


def test_bipartite_needs_features(k3):
    with pytest.raises(ValueError):
        build_feature_bipartite(k3)


# ---------------------------------------------------------------- generators


def test_rpg_default_sizes():
    g = generate_rpg(RpgParams())
    assert g.n == 240 and np.bincount(g.labels).tolist() == [30] * 8


def test_rpg_full_homophily_has_no_inter_class_edges():
    g = generate_rpg(RpgParams(homophily=1.0, seed=4))
    assert np.all(g.labels[g.edges[:, 0]] == g.labels[g.edges[:, 1]])


def test_rpg_mean_degree_and_homophily():
    degs, homs = [], []
    for s in range(20):
        g = generate_rpg(RpgParams(seed=s))
        degs.append(2 * g.m / g.n)
        homs.append(np.mean(g.labels[g.edges[:, 0]] == g.labels[g.edges[:, 1]]))
    assert abs(np.mean(degs) - 5) <= 0.5
    assert abs(np.mean(homs) - 0.96) <= 0.02


def test_rpg_probabilities_match_closed_form():
    p_in, p_out = rpg_probabilities(RpgParams())
    assert p_in == pytest.approx(0.96 * 600 / (8 * 435))
    assert p_out == pytest.approx(0.04 * 600 / (28 * 900))


@pytest.mark.parametrize("params", [dict(avg_degree=300.0), dict(num_class=1, homophily=0.5)])
def test_rpg_infeasible(params):
    with pytest.raises(ValueError):
        generate_rpg(RpgParams(**params))


def test_er_examples():
    assert generate_er(6, 0.0, 1).m == 0
    assert generate_er(5, 1.0, 1).m == 10
    for s in range(10):
        assert 400 <= generate_er(100, 0.1, s).m <= 600


def test_generators_are_reproducible():
    assert generate_er(30, 0.2, 9) == generate_er(30, 0.2, 9)
    assert generate_rpg(RpgParams(seed=2)) == generate_rpg(RpgParams(seed=2))
    assert generate_er(30, 0.2, 9) != generate_er(30, 0.2, 10)
