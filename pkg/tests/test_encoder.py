import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twlimit.encoder import (
    Infeasible,
    WidthOverflow,
    TreeDecomposition,
    encode_as_rooted_ktree,
    exact_tree_decomposition,
    fill_edge_count,
    kept_subgraph,
)
from twlimit.graph import EdgeColor, generate_random_rooted_ktree, validate_rooted_ktree
from twlimit.graphio import PlainGraph, format_decomposition, parse_decomposition


def decomposition_ok(G: PlainGraph, D: TreeDecomposition, k: int) -> bool:
    """Independent checker: coverage, edge containment, connected occurrence, tree shape, width."""
    tree = nx.Graph()
    tree.add_nodes_from(range(len(D.bags)))
    tree.add_edges_from(D.tree)
    if not nx.is_tree(tree) or any(len(b) > k + 1 for b in D.bags):
        return False
    if set().union(*D.bags) != set(range(G.n)):
        return False
    if not all(any(e <= b for b in D.bags) for e in G.edges):
        return False
    return all(nx.is_connected(tree.subgraph([i for i, b in enumerate(D.bags) if v in b])) for v in range(G.n))


def random_2tree_subgraph(n: int, seed: int, keep: float = 0.7) -> PlainGraph:
    T = generate_random_rooted_ktree(n, 2, seed)
    rng = random.Random(seed)
    edges = [frozenset((v, w)) for v, w, _, _ in T.edges() if rng.random() < keep]
    return PlainGraph(n, frozenset(edges))


def path(n):
    return PlainGraph.from_edges(n, [(v, v + 1) for v in range(n - 1)])


def test_path_bags_are_edges():
    D = exact_tree_decomposition(path(5), 1)
    assert sorted(tuple(sorted(b)) for b in D.bags) == [(v, v + 1) for v in range(4)]


def test_k4_infeasible_at_width_2():
    K4 = PlainGraph.from_edges(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])
    with pytest.raises(Infeasible):
        exact_tree_decomposition(K4, 2)


@pytest.mark.parametrize("seed", range(5))
def test_random_2tree_subgraph_feasible(seed):
    G = random_2tree_subgraph(20, seed)
    assert decomposition_ok(G, exact_tree_decomposition(G, 2), 2)


def test_p3_tree_needs_no_fill():
    G = path(3)
    D = TreeDecomposition((frozenset({0, 1}), frozenset({1, 2})), ((0, 1),), 0)
    T = encode_as_rooted_ktree(G, D, 1)
    assert validate_rooted_ktree(T).ok
    assert fill_edge_count(T) == 0
    assert kept_subgraph(T) == G
    # vertices of the root bag are placed by id, so a is the sink
    assert T.i_parent(0, 1) is None and T.i_parent(1, 1) == 0 and T.i_parent(2, 1) == 1


def test_c4_has_one_chord():
    C4 = PlainGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    T = encode_as_rooted_ktree(C4, exact_tree_decomposition(C4, 2), 2)
    edges = list(T.edges())
    assert len(edges) == 2 * 4 - 3
    assert sum(c == EdgeColor.FILL for *_, c in edges) == 1
    assert sum(c == EdgeColor.KEPT for *_, c in edges) == 4


def test_too_wide_decomposition_rejected():
    D = TreeDecomposition((frozenset({0, 1, 2}),), (), 0)
    with pytest.raises(WidthOverflow):
        encode_as_rooted_ktree(path(3), D, 1)


def test_decomposition_text_round_trip():
    D = exact_tree_decomposition(random_2tree_subgraph(12, 3), 2)
    assert parse_decomposition(format_decomposition(D)) == D


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.integers(0, 10_000), st.floats(0.2, 1.0))
def test_round_trip_property(n, seed, keep):
    G = random_2tree_subgraph(n, seed, keep)
    D = exact_tree_decomposition(G, 2)
    T = encode_as_rooted_ktree(G, D, 2)
    assert validate_rooted_ktree(T).ok
    assert kept_subgraph(T) == G
    assert len(T.initial_vertices()) <= 2
