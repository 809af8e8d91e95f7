import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twlimit.graph import GraphInputError, generate_random_rooted_ktree
from twlimit.graphio import PlainGraph, format_ktree, format_plain_graph, parse_ktree, parse_plain_graph


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(1, 3), st.integers(0, 999))
def test_ktree_round_trip(n, k, seed):
    T = generate_random_rooted_ktree(n, k, seed, fill_prob=0.4).with_marks({1: 0})
    assert parse_ktree(format_ktree(T)) == T


def test_plain_round_trip():
    G = PlainGraph.from_edges(4, [(0, 1), (2, 3), (1, 2)])
    assert parse_plain_graph(format_plain_graph(G)) == G


@pytest.mark.parametrize(
    "text",
    [
        "",
        "graph 3\ne 0 0\n",
        "graph 2\nx 0 1\n",
        "ktree 2 1\np 0 1 1 2\n",
        "ktree 2 1\np 5 1 1 0\n",
        "ktree 2 1\nm 1 0\nm 1 1\n",
        "ktree 2 1\np 0 1 a 0\n",
    ],
)
def test_malformed_inputs(text):
    with pytest.raises(GraphInputError):
        (parse_plain_graph if text.startswith("graph") else parse_ktree)(text)


def test_comments_and_blank_lines():
    T = parse_ktree("# header comment\nktree 2 1\n\np 1 1 0 0  # edge\n")
    assert T.i_parent(1, 1) == 0
