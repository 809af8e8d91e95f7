import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_rooted_1trees
from twlimit.families import rooted_path, star
from twlimit.graph import RootedKTree, generate_random_rooted_ktree, transitive_tournament
from twlimit.hintikka import (
    INF,
    DepthMismatch,
    Histogram,
    NoWitness,
    TypeTrie,
    ChainPrefix,
    hanf_equivalent,
    implied_profile,
    restrict_type,
    type_from_fingerprint,
    type_histogram,
    vertex_type,
)
from twlimit.logic import Winner, local_ef_winner


def p3():
    return RootedKTree.from_parent_lists(1, [[1], [], [1]])


def agree_with_game(graphs, d):
    verts = [(T, v) for T in graphs for v in range(T.n)]
    for (T, u), (T2, u2) in itertools.combinations(verts, 2):
        same = vertex_type(T, u, d) == vertex_type(T2, u2, d)
        if same != (local_ef_winner(T, u, T2, u2, d) == Winner.DUPLICATOR):
            return (T, u, T2, u2)
    return None


@pytest.mark.parametrize("d", [1, 2])
def test_game_oracle_on_small_1trees(d):
    assert agree_with_game(list(all_rooted_1trees(4)), d) is None


def test_game_oracle_on_random_2trees():
    gs = [generate_random_rooted_ktree(6, 2, s, fill_prob=0.3) for s in range(6)]
    gs = [T.with_marks({1: 0}) for T in gs[:3]] + gs[3:]
    assert agree_with_game(gs, 2) is None


def test_p3_histogram():
    T = p3()
    assert vertex_type(T, 0, 1) == vertex_type(T, 2, 1) != vertex_type(T, 1, 1)
    assert sorted(type_histogram(T, 1).counts.values()) == [1, 2]


@pytest.mark.parametrize("k", [2, 3])
def test_tournament_types_distinct(k):
    T = transitive_tournament(k, k)
    assert len(set(type_histogram(T, 1).counts)) == k


def test_disjoint_union_doubles():
    T = generate_random_rooted_ktree(7, 2, 3)
    h, h2 = type_histogram(T, 2), type_histogram(T.disjoint_union(T), 2)
    assert h2.counts == {t: 2 * c for t, c in h.counts.items()}


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(1, 2), st.integers(0, 999), st.integers(1, 3))
def test_prefix_property(n, k, seed, d):
    T = generate_random_rooted_ktree(n, k, seed)
    for v in range(T.n):
        assert restrict_type(vertex_type(T, v, d + 1), d) == vertex_type(T, v, d)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(0, 999))
def test_histogram_invariant_under_relabel(n, seed):
    T = generate_random_rooted_ktree(n, 2, seed)
    perm = list(range(n))
    random.Random(seed).shuffle(perm)
    assert type_histogram(T, 2).counts == type_histogram(T.relabel(perm), 2).counts


def test_fingerprint_lookup_round_trip():
    t = vertex_type(p3(), 1, 2)
    assert type_from_fingerprint(2, t.fingerprint) == t


def test_hanf_rule():
    t = vertex_type(p3(), 0, 1)
    a, b = Histogram(1, {t: 5}), Histogram(1, {t: 7})
    assert hanf_equivalent(a, a, 100)
    assert hanf_equivalent(a, b, 5)
    assert not hanf_equivalent(a, b, 8)
    with pytest.raises(DepthMismatch):
        hanf_equivalent(a, Histogram(2, {}), 1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=4), st.lists(st.integers(0, 9), min_size=1, max_size=4), st.integers(1, 10))
def test_hanf_symmetric_and_monotone(xs, ys, gamma):
    ts = [vertex_type(rooted_path(m + 1), 0, 1) for m in range(4)]
    h = Histogram(1, {t: c for t, c in zip(ts, xs) if c})
    h2 = Histogram(1, {t: c for t, c in zip(ts, ys) if c})
    assert hanf_equivalent(h, h2, gamma) == hanf_equivalent(h2, h, gamma)
    if hanf_equivalent(h, h2, gamma):
        assert all(hanf_equivalent(h, h2, g) for g in range(1, gamma + 1))


def test_trie_shape():
    trie = TypeTrie([rooted_path(n) for n in (5, 9)], 3)
    assert trie.is_tree()
    for g, chains in enumerate(trie.chains):
        for v, ch in enumerate(chains):
            assert (g, v) in trie.witnesses(ch)


def _mid_prefix(trie, g, D):
    T = trie.graphs[g]
    return trie.chain(g, T.n // 2, D)


def test_path_mid_child_counts_exact():
    trie = TypeTrie([rooted_path(n) for n in (5, 9, 17)], 2)
    prof = implied_profile(trie, _mid_prefix(trie, 2, 2))
    assert not prof.unstable
    assert all(c == 1 for c in prof.child_counts.values())


def test_star_center_counts_grow():
    trie = TypeTrie([star(n) for n in (4, 8, 16)], 2)
    prof = implied_profile(trie, trie.chain(0, 0, 2))
    assert list(prof.child_counts.values()) == [INF]
    assert prof.initial


def test_no_witness():
    trie = TypeTrie([rooted_path(4)], 2)
    other = TypeTrie([star(6)], 2).chain(0, 0, 2)
    with pytest.raises(NoWitness):
        implied_profile(trie, other)


def test_chain_prefix_restrict():
    trie = TypeTrie([rooted_path(9)], 3)
    ch = trie.chain(0, 4)
    assert isinstance(ch, ChainPrefix) and ch.depth == 3
    assert ch.extends(ch.restrict(2)) and ch.restrict(1).depth == 1
