import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_stone, random_local_formula
from twlimit.families import rooted_path
from twlimit.graph import RootedKTree, generate_random_rooted_ktree
from twlimit.logic import (
    BudgetExceeded,
    FormulaSyntaxError,
    Not,
    UnboundVariable,
    Winner,
    evaluate,
    global_ef_equivalent,
    local_ef_winner,
    parse_formula,
    quantifier_depth,
    stone_pairing,
    to_text,
)

A, B, C = 0, 1, 2


def p3():
    """a -> b <- c."""
    return RootedKTree.from_parent_lists(1, [[B], [], [B]])


def test_parse_examples():
    f = parse_formula("exists_x y . E1(y,x)")
    assert f.local and f.depth == 1 and f.free == ("x",)
    g = parse_formula("forall x . x = x")
    assert not g.local and g.depth == 1 and g.free == ()
    h = parse_formula("exists_z x . forall_x y . y = z")
    assert h.local and h.depth == 2 and h.free == ("z",)


def test_degree_one_neighbor_formula():
    # exists_z x . forall_x y . y = z : z has a neighbour whose only neighbour is z
    f = parse_formula("exists_z x . forall_x y . y = z").formula
    T = p3()
    assert [evaluate(T, f, {"z": v}) for v in (A, B, C)] == [False, True, False]


@pytest.mark.parametrize("bad", ["exists x", "E1(x,", "U0(x)", "x = ", "forall_ x . x=x", "E1(x,y) y"])
def test_syntax_errors(bad):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(bad)


def test_unknown_relation_index():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("E3(x,y)", k=2)


def test_evaluate_direction():
    f = parse_formula("E1(x,y)").formula
    assert evaluate(p3(), f, {"x": A, "y": B})
    assert not evaluate(p3(), f, {"x": B, "y": A})


def test_has_child():
    f = parse_formula("exists_x y . E1(y,x)").formula
    assert evaluate(p3(), f, {"x": B})
    assert not evaluate(p3(), f, {"x": A})


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        evaluate(p3(), parse_formula("E1(x,y)").formula, {"x": 0})


def test_stone_examples():
    assert stone_pairing(p3(), "exists_x y . E1(y,x)").value == Fraction(1, 3)
    assert stone_pairing(p3(), "x = x").value == 1
    assert stone_pairing(p3(), "E1(x,y)").value == Fraction(2, 9)


def test_stone_budget():
    with pytest.raises(BudgetExceeded):
        stone_pairing(rooted_path(50), "E1(x,y)", budget=100)


def test_sampled_stone_within_3_sigma():
    T = rooted_path(60)
    exact = stone_pairing(T, "exists_x z . E1(x,z) & E1(z,y)").value
    est = stone_pairing(T, "exists_x z . E1(x,z) & E1(z,y)", budget=10, samples=40_000, seed=3)
    assert not est.exact
    assert abs(float(est.value) - float(exact)) <= 3 * max(est.stderr, 1e-9)


def test_round_trip_text():
    rng = random.Random(4)
    for _ in range(50):
        f = random_local_formula(rng, ["x", "y"], 2, 2)
        assert parse_formula(to_text(f)).formula == f


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_negation_duality(seed):
    rng = random.Random(seed)
    T = generate_random_rooted_ktree(rng.randint(1, 7), 2, seed, fill_prob=0.3).with_marks({1: 0})
    f = random_local_formula(rng, ["x"], 2, 2)
    for v in range(T.n):
        assert evaluate(T, Not(f), {"x": v}) == (not evaluate(T, f, {"x": v}))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_stone_matches_reference(seed):
    rng = random.Random(seed)
    T = generate_random_rooted_ktree(rng.randint(1, 6), 2, seed, fill_prob=0.3)
    f = random_local_formula(rng, ["x", "y"][: rng.randint(1, 2)], 2, 2)
    assert stone_pairing(T, f).value == brute_stone(T, f)
    assert quantifier_depth(f) <= 2


def test_local_game_examples():
    T = p3()
    for d in range(4):
        assert local_ef_winner(T, A, T, C, d) == Winner.DUPLICATOR
        assert local_ef_winner(T, B, T, B, d) == Winner.DUPLICATOR
    assert local_ef_winner(T, A, T, B, 1) == Winner.SPOILER


def test_global_game_examples():
    T = p3()
    assert global_ef_equivalent(T, T, 3)
    # with one quantifier only x = x and loop atoms are expressible, so any two nonempty graphs agree
    P4 = RootedKTree.from_parent_lists(1, [[1], [2], [], [2]])
    assert global_ef_equivalent(T, P4, 1)
    # "some vertex has a parent and a child" separates a->b<-c from the directed path at depth 3
    Q = rooted_path(3)
    assert not global_ef_equivalent(T, Q, 3)
