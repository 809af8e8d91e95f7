"""Acceptance criteria 1-11; every test prints one PASS/FAIL line for its criterion."""
import itertools
import random
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from conftest import all_rooted_1trees, cached_machine
from faults import forced_finite_cycle, self_loop_template, wrong_alternate_template, wrong_relation
from oracles import brute_stone, random_local_formula
from twlimit.cli import main
from twlimit.dyadic import Dyadic, zeta, zeta_inv
from twlimit.encoder import encode_as_rooted_ktree, exact_tree_decomposition, kept_subgraph
from twlimit.families import rooted_path, star
from twlimit.graph import EdgeColor, generate_random_rooted_ktree, validate_rooted_ktree
from twlimit.graphio import PlainGraph
from twlimit.hintikka import hanf_equivalent, type_histogram, vertex_type
from twlimit.limit import FiniteVertex
from twlimit.logic import Winner, global_ef_equivalent, local_ef_winner, quantifier_depth, stone_pairing
from twlimit.sequence import mark_null_partition
from twlimit.verify import (
    FAIL,
    DefinableSet,
    _auto_semipreserving,
    _auto_sfmtp,
    check_acyclicity,
    check_edge_consistency,
    check_measure_semipreserving,
    check_path_independence,
    check_residuality,
    check_sfmtp,
    compare_type_distribution,
)

THREE_SIGMA_P = 0.0027


@pytest.fixture
def verdict(capsys):
    def report(criterion: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
        assert ok, detail

    return report


# 1 -------------------------------------------------------------------------------------------


def type_game_disagreement(graphs, d):
    """First pair where type equality and the local game disagree, or None.

    Game equivalence is an equivalence relation, so comparing every vertex with
    its type class representative, and representatives with each other, decides
    every pair.
    """
    classes: dict = {}
    for T in graphs:
        for v in range(T.n):
            classes.setdefault(vertex_type(T, v, d), []).append((T, v))
    for members in classes.values():
        T, u = members[0]
        for T2, u2 in members[1:]:
            if local_ef_winner(T, u, T2, u2, d) != Winner.DUPLICATOR:
                return (T, u, T2, u2)
    for (T, u), (T2, u2) in itertools.combinations([m[0] for m in classes.values()], 2):
        if local_ef_winner(T, u, T2, u2, d) != Winner.SPOILER:
            return (T, u, T2, u2)
    return None


def test_criterion_1_types_match_game(verdict):
    ones = list(all_rooted_1trees(6))
    rng = random.Random(1)
    twos = []
    for s in range(200):
        T = generate_random_rooted_ktree(rng.randint(1, 8), 2, s, fill_prob=0.3)
        twos.append(T.with_marks({1: rng.randrange(T.n)}) if s % 3 == 0 else T)
    bad = [(name, d) for d in (1, 2, 3) for name, gs in (("1-trees", ones), ("2-trees", twos))
           if type_game_disagreement(gs, d) is not None]
    verdict(1, not bad, f"{len(ones)} rooted 1-trees, {len(twos)} random 2-trees, d<=3, disagreements in {bad}")


# 2 -------------------------------------------------------------------------------------------


def test_criterion_2_stone_pairings(verdict):
    wrong = 0
    for s in range(100):
        rng = random.Random(1000 + s)
        k = rng.choice((1, 2))
        T = generate_random_rooted_ktree(rng.randint(1, 8), k, s, fill_prob=0.3)
        if s % 2:
            T = T.with_marks({1: rng.randrange(T.n)})
        f = random_local_formula(rng, ["x", "y"][: rng.randint(1, 2)], 2, k)
        assert quantifier_depth(f) <= 2
        wrong += stone_pairing(T, f).value != brute_stone(T, f)
    verdict(2, wrong == 0, f"100 random local formulas, {wrong} mismatches against tuple enumeration")


# 3 -------------------------------------------------------------------------------------------


def test_criterion_3_hanf_cross_validation(verdict):
    pool = [rooted_path(n) for n in range(2, 9)] + [star(n) for n in range(3, 9)]
    for s in range(300):
        rng = random.Random(s)
        pool.append(generate_random_rooted_ktree(rng.randint(3, 8), rng.choice((1, 1, 2)), s, fill_prob=0.3))
    hs = [type_histogram(T, 2) for T in pool]
    candidates = [(a, b) for a, b in itertools.combinations(range(len(pool)), 2)
                  if pool[a].k == pool[b].k and hs[a] != hs[b]]
    chosen = None
    for gamma in range(1, 5):
        pairs = [(a, b) for a, b in candidates if hanf_equivalent(hs[a], hs[b], gamma)][:50]
        if len(pairs) == 50 and all(global_ef_equivalent(pool[a], pool[b], 2) for a, b in pairs):
            chosen = gamma
            break
    # the game oracle must also separate some pairs, or agreement would be vacuous
    separated = sum(not global_ef_equivalent(pool[a], pool[b], 2) for a, b in candidates[:200])
    ok = chosen is not None and separated > 0
    verdict(3, ok, f"D=2, smallest Gamma with 50 Hanf pairs all globally equivalent at d=2: {chosen}; "
                   f"control pairs separated: {separated}")


# 4 -------------------------------------------------------------------------------------------


def test_criterion_4_encoder_round_trip(verdict):
    bad = 0
    for s in range(200):
        rng = random.Random(s)
        n = rng.randint(1, 20)
        keep = rng.uniform(0.2, 1.0)
        T0 = generate_random_rooted_ktree(n, 2, s)
        G = PlainGraph(n, frozenset(frozenset((v, w)) for v, w, _, _ in T0.edges() if rng.random() < keep))
        T = encode_as_rooted_ktree(G, exact_tree_decomposition(G, 2), 2)
        bad += not (validate_rooted_ktree(T).ok and kept_subgraph(T) == G)
    verdict(4, bad == 0, f"200 random subgraphs of 2-trees, {bad} failed validation or round trip")


# 5 -------------------------------------------------------------------------------------------


def test_criterion_5_nu_divisibility(verdict):
    maps, bad = 0, []
    for fam in ("path", "star", "bintree"):
        M = cached_machine(fam)
        for tau in M.finite_prefixes():
            for i in M.parent_indices(tau):
                target = M.parent_prefix[(tau, i)]
                nu, nu2 = M.nu[tau], M.nu[target]
                if not isinstance(nu2, int):
                    continue
                maps += 1
                if nu % nu2:
                    bad.append((fam, str(tau), i, "not a multiple"))
                    continue
                images = Counter(M.parent(FiniteVertex(tau, m), i).index for m in range(1, nu + 1))
                if sorted(images) != list(range(1, nu2 + 1)) or set(images.values()) != {nu // nu2}:
                    bad.append((fam, str(tau), i, dict(images)))
    verdict(5, maps > 0 and not bad, f"{maps} FINITE parent maps on path/star/bintree, violations {bad}")


# 6 -------------------------------------------------------------------------------------------


def test_criterion_6_torus_arithmetic(verdict):
    rng = random.Random(6)
    broken = 0
    for d in range(1, 7):
        for _ in range(100_000):
            bits = rng.randint(0, 96)
            x = Dyadic(rng.getrandbits(bits) if bits else 0, bits)
            broken += zeta_inv(d, zeta(d, x)) != x
    gen = np.random.default_rng(6)
    hi = gen.integers(0, 2**32, size=1_000_000, dtype=np.uint64)
    lo = gen.integers(0, 2**32, size=1_000_000, dtype=np.uint64)
    a, b = np.empty(len(hi)), np.empty(len(hi))
    for t, (h, l) in enumerate(zip(hi.tolist(), lo.tolist())):
        u, w = zeta(2, Dyadic((h << 32) | l, 64))
        a[t], b[t] = float(u), float(w)
    p_a = stats.kstest(a, "uniform").pvalue
    p_b = stats.kstest(b, "uniform").pvalue
    grid = np.histogram2d(a, b, bins=16, range=[[0, 1], [0, 1]])[0].ravel()
    p_joint = stats.chisquare(grid).pvalue
    ok = broken == 0 and min(p_a, p_b, p_joint) > THREE_SIGMA_P
    verdict(6, ok, f"round-trip failures {broken}/600000; KS p={p_a:.3g},{p_b:.3g}; joint chi2 p={p_joint:.3g}")


# 7 -------------------------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize("fam", ["path", "bintree", "fan"])
def test_criterion_7_exact_invariants(verdict, fam):
    M = cached_machine(fam)
    reps = [check(M, 100_000) for check in (check_path_independence, check_edge_consistency, check_acyclicity)]
    faults = [
        check_path_independence(wrong_alternate_template(M), 500),
        check_acyclicity(self_loop_template(M), 500),
    ]
    if fam != "bintree":  # no two FINITE prefixes share a nu there
        faults.append(check_acyclicity(forced_finite_cycle(M), 10))
    if fam == "fan":
        faults.append(check_edge_consistency(wrong_relation(M), 500))
    ok = all(r.passed and r.statistic == 0 for r in reps) and all(f.verdict == FAIL for f in faults)
    detail = "; ".join(r.line() for r in reps) + f"; {len(faults)} fault fixtures, all FAIL: {all(f.verdict == FAIL for f in faults)}"
    verdict(7, ok, f"[{fam}] {detail}")


# 8 -------------------------------------------------------------------------------------------


def test_criterion_8_semipreserving(verdict):
    M = cached_machine("bintree")
    X, Y, i, d = next(p for p in _auto_semipreserving(M) if p[3] == 2)
    good = check_measure_semipreserving(M, X, Y, i, 2, 1_000_000, seed=8)
    control = check_measure_semipreserving(M, X, Y, i, 3, 1_000_000, seed=8, check_precondition=False)
    verdict(8, good.passed and control.verdict == FAIL, f"d=2: {good.line()}; d=3 control: {control.line()}")


# 9 -------------------------------------------------------------------------------------------


def _comb_pairs(color):
    M = cached_machine("comb-large")
    by_fp = {p.fingerprint: p for p in M.prefixes()}
    pend = [p for p in M.support if all(sum(n for _, _, n in prof) == 1 for prof in M.neighbor_profiles[p])]
    A = DefinableSet.of(pend)
    B = DefinableSet.of({by_fp[fp] for p in pend for prof in M.neighbor_profiles[p] for fp, col, _ in prof
                         if fp in by_fp and (color is None or col == int(color))})
    return M, [(A, B), (B, A)]


@pytest.mark.parametrize("color", [None, EdgeColor.FILL], ids=["unfiltered", "fill-only"])
def test_criterion_9_sfmtp(verdict, color):
    M, pairs = _comb_pairs(color)
    lines = [check_sfmtp(M, A, B, 1, 1, 1_000_000, seed=9, color=color) for A, B in pairs]
    T = cached_machine("bintree-leaves")
    A, B, a, b = next(p for p in _auto_sfmtp(T, color) if p[2:] == (1, 2))
    lines.append(check_sfmtp(T, A, B, 1, 2, 1_000_000, seed=9, color=color))
    verdict(9, all(r.passed for r in lines), "; ".join(r.line() for r in lines))


# 10 ------------------------------------------------------------------------------------------


def test_criterion_10_distribution_fidelity(verdict):
    lines, atoms_ok = [], True
    for fam in ("path", "bintree", "comb"):
        M = cached_machine(fam)
        lines.append(compare_type_distribution(M, 1_000_000, seed=10))
        counts = Counter(a.prefix for a in M.finite_atoms())
        atoms_ok &= all(counts[p] == M.nu[p] for p in M.finite_prefixes())
    seq, _ = mark_null_partition([rooted_path(n) for n in (8, 16, 32, 64)], "1/2")
    resid = check_residuality(seq, 2)
    ok = all(r.passed for r in lines) and atoms_ok and resid.passed
    verdict(10, ok, "; ".join(r.line() for r in lines) + f"; atoms match nu: {atoms_ok}; {resid.line()}")


# 11 ------------------------------------------------------------------------------------------


def test_criterion_11_pipeline_determinism(verdict, tmp_path):
    runs = []
    for name in ("first", "second"):
        out = tmp_path / name
        code = main(["pipeline", "--family", "path", "--sizes", "8,16,32,64", "--seed", "11", "--out", str(out)])
        runs.append((code, {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}))
    (c1, a), (c2, b) = runs
    ok = c1 == c2 == 0 and a == b and len(a) > 0
    verdict(11, ok, f"exit codes {c1},{c2}; {len(a)} artifacts, byte-identical: {a == b}")
