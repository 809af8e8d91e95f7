"""Local d-types of vertices, the type trie, and Hanf-threshold comparison.

The d-type of v is the recursive signature of the pebble tuple (v,): the
atomic type of the tuple together with the *set* of (r-1)-signatures of its
one-pebble extensions by neighbours of pebbled vertices.  Marks U_j count
only for j <= d.  Signatures are interned in a process-wide table and carry a
SHA-256 fingerprint that does not depend on the interning order.
"""
from __future__ import annotations

import hashlib
import itertools
import math
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graph import RootedKTree

INF = math.inf


class DepthMismatch(ValueError):
    pass


class NoWitness(LookupError):
    pass


# -- intern table -------------------------------------------------------------------


class _InternTable:
    def __init__(self):
        self.lock = threading.Lock()
        self.index: dict[tuple, int] = {}
        self.data: list[tuple] = []
        self.fps: list[str] = []
        self.by_fp: dict[str, int] = {}

    def intern(self, r: int, sig0: tuple, children: tuple[int, ...]) -> int:
        key = (r, sig0, children)
        h = self.index.get(key)
        if h is not None:
            return h
        with self.lock:
            h = self.index.get(key)
            if h is not None:
                return h
            child_fps = ",".join(sorted(self.fps[c] for c in children))
            fp = hashlib.sha256(f"{r}|{sig0!r}|{child_fps}".encode()).hexdigest()
            h = len(self.data)
            self.data.append(key)
            self.fps.append(fp)
            self.by_fp[fp] = h
            self.index[key] = h
            return h


_TABLE = _InternTable()


@dataclass(frozen=True, order=True)
class TypeId:
    """A d-type: equal fingerprints mean equal types; ``handle`` is the process-local interned id."""

    depth: int
    fingerprint: str
    handle: int = field(default=-1, compare=False, hash=False, repr=False)

    @property
    def short(self) -> str:
        return self.fingerprint[:12]

    def __str__(self):
        return f"d{self.depth}:{self.short}"


def _type_from_handle(h: int) -> TypeId:
    return TypeId(_TABLE.data[h][0], _TABLE.fps[h], h)


def type_from_fingerprint(depth: int, fingerprint: str) -> TypeId:
    return TypeId(depth, fingerprint, _TABLE.by_fp.get(fingerprint, -1))


# -- signature computation ------------------------------------------------------------


def _edge_code(e) -> int:
    return 0 if e is None else 2 * (e[0] - 1) + int(e[1]) + 1


class TypeComputer:
    """Memoised signatures of pebble tuples of one graph at one top depth ``d``."""

    def __init__(self, T: RootedKTree, d: int):
        if d < 0:
            raise ValueError("depth must be >= 0")
        self.T = T
        self.d = d
        self.memo: dict[tuple[int, ...], int] = {}
        self.row_memo: dict[tuple[int, ...], tuple] = {}
        self.base = 2 * T.k + 1
        self.marks = [0] * T.n
        for v, j in T.mark_of.items():
            self.marks[v] = j if j <= d else 0

    def sig0(self, a: tuple[int, ...]) -> tuple:
        T = self.T
        rows = []
        for q in range(len(a)):
            y = a[q]
            row = [self.marks[y]]
            for p in range(q):
                x = a[p]
                if x == y:
                    row.append(-1)
                else:
                    row.append(_edge_code(T.edge(x, y)) * self.base + _edge_code(T.edge(y, x)))
            rows.append(tuple(row))
        return tuple(rows)

    def signature(self, a: tuple[int, ...]) -> int:
        h = self.memo.get(a)
        if h is not None:
            return h
        r = self.d + 1 - len(a)
        s0 = self.sig0(a)
        if r <= 0:
            h = _TABLE.intern(0, s0, ())
        else:
            nbrs = set()
            for x in a:
                nbrs.update(self.T.neighbors[x])
            children = {self.signature(a + (w,)) for w in sorted(nbrs)}
            h = _TABLE.intern(r, s0, tuple(sorted(children)))
        self.memo[a] = h
        return h

    def vertex_type(self, v: int) -> TypeId:
        return _type_from_handle(self.signature((v,)))


def vertex_type(T: RootedKTree, v: int, d: int) -> TypeId:
    if d < 1:
        raise ValueError("depth must be >= 1")
    return TypeComputer(T, d).vertex_type(v)


def all_vertex_types(T: RootedKTree, d: int) -> list[TypeId]:
    tc = TypeComputer(T, d)
    return [tc.vertex_type(v) for v in range(T.n)]


def restrict_type(t: TypeId, depth: int) -> TypeId:
    """The ``depth``-type implied by ``t`` (drop one recursion level and marks above ``depth`` per step)."""
    if depth > t.depth:
        raise DepthMismatch(f"cannot extend a {t.depth}-type to depth {depth}")
    h = t.handle if t.handle >= 0 else _TABLE.by_fp[t.fingerprint]
    memo: dict[tuple[int, int], int] = {}

    def down(node: int, r: int) -> int:
        key = (node, r)
        if key in memo:
            return memo[key]
        _, s0, children = _TABLE.data[node]
        s0 = tuple((row[0] if row[0] <= depth else 0, *row[1:]) for row in s0)
        if r == 0:
            out = _TABLE.intern(0, s0, ())
        else:
            out = _TABLE.intern(r, s0, tuple(sorted({down(c, r - 1) for c in children})))
        memo[key] = out
        return out

    return _type_from_handle(down(h, depth))


# -- histograms and Hanf thresholds -------------------------------------------------------


@dataclass
class Histogram:
    depth: int
    counts: dict[TypeId, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def type_histogram(T: RootedKTree, d: int) -> Histogram:
    return Histogram(d, dict(Counter(all_vertex_types(T, d))))


def hanf_equivalent(h: Histogram, h2: Histogram, threshold: int) -> bool:
    """Counts agree per type, or both reach ``threshold``."""
    if h.depth != h2.depth:
        raise DepthMismatch(f"histograms at depths {h.depth} and {h2.depth}")
    for t in set(h.counts) | set(h2.counts):
        a, b = h.counts.get(t, 0), h2.counts.get(t, 0)
        if a != b and not (a >= threshold and b >= threshold):
            return False
    return True


# -- chains and the type trie ---------------------------------------------------------------


@dataclass(frozen=True)
class ChainPrefix:
    types: tuple[TypeId, ...]

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(tuple((t.depth, t.fingerprint) for t in self.types))
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def depth(self) -> int:
        return len(self.types)

    @property
    def fingerprint(self) -> str:
        return self.types[-1].fingerprint

    @property
    def short(self) -> str:
        return self.types[-1].short

    def restrict(self, d: int) -> "ChainPrefix":
        return ChainPrefix(self.types[:d])

    def extends(self, other: "ChainPrefix") -> bool:
        return self.types[: other.depth] == other.types

    def __str__(self):
        return f"D{self.depth}:{self.short}"


def vertex_chains(T: RootedKTree, D: int) -> list[ChainPrefix]:
    per_depth = [all_vertex_types(T, d) for d in range(1, D + 1)]
    return [ChainPrefix(tuple(per_depth[d][v] for d in range(D))) for v in range(T.n)]


@dataclass
class TrieNode:
    depth: int
    type: TypeId
    parent: TypeId | None
    witnesses: list[tuple[int, int]] = field(default_factory=list)


class TypeTrie:
    """Chains of every vertex of every graph, arranged as a trie over depths 1..D."""

    def __init__(self, graphs: Sequence[RootedKTree], D: int, chains: Sequence[Sequence[ChainPrefix]] | None = None):
        self.graphs = list(graphs)
        self.D = D
        self.chains = [list(c) for c in chains] if chains is not None else [vertex_chains(T, D) for T in self.graphs]
        self.nodes: dict[tuple[int, TypeId], TrieNode] = {}
        self.by_last: dict[TypeId, ChainPrefix] = {}
        for g, chs in enumerate(self.chains):
            for v, ch in enumerate(chs):
                prev = None
                for d, t in enumerate(ch.types, 1):
                    node = self.nodes.get((d, t))
                    if node is None:
                        node = self.nodes[(d, t)] = TrieNode(d, t, prev)
                    node.witnesses.append((g, v))
                    prev = t
                self.by_last.setdefault(ch.types[-1], ch)

    def witnesses(self, tau: ChainPrefix) -> list[tuple[int, int]]:
        node = self.nodes.get((tau.depth, tau.types[-1]))
        return list(node.witnesses) if node else []

    def chain(self, g: int, v: int, depth: int | None = None) -> ChainPrefix:
        ch = self.chains[g][v]
        return ch if depth is None else ch.restrict(depth)

    def prefixes(self, depth: int | None = None) -> list[ChainPrefix]:
        depth = self.D if depth is None else depth
        return sorted({ch.restrict(depth) for chs in self.chains for ch in chs}, key=lambda c: c.fingerprint)

    def is_tree(self) -> bool:
        for (d, t), node in self.nodes.items():
            if d == 1 and node.parent is not None:
                return False
            if d > 1 and (node.parent is None or (d - 1, node.parent) not in self.nodes):
                return False
        return True


# -- implied profiles -----------------------------------------------------------------------


@dataclass
class ImpliedProfile:
    prefix: ChainPrefix
    parent_types: dict[int, ChainPrefix | None]
    child_counts: dict[tuple[int, ChainPrefix], float]
    marks: frozenset[int]
    initial: bool
    paths: frozenset[tuple[int, int, frozenset[int]]]
    path_bound: int
    unstable: tuple[str, ...] = ()


def grow_or_equal(values: Sequence[float]) -> float | None:
    """Common value if constant, ``INF`` if nondecreasing with growth, else ``None``."""
    if all(v == values[0] for v in values):
        return values[0]
    if all(a <= b for a, b in zip(values, values[1:])):
        return INF
    return None


def directed_paths(T: RootedKTree, src: int, dst: int, allowed: Iterable[int], max_len: int) -> bool:
    """Is there a directed path of length 1..max_len from src to dst using only i-edges, i in ``allowed``?"""
    allowed = set(allowed)
    frontier = {src}
    for _ in range(max_len):
        nxt = set()
        for u in frontier:
            for p in T.parents[u]:
                if p.index in allowed:
                    nxt.add(p.vertex)
        if dst in nxt:
            return True
        frontier = nxt
        if not frontier:
            break
    return False


def _witness_facts(T: RootedKTree, v: int, chains: list[ChainPrefix], D: int, L: int):
    k = T.k
    parents = {}
    for i in range(1, k + 1):
        p = T.i_parent(v, i)
        parents[i] = None if p is None else chains[p].restrict(D - 1)
    counts: Counter = Counter()
    for i in range(1, k + 1):
        for c in T.i_children(v, i):
            counts[(i, chains[c].restrict(D - 1))] += 1
    marks = frozenset(j for j, u in T.marks.items() if u == v and j <= D)
    initial = T.num_parents(v) < k
    ends = {0: v, **{i: T.i_parent(v, i) for i in range(1, k + 1)}}
    paths = set()
    subsets = [frozenset(c) for r in range(1, k + 1) for c in itertools.combinations(range(1, k + 1), r)]
    for s, a in ends.items():
        for t, b in ends.items():
            if a is None or b is None or s == t:
                continue
            bound = L if s == 0 else L - 1
            for A in subsets:
                if bound >= 1 and directed_paths(T, a, b, A, bound):
                    paths.add((s, t, A))
    return parents, counts, marks, initial, frozenset(paths)


def implied_profile(trie: TypeTrie, tau: ChainPrefix, L: int | None = None) -> ImpliedProfile:
    """Read the facts a prefix determines off all of its witnesses.

    Parent types are reported at depth D-1.  Child counts are exact when every
    witness agrees, ``INF`` when they grow along the graph sequence.  Any
    disagreement marks the field unstable.  Paths from the vertex to a parent
    are searched up to length ``L`` and between parents up to ``L - 1``
    (default ``L = 2D``); path facts beyond the range the type decides show
    up as disagreements and are flagged.
    """
    wit = trie.witnesses(tau)
    if not wit:
        raise NoWitness(str(tau))
    D = tau.depth
    L = 2 * D if L is None else L
    unstable = set()
    facts = [(g, _witness_facts(trie.graphs[g], v, trie.chains[g], D, L)) for g, v in wit]

    def unanimous(pos, name):
        vals = {f[pos] if not isinstance(f[pos], dict) else tuple(sorted(f[pos].items(), key=repr)) for _, f in facts}
        if len(vals) > 1:
            unstable.add(name)
        return facts[0][1][pos]

    parent_types = unanimous(0, "parent_types")
    marks = unanimous(2, "marks")
    initial = unanimous(3, "initial")
    paths = unanimous(4, "paths")

    keys = set()
    for _, f in facts:
        keys |= set(f[1])
    child_counts: dict = {}
    for key in sorted(keys, key=lambda x: (x[0], x[1].fingerprint)):
        per_graph: dict[int, set[int]] = defaultdict(set)
        for g, f in facts:
            per_graph[g].add(f[1].get(key, 0))
        if any(len(s) > 1 for s in per_graph.values()):
            unstable.add("child_counts")
            child_counts[key] = max(max(s) for s in per_graph.values())
            continue
        seq = [next(iter(per_graph[g])) for g in sorted(per_graph)]
        value = grow_or_equal(seq)
        if value is None:
            unstable.add("child_counts")
            value = seq[-1]
        child_counts[key] = value
    return ImpliedProfile(tau, parent_types, child_counts, marks, initial, paths, L, tuple(sorted(unstable)))
