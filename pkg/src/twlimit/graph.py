"""Marked, 2-edge-colored rooted k-trees.

A rooted k-tree stores, per vertex, the ordered list of its parents: entry
``i - 1`` is the i-parent.  Edges point from a child to its parent.  Marks are
the unary relations U_1, U_2, ... and are 1-based.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence


class EdgeColor(enum.IntEnum):
    KEPT = 0
    FILL = 1


class GraphInputError(ValueError):
    """Structurally malformed input (bad ids, bad indices), as opposed to a validation failure."""


@dataclass(frozen=True)
class Parent:
    index: int
    vertex: int
    color: EdgeColor = EdgeColor.KEPT


@dataclass(frozen=True)
class Violation:
    rule: str
    witnesses: tuple[int, ...]


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}


@dataclass(frozen=True, eq=False)
class RootedKTree:
    """Immutable rooted k-tree.

    ``parents[v]`` is a tuple of ``Parent`` entries in the order they were
    given; accessors look parents up by index, so validation can report
    malformed index sets instead of choking on them.
    """

    n: int
    k: int
    parents: tuple[tuple[Parent, ...], ...]
    marks: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0 or self.k < 1:
            raise GraphInputError(f"bad sizes n={self.n} k={self.k}")
        if len(self.parents) != self.n:
            raise GraphInputError("parents table length differs from n")
        for v, plist in enumerate(self.parents):
            for p in plist:
                if not 0 <= p.vertex < self.n:
                    raise GraphInputError(f"vertex {v}: parent id {p.vertex} out of range")
                if not 1 <= p.index <= self.k:
                    raise GraphInputError(f"vertex {v}: parent index {p.index} outside [1, {self.k}]")
        for j, v in self.marks.items():
            if j < 1:
                raise GraphInputError(f"mark index {j} must be >= 1")
            if not 0 <= v < self.n:
                raise GraphInputError(f"mark U{j} on out-of-range vertex {v}")
        object.__setattr__(self, "marks", dict(sorted(self.marks.items())))

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_parent_lists(
        cls,
        k: int,
        parent_lists: Sequence[Sequence[int]],
        colors: Sequence[Sequence[int]] | None = None,
        marks: Mapping[int, int] | None = None,
    ) -> "RootedKTree":
        """Build from ``parent_lists[v] = [1-parent, 2-parent, ...]``."""
        rows = []
        for v, plist in enumerate(parent_lists):
            crow = colors[v] if colors is not None else [0] * len(plist)
            rows.append(tuple(Parent(i + 1, w, EdgeColor(c)) for i, (w, c) in enumerate(zip(plist, crow))))
        return cls(len(parent_lists), k, tuple(rows), dict(marks or {}))

    def with_marks(self, marks: Mapping[int, int]) -> "RootedKTree":
        return RootedKTree(self.n, self.k, self.parents, dict(marks))

    def relabel(self, perm: Sequence[int]) -> "RootedKTree":
        """Isomorphic copy where old vertex ``v`` becomes ``perm[v]``."""
        rows: list = [None] * self.n
        for v, plist in enumerate(self.parents):
            rows[perm[v]] = tuple(Parent(p.index, perm[p.vertex], p.color) for p in plist)
        return RootedKTree(self.n, self.k, tuple(rows), {j: perm[v] for j, v in self.marks.items()})

    def disjoint_union(self, other: "RootedKTree") -> "RootedKTree":
        """Disjoint union; not a rooted k-tree itself, but types are defined on it."""
        if other.k != self.k:
            raise GraphInputError("arity mismatch")
        off = self.n
        rows = list(self.parents) + [
            tuple(Parent(p.index, p.vertex + off, p.color) for p in plist) for plist in other.parents
        ]
        return RootedKTree(self.n + other.n, self.k, tuple(rows), {})

    # -- accessors ----------------------------------------------------------

    @cached_property
    def _parent_table(self) -> tuple[dict[int, Parent], ...]:
        return tuple({p.index: p for p in plist} for plist in self.parents)

    @cached_property
    def _children_table(self) -> dict[tuple[int, int], tuple[int, ...]]:
        table: dict[tuple[int, int], list[int]] = {}
        for v, plist in enumerate(self.parents):
            for p in plist:
                table.setdefault((p.vertex, p.index), []).append(v)
        return {key: tuple(sorted(vs)) for key, vs in table.items()}

    @cached_property
    def _edge_table(self) -> dict[tuple[int, int], tuple[int, EdgeColor]]:
        """(tail, head) -> (parent index, color)."""
        return {(v, p.vertex): (p.index, p.color) for v, plist in enumerate(self.parents) for p in plist}

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Undirected adjacency over all parent relations, sorted."""
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for v, plist in enumerate(self.parents):
            for p in plist:
                if p.vertex != v:
                    adj[v].add(p.vertex)
                    adj[p.vertex].add(v)
        return tuple(tuple(sorted(s)) for s in adj)

    @cached_property
    def mark_of(self) -> dict[int, int]:
        """vertex -> smallest mark index it carries."""
        out: dict[int, int] = {}
        for j, v in self.marks.items():
            out.setdefault(v, j)
        return out

    def i_parent(self, v: int, i: int) -> int | None:
        self._check_vertex(v)
        if not 1 <= i <= self.k:
            raise GraphInputError(f"parent index {i} outside [1, {self.k}]")
        p = self._parent_table[v].get(i)
        return None if p is None else p.vertex

    def i_children(self, v: int, i: int) -> tuple[int, ...]:
        self._check_vertex(v)
        return self._children_table.get((v, i), ())

    def edge(self, tail: int, head: int) -> tuple[int, EdgeColor] | None:
        """``(i, color)`` if ``head`` is the i-parent of ``tail``."""
        return self._edge_table.get((tail, head))

    def parent_color(self, v: int, i: int) -> EdgeColor | None:
        p = self._parent_table[v].get(i)
        return None if p is None else p.color

    def num_parents(self, v: int) -> int:
        return len(self.parents[v])

    def edges(self) -> Iterable[tuple[int, int, int, EdgeColor]]:
        """Yield ``(tail, head, index, color)``."""
        for v, plist in enumerate(self.parents):
            for p in plist:
                yield v, p.vertex, p.index, p.color

    def kept_edges(self) -> set[frozenset[int]]:
        return {frozenset((v, w)) for v, w, _, c in self.edges() if c == EdgeColor.KEPT}

    def initial_vertices(self) -> list[int]:
        return [v for v in range(self.n) if len(self.parents[v]) < self.k]

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise GraphInputError(f"vertex {v} out of range")

    def __eq__(self, other):
        if not isinstance(other, RootedKTree):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and [sorted((p.index, p.vertex, int(p.color)) for p in pl) for pl in self.parents]
            == [sorted((p.index, p.vertex, int(p.color)) for p in pl) for pl in other.parents]
            and dict(self.marks) == dict(other.marks)
        )

    def __hash__(self):
        return hash((self.n, self.k, tuple(tuple(sorted((p.index, p.vertex)) for p in pl) for pl in self.parents)))

    def __repr__(self):
        return f"RootedKTree(n={self.n}, k={self.k}, marks={dict(self.marks)})"


def validate_rooted_ktree(T: RootedKTree) -> ValidationReport:
    """Check every structural rule of a rooted k-tree and report violations by rule name.

    Rules: ``parent-index`` (indices form [l] without repeats, parents distinct),
    ``self-loop``, ``acyclicity``, ``parent tournament`` (the i-parent points to
    the i'-parent for i < i'), ``parent order`` (that edge is an i''-edge with
    i'' <= i'), ``initial tournament`` (at most k vertices lack a full parent
    set and they are pairwise adjacent), ``marks`` (no vertex carries two marks).
    """
    out: list[Violation] = []
    for v, plist in enumerate(T.parents):
        idx = sorted(p.index for p in plist)
        if idx != list(range(1, len(idx) + 1)):
            out.append(Violation("parent-index", (v,)))
        targets = [p.vertex for p in plist]
        if len(set(targets)) != len(targets):
            out.append(Violation("parent-index", (v,)))
        if v in targets:
            out.append(Violation("self-loop", (v,)))

    cycle = _find_cycle(T)
    if cycle:
        out.append(Violation("acyclicity", tuple(cycle)))

    for v in range(T.n):
        table = T._parent_table[v]
        for i in sorted(table):
            for i2 in sorted(table):
                if i2 <= i:
                    continue
                w, w2 = table[i].vertex, table[i2].vertex
                if w == w2:
                    continue
                e = T.edge(w, w2)
                if e is None:
                    out.append(Violation("parent tournament", (v, w, w2)))
                elif e[0] > i2:
                    out.append(Violation("parent order", (v, w, w2)))

    initial = T.initial_vertices()
    if len(initial) > T.k:
        out.append(Violation("initial tournament", tuple(initial)))
    else:
        init_set = set(initial)
        for a in initial:
            for b in initial:
                if a < b and T.edge(a, b) is None and T.edge(b, a) is None:
                    out.append(Violation("initial tournament", (a, b)))
            for p in T.parents[a]:
                if p.vertex not in init_set:
                    out.append(Violation("initial tournament", (a, p.vertex)))

    seen: dict[int, int] = {}
    for j, v in T.marks.items():
        if v in seen:
            out.append(Violation("marks", (v,)))
        seen[v] = j
    return ValidationReport(tuple(out))


def _find_cycle(T: RootedKTree) -> list[int]:
    state = [0] * T.n  # 0 new, 1 on stack, 2 done
    for root in range(T.n):
        if state[root]:
            continue
        stack = [(root, iter(T.parents[root]))]
        path = [root]
        state[root] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[v] = 2
                stack.pop()
                path.pop()
                continue
            w = nxt.vertex
            if state[w] == 1:
                return path[path.index(w):]
            if state[w] == 0:
                state[w] = 1
                stack.append((w, iter(T.parents[w])))
                path.append(w)
    return []


def transitive_tournament(t: int, k: int) -> RootedKTree:
    """Vertex ``a`` points to every ``b > a``; its i-parent is ``a + i``."""
    return RootedKTree.from_parent_lists(k, [list(range(a + 1, t)) for a in range(t)])


def order_clique(T_parents: Sequence[Sequence[int]], clique: Sequence[int]) -> list[int]:
    """Order a transitive tournament along its directed Hamiltonian path.

    ``T_parents[v]`` lists the out-neighbours of ``v``; the first vertex of the
    path has the most out-neighbours inside the clique.
    """
    cs = set(clique)
    return sorted(clique, key=lambda v: -sum(1 for w in T_parents[v] if w in cs))


def generate_random_rooted_ktree(n: int, k: int, seed: int, fill_prob: float = 0.0) -> RootedKTree:
    """Random rooted k-tree grown by the recursive definition.

    Each new vertex attaches to a k-clique drawn uniformly from the list of
    k-cliques created so far.  Edge colors are FILL with probability
    ``fill_prob``.
    """
    if n < 1 or k < 1:
        raise GraphInputError("need n >= 1 and k >= 1")
    rng = random.Random(seed)
    t = min(n, k)
    plists: list[list[int]] = [list(range(a + 1, t)) for a in range(t)]
    cliques: list[tuple[int, ...]] = [tuple(range(t))] if t == k else []
    for v in range(t, n):
        base = rng.choice(cliques)
        ordered = order_clique(plists, base)
        plists.append(ordered)
        full = (v, *ordered)
        for drop in range(1, k + 1):
            cliques.append(tuple(x for j, x in enumerate(full) if j != drop))
    colors = [[1 if rng.random() < fill_prob else 0 for _ in pl] for pl in plists]
    return RootedKTree.from_parent_lists(k, plists, colors)
