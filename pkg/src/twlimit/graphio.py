"""Line-oriented text formats.

k-tree files::

    ktree <n> <k>
    p <v> <i> <w> <c>     # w is the i-parent of v, c: 0 = KEPT, 1 = FILL
    m <j> <v>             # v satisfies U_j

Plain graph files::

    graph <n>
    e <u> <v>

Tree decomposition files::

    decomp <bags> <root>
    b <id> <v> <v> ...    # bag contents
    t <a> <b>             # tree edge between bags

Vertex ids are 0-based; ``#`` starts a comment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .graph import EdgeColor, GraphInputError, Parent, RootedKTree


@dataclass(frozen=True)
class PlainGraph:
    n: int
    edges: frozenset[frozenset[int]] = field(default_factory=frozenset)

    def __post_init__(self):
        for e in self.edges:
            if len(e) != 2:
                raise GraphInputError(f"self-loop or malformed edge {sorted(e)}")
            for v in e:
                if not 0 <= v < self.n:
                    raise GraphInputError(f"edge endpoint {v} out of range")

    @classmethod
    def from_edges(cls, n: int, edges) -> "PlainGraph":
        return cls(n, frozenset(frozenset(e) for e in edges))

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for e in self.edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        return adj


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _ints(tokens, lineno, count):
    if len(tokens) != count:
        raise GraphInputError(f"line {lineno}: expected {count} fields, got {len(tokens)}")
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise GraphInputError(f"line {lineno}: non-integer field") from None


def parse_ktree(text: str) -> RootedKTree:
    it = _lines(text)
    header = next(it, None)
    if header is None or header[1][0] != "ktree":
        raise GraphInputError("missing 'ktree <n> <k>' header")
    n, k = _ints(header[1][1:], header[0], 2)
    rows: list[list[Parent]] = [[] for _ in range(max(n, 0))]
    marks: dict[int, int] = {}
    for lineno, tok in it:
        kind = tok[0]
        if kind == "p":
            v, i, w, c = _ints(tok[1:], lineno, 4)
            if not 0 <= v < n:
                raise GraphInputError(f"line {lineno}: vertex {v} out of range")
            if c not in (0, 1):
                raise GraphInputError(f"line {lineno}: color must be 0 or 1")
            rows[v].append(Parent(i, w, EdgeColor(c)))
        elif kind == "m":
            j, v = _ints(tok[1:], lineno, 2)
            if j in marks:
                raise GraphInputError(f"line {lineno}: mark U{j} assigned twice")
            marks[j] = v
        else:
            raise GraphInputError(f"line {lineno}: unknown record {kind!r}")
    for row in rows:
        row.sort(key=lambda p: p.index)
    return RootedKTree(n, k, tuple(tuple(r) for r in rows), marks)


def format_ktree(T: RootedKTree) -> str:
    out = [f"ktree {T.n} {T.k}"]
    for v, w, i, c in T.edges():
        out.append(f"p {v} {i} {w} {int(c)}")
    for j, v in T.marks.items():
        out.append(f"m {j} {v}")
    return "\n".join(out) + "\n"


def parse_plain_graph(text: str) -> PlainGraph:
    it = _lines(text)
    header = next(it, None)
    if header is None or header[1][0] != "graph":
        raise GraphInputError("missing 'graph <n>' header")
    (n,) = _ints(header[1][1:], header[0], 1)
    edges = set()
    for lineno, tok in it:
        if tok[0] != "e":
            raise GraphInputError(f"line {lineno}: unknown record {tok[0]!r}")
        u, v = _ints(tok[1:], lineno, 2)
        if u == v:
            raise GraphInputError(f"line {lineno}: self-loop")
        edges.add(frozenset((u, v)))
    return PlainGraph(n, frozenset(edges))


def format_plain_graph(G: PlainGraph) -> str:
    out = [f"graph {G.n}"]
    for a, b in sorted(tuple(sorted(e)) for e in G.edges):
        out.append(f"e {a} {b}")
    return "\n".join(out) + "\n"


def read_ktree(path) -> RootedKTree:
    return parse_ktree(Path(path).read_text())


def read_plain_graph(path) -> PlainGraph:
    return parse_plain_graph(Path(path).read_text())


def parse_decomposition(text: str):
    from .encoder import TreeDecomposition

    it = _lines(text)
    header = next(it, None)
    if header is None or header[1][0] != "decomp":
        raise GraphInputError("missing 'decomp <bags> <root>' header")
    m, root = _ints(header[1][1:], header[0], 2)
    bags: list[frozenset[int] | None] = [None] * max(m, 0)
    tree = []
    for lineno, tok in it:
        if tok[0] == "b":
            ids = _ints(tok[1:], lineno, len(tok) - 1)
            if not ids or not 0 <= ids[0] < m:
                raise GraphInputError(f"line {lineno}: bad bag id")
            bags[ids[0]] = frozenset(ids[1:])
        elif tok[0] == "t":
            a, b = _ints(tok[1:], lineno, 2)
            tree.append((a, b))
        else:
            raise GraphInputError(f"line {lineno}: unknown record {tok[0]!r}")
    if any(b is None for b in bags):
        raise GraphInputError("some bags are not listed")
    return TreeDecomposition(tuple(bags), tuple(tree), root)


def format_decomposition(D) -> str:
    out = [f"decomp {len(D.bags)} {D.root}"]
    out += [" ".join(["b", str(i)] + [str(v) for v in sorted(b)]) for i, b in enumerate(D.bags)]
    out += [f"t {a} {b}" for a, b in D.tree]
    return "\n".join(out) + "\n"
