"""Exact tree decompositions of small graphs and their rooted k-tree completion."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graph import EdgeColor, RootedKTree, order_clique
from .graphio import PlainGraph


class Infeasible(Exception):
    """No decomposition of the requested width exists."""


class DecompositionTimeout(Exception):
    """The branch-and-bound node budget ran out before a verdict."""


class WidthOverflow(ValueError):
    """A supplied decomposition is invalid or wider than k."""


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple[frozenset[int], ...]
    tree: tuple[tuple[int, int], ...]
    root: int

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.bags]
        for a, b in self.tree:
            adj[a].append(b)
            adj[b].append(a)
        return [sorted(x) for x in adj]


def validate_tree_decomposition(G: PlainGraph, D: TreeDecomposition, k: int | None = None) -> list[str]:
    """Return a list of problems; empty means ``D`` is a valid decomposition of ``G``."""
    problems = []
    m = len(D.bags)
    if G.n and not m:
        return ["no bags"]
    if k is not None and D.width > k:
        problems.append(f"width {D.width} exceeds {k}")
    if m and not 0 <= D.root < m:
        problems.append("root out of range")
    if len(D.tree) != max(m - 1, 0):
        problems.append("tree edge count is not bags-1")
    adj = D.adjacency()
    seen = {D.root} if m else set()
    queue = deque(seen)
    while queue:
        b = queue.popleft()
        for c in adj[b]:
            if c not in seen:
                seen.add(c)
                queue.append(c)
    if len(seen) != m:
        problems.append("bag tree is not connected")
    for v in range(G.n):
        holders = {i for i, bag in enumerate(D.bags) if v in bag}
        if not holders:
            problems.append(f"vertex {v} in no bag")
            continue
        start = min(holders)
        reach = {start}
        queue = deque([start])
        while queue:
            b = queue.popleft()
            for c in adj[b]:
                if c in holders and c not in reach:
                    reach.add(c)
                    queue.append(c)
        if reach != holders:
            problems.append(f"bags holding {v} are not connected")
    for e in G.edges:
        if not any(e <= bag for bag in D.bags):
            problems.append(f"edge {sorted(e)} in no bag")
    return problems


# -- exact search ---------------------------------------------------------------


def _eliminate(adj: dict[int, set[int]], v: int) -> dict[int, set[int]]:
    nb = adj[v]
    out = {u: set(s) for u, s in adj.items() if u != v}
    for u in nb:
        out[u].discard(v)
        out[u] |= nb - {u}
    return out


def _is_clique(adj, vs) -> bool:
    vs = list(vs)
    return all(vs[j] in adj[vs[i]] for i in range(len(vs)) for j in range(i + 1, len(vs)))


def _minor_min_width(adj: dict[int, set[int]]) -> int:
    """Lower bound on tree-width by repeated contraction of a min-degree vertex."""
    g = {u: set(s) for u, s in adj.items()}
    best = 0
    while g:
        d, u = min((len(s), u) for u, s in g.items())
        best = max(best, d)
        nb = g.pop(u)
        if not nb:
            continue
        _, w = min((len(g[x] & nb), x) for x in nb)
        for x in nb:
            g[x].discard(u)
        for x in nb - {w}:
            g[x].add(w)
            g[w].add(x)
        g[w].discard(w)
    return best


def elimination_order(G: PlainGraph, k: int, node_budget: int = 200_000) -> list[int]:
    """Find an elimination order of width <= k by branch and bound.

    Simplicial and almost-simplicial vertices of degree <= k are eliminated
    without branching (both reductions are safe for the decision problem).
    Failed remainders are memoised by their eliminated set.
    """
    adj0 = {v: set(s) for v, s in enumerate(G.adjacency())}
    failed: set[frozenset[int]] = set()
    nodes = 0

    def search(adj, done: frozenset[int], order: list[int]):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise DecompositionTimeout(f"node budget {node_budget} exhausted")
        while True:
            if len(adj) <= k + 1:
                return order + sorted(adj)
            forced = None
            for v in sorted(adj, key=lambda u: (len(adj[u]), u)):
                if len(adj[v]) > k:
                    break
                if _is_clique(adj, adj[v]) or any(_is_clique(adj, adj[v] - {u}) for u in adj[v]):
                    forced = v
                    break
            if forced is None:
                break
            adj = _eliminate(adj, forced)
            done = done | {forced}
            order = order + [forced]
        if done in failed:
            return None
        if _minor_min_width(adj) > k:
            failed.add(done)
            return None
        candidates = sorted((v for v in adj if len(adj[v]) <= k), key=lambda u: (len(adj[u]), u))
        for v in candidates:
            res = search(_eliminate(adj, v), done | {v}, order + [v])
            if res is not None:
                return res
        failed.add(done)
        return None

    res = search(adj0, frozenset(), [])
    if res is None:
        raise Infeasible(f"tree-width exceeds {k}")
    return res


def decomposition_from_order(G: PlainGraph, order: list[int]) -> TreeDecomposition:
    if G.n == 0:
        return TreeDecomposition((), (), 0)
    pos = {v: i for i, v in enumerate(order)}
    adj = {v: set(s) for v, s in enumerate(G.adjacency())}
    bags = []
    higher_of = []
    for v in order:
        hi = {u for u in adj[v] if pos[u] > pos[v]}
        bags.append(frozenset(hi | {v}))
        higher_of.append(hi)
        for a in hi:
            adj[a] |= hi - {a}
    edges = []
    roots = []
    for i, hi in enumerate(higher_of):
        if hi:
            edges.append((i, min(pos[u] for u in hi)))
        else:
            roots.append(i)
    last = len(order) - 1
    for r in roots:
        if r != last:
            edges.append((r, last))
    return _contract_nested(bags, edges, last)


def _contract_nested(bags: list[frozenset[int]], edges: list[tuple[int, int]], root: int) -> TreeDecomposition:
    """Merge every bag into a neighbouring bag that contains it; a merged root passes its role on."""
    nbrs: dict[int, set[int]] = {i: set() for i in range(len(bags))}
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    changed = True
    while changed:
        changed = False
        for a in sorted(nbrs):
            host = next((b for b in sorted(nbrs[a]) if bags[a] <= bags[b]), None)
            if host is None:
                continue
            for c in nbrs.pop(a):
                nbrs[c].discard(a)
                if c != host:
                    nbrs[c].add(host)
                    nbrs[host].add(c)
            root = host if root == a else root
            changed = True
            break
    keep = sorted(nbrs)
    idx = {old: new for new, old in enumerate(keep)}
    tree = sorted({(min(idx[a], idx[b]), max(idx[a], idx[b])) for a in keep for b in nbrs[a]})
    return TreeDecomposition(tuple(bags[i] for i in keep), tuple(tree), idx[root])


def exact_tree_decomposition(G: PlainGraph, k: int, node_budget: int = 200_000) -> TreeDecomposition:
    """Width-<=k decomposition or ``Infeasible``; ``DecompositionTimeout`` if the budget runs out."""
    return decomposition_from_order(G, elimination_order(G, k, node_budget))


# -- rooted k-tree completion -----------------------------------------------------


def encode_as_rooted_ktree(G: PlainGraph, D: TreeDecomposition, k: int) -> RootedKTree:
    """Complete ``G`` to a 2-edge-colored rooted k-tree along decomposition ``D``.

    Bags are visited breadth-first from the root and unplaced vertices of a
    bag are placed by increasing id.  The first k placed vertices form the
    initial tournament.  Later vertices take as parents their already placed
    bag-mates, padded to k from the clique of the most recently placed of
    them, preferring vertices of the nearest ancestor bag.
    """
    problems = validate_tree_decomposition(G, D, k)
    if problems:
        raise WidthOverflow("; ".join(problems))
    adj = G.adjacency()
    if G.n == 0:
        return RootedKTree(0, k, (), {})
    tree_adj = D.adjacency()
    bag_parent = {D.root: None}
    bfs = [D.root]
    for b in bfs:
        for c in tree_adj[b]:
            if c not in bag_parent:
                bag_parent[c] = b
                bfs.append(c)

    plists: dict[int, list[int]] = {}
    position: dict[int, int] = {}
    initial: list[int] = []

    def ancestor_rank(bag: int, x: int) -> int:
        steps, b = 0, bag
        while b is not None:
            if x in D.bags[b]:
                return steps
            b = bag_parent[b]
            steps += 1
        return steps + 1

    for b in bfs:
        for v in sorted(D.bags[b] - position.keys()):
            if len(position) < k:
                parents = order_clique(plists, list(position))
                initial.append(v)
            else:
                placed_here = [u for u in D.bags[b] if u in position]
                if placed_here:
                    s = max(placed_here, key=position.__getitem__)
                else:
                    anc = bag_parent[b] if bag_parent[b] is not None else b
                    s = max((u for u in D.bags[anc] if u in position), key=position.__getitem__, default=None)
                    if s is None:
                        s = max(position, key=position.__getitem__)
                pool = set(initial) if s in initial else {s, *plists[s]}
                need = k - len(placed_here)
                extra = sorted(pool - set(placed_here), key=lambda x: (ancestor_rank(b, x), x))[:need]
                parents = order_clique(plists, placed_here + extra)
            plists[v] = parents
            position[v] = len(position)

    rows = [plists[v] for v in range(G.n)]
    colors = [[0 if w in adj[v] else 1 for w in rows[v]] for v in range(G.n)]
    return RootedKTree.from_parent_lists(k, rows, colors)


def kept_subgraph(T: RootedKTree) -> PlainGraph:
    return PlainGraph(T.n, frozenset(T.kept_edges()))


def fill_edge_count(T: RootedKTree) -> int:
    return sum(1 for *_, c in T.edges() if c == EdgeColor.FILL)
