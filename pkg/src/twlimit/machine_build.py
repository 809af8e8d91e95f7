"""Building a LimitMachine from a marked graph sequence.

Parent prefixes are read at full depth D from the witnesses in the trailing
window.  Prefixes with finite ν must agree on every witness.  Prefixes with
ν = ∞ may have a minority of exceptional witnesses (vertices near the
truncation boundary) as long as their share does not grow along the window.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from typing import Sequence

from .graph import RootedKTree
from .hintikka import INF, ChainPrefix
from .limit import INFINITARY, UNBOUNDED, EdgeClass, LimitMachine, PathTemplate, Step
from .sequence import UNSTABLE, MeasureEstimate, estimate_measures


class _Builder:
    def __init__(self, est: MeasureEstimate, graphs: Sequence[RootedKTree], L: int, witness_cap: int, template_cap: int):
        self.est = est
        self.trie = est.trie
        self.graphs = list(graphs)
        self.k = self.graphs[0].k
        self.D = est.depth
        self.L = L
        self.witness_cap = witness_cap
        self.template_cap = template_cap
        self.window = list(range(len(self.graphs) - est.window, len(self.graphs)))
        self.last = self.window[-1]
        nu = {p: est.nu[p] for p in est.prefixes()}
        mu = {p: est.mu[p] for p in est.prefixes()}
        self.M = LimitMachine(self.k, self.D, L, nu, mu)
        self.dominant: dict[tuple[ChainPrefix, int], dict[int, list[int]]] = {}

    def chain(self, g: int, v: int) -> ChainPrefix:
        return self.trie.chains[g][v]

    def witnesses_by_graph(self, tau: ChainPrefix) -> dict[int, list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for g, v in self.trie.witnesses(tau):
            if g in self.window:
                out[g].append(v)
        return out

    def fail(self, key, reason: str):
        self.M.unstable.setdefault(key, reason)

    # -- parent prefixes, colors, edge classes ------------------------------------------------

    def parents_and_classes(self):
        M = self.M
        for tau in M.prefixes():
            nu = M.nu[tau]
            wit = self.witnesses_by_graph(tau)
            for i in range(1, self.k + 1):
                key = (tau, i)
                if nu == UNSTABLE:
                    if any(self.graphs[g].i_parent(v, i) is not None for g, vs in wit.items() for v in vs):
                        self.fail(key, "nu is unstable")
                    continue
                per_graph = {
                    g: [(v, self.graphs[g].i_parent(v, i)) for v in vs] for g, vs in wit.items()
                }
                have = {p is not None for pairs in per_graph.values() for _, p in pairs}
                if have == {False}:
                    continue
                if len(have) > 1:
                    self.fail(key, "i-parent exists for some witnesses only")
                    continue
                last_pairs = per_graph.get(self.last, [])
                if not last_pairs:
                    self.fail(key, "no witness in the last graph")
                    continue
                modes = Counter(self.chain(self.last, p) for _, p in last_pairs)
                target = min(modes.items(), key=lambda kv: (-kv[1], kv[0].fingerprint))[0]
                shares = []
                dom: dict[int, list[int]] = {}
                for g in sorted(per_graph):
                    pairs = per_graph[g]
                    good = [v for v, p in pairs if self.chain(g, p) == target]
                    dom[g] = good
                    shares.append((len(pairs) - len(good)) / len(pairs))
                if nu != INF and any(shares):
                    self.fail(key, "witnesses of a finite prefix disagree on the parent prefix")
                    continue
                if any(a < b for a, b in zip(shares, shares[1:])) or shares[-1] >= 0.5:
                    self.fail(key, f"exceptional parent share {shares} is not shrinking")
                    continue
                colors = {self.graphs[g].parent_color(v, i) for g, vs in dom.items() for v in vs}
                if len(colors) != 1:
                    self.fail(key, "edge color differs between witnesses")
                    continue
                M.parent_prefix[key] = target
                M.color[key] = colors.pop()
                self.dominant[key] = dom
                cls = self.edge_class_of(tau, i, dom, nu)
                if cls is not None:
                    M.edge_class[key] = cls

    def edge_class_of(self, tau, i, dom, nu) -> EdgeClass | None:
        modes = []
        for g in sorted(dom):
            if not dom[g]:
                continue
            T = self.graphs[g]
            heads = sorted({T.i_parent(v, i) for v in dom[g]})
            counts = [sum(1 for c in T.i_children(h, i) if self.chain(g, c) == tau) for h in heads]
            cnt = Counter(counts)
            if nu != INF and len(cnt) > 1:
                self.fail((tau, i), f"heads disagree on the child count: {sorted(cnt)}")
                return None
            modes.append(min(cnt.items(), key=lambda kv: (-kv[1], kv[0]))[0])
        if all(m == modes[0] for m in modes):
            return EdgeClass(modes[0])
        if all(a <= b for a, b in zip(modes, modes[1:])):
            return INFINITARY
        self.fail((tau, i), f"child count per head is neither stable nor growing: {modes}")
        return None

    # -- detours and importance -----------------------------------------------------------------

    def vertex_edge_class(self, g: int, u: int, j: int) -> EdgeClass | None:
        return self.M.edge_class.get((self.chain(g, u), j))

    def detours(self, g: int, v: int, i: int, cls: EdgeClass, limit: int | None = None):
        """Directed paths v -> i-parent of length 2..L that qualify as detours, shortest first."""
        T = self.graphs[g]
        target = T.i_parent(v, i)
        found = []
        layer = [(v, ())]
        for _ in range(self.L):
            nxt = []
            for u, path in layer:
                for p in sorted(T.parents[u], key=lambda p: p.index):
                    j = p.index
                    if cls.finitary:
                        if j >= i:
                            continue
                    elif j >= i:
                        ec = self.vertex_edge_class(g, u, j)
                        if ec is None or not ec.finitary:
                            continue
                    step = path + ((u, j),)
                    if p.vertex == target:
                        if len(step) >= 2:
                            found.append(step)
                            if limit and len(found) >= limit:
                                return found
                    else:
                        nxt.append((p.vertex, step))
            layer = nxt
        return found

    def canonical(self, key) -> list[tuple[int, int]]:
        vs = sorted(self.dominant[key].get(self.last, []))
        return [(self.last, v) for v in vs[: self.witness_cap]]

    def importance(self):
        M = self.M
        for key, cls in sorted(M.edge_class.items(), key=lambda kv: (kv[0][0].fingerprint, kv[0][1])):
            tau, i = key
            verdicts = {not self.detours(g, v, i, cls, limit=1) for g, v in self.canonical(key)}
            if len(verdicts) != 1:
                self.fail(key, "witnesses disagree on whether the edge has a detour")
                continue
            M.important[key] = verdicts.pop()

    # -- important path templates -------------------------------------------------------------------

    def rewrite(self, g: int, v: int, i: int) -> list[tuple[int, int]] | None:
        """Replace non-important edges by detours until none is left."""
        path = [(v, i)]
        for _ in range(10_000):
            for pos, (u, j) in enumerate(path):
                flag = self.M.important.get((self.chain(g, u), j))
                if flag is None:
                    return None
                if not flag:
                    cls = self.M.edge_class[(self.chain(g, u), j)]
                    det = self.detours(g, u, j, cls, limit=1)
                    if not det:
                        return None
                    path = path[:pos] + list(det[0]) + path[pos + 1:]
                    break
            else:
                return path
        return None

    def lift(self, g: int, path) -> PathTemplate | None:
        T = self.graphs[g]
        steps = []
        for u, j in path:
            cls = self.M.edge_class.get((self.chain(g, u), j))
            if cls is None:
                return None
            head = self.chain(g, T.i_parent(u, j))
            higher = False
            for j2 in range(j + 1, self.k + 1):
                if T.i_parent(T.i_parent(u, j), j2) is None:
                    continue
                c2 = self.M.edge_class.get((head, j2))
                imp = self.M.important.get((head, j2))
                if c2 is None or imp is None:
                    return None
                higher = higher or (c2.finitary and imp)
            steps.append(Step(j, cls, head, higher))
        return PathTemplate(tuple(steps))

    def important_paths(self, g: int, v: int, i: int) -> list[list[tuple[int, int]]]:
        """All directed paths to the i-parent of length <= L made of important edges (capped)."""
        T = self.graphs[g]
        target = T.i_parent(v, i)
        out = []

        def walk(u, path):
            if len(out) >= self.template_cap or len(path) >= self.L:
                return
            for p in sorted(T.parents[u], key=lambda p: p.index):
                if not self.M.important.get((self.chain(g, u), p.index), False):
                    continue
                step = path + [(u, p.index)]
                if p.vertex == target:
                    out.append(step)
                else:
                    walk(p.vertex, step)

        walk(v, [])
        return out

    def templates(self):
        M = self.M
        for key in sorted(M.parent_prefix, key=lambda kv: (kv[0].fingerprint, kv[1])):
            tau, i = key
            if key in M.unstable:
                continue
            lifted = set()
            canonical = None
            for g, v in self.canonical(key):
                path = self.rewrite(g, v, i)
                t = None if path is None else self.lift(g, path)
                if t is None:
                    break
                lifted.add(t)
                canonical = canonical or (g, v, t)
            else:
                if canonical is None:
                    continue
                if len(lifted) != 1:
                    self.fail(key, "witnesses yield different important path templates")
                    continue
                g, v, t = canonical
                if t.steps[-1].head != M.parent_prefix[key]:
                    self.fail(key, "template does not end at the parent prefix")
                    continue
                alts = [t]
                for path in self.important_paths(g, v, i):
                    alt = self.lift(g, path)
                    if alt is not None and alt not in alts:
                        alts.append(alt)
                M.templates[key] = tuple(alts)
                continue
            self.fail(key, f"no important path within length {self.L}")

    # -- relations and profiles ------------------------------------------------------------------------

    def profiles(self, g: int):
        """Per prefix: the distinct child-count and neighbour-count profiles of its witnesses in graph g."""
        T = self.graphs[g]
        chains = self.trie.chains[g]
        child_prof: dict = defaultdict(set)
        nbr_prof: dict = defaultdict(set)
        for v in range(T.n):
            tau = chains[v]
            if tau not in self.M.nu:
                continue
            for i in range(1, self.k + 1):
                cnt = Counter(chains[c].fingerprint for c in T.i_children(v, i))
                child_prof[(tau, i)].add(tuple(sorted(cnt.items())))
            cnt = Counter()
            for p in T.parents[v]:
                cnt[(chains[p.vertex].fingerprint, int(p.color))] += 1
            for i in range(1, self.k + 1):
                for c in T.i_children(v, i):
                    cnt[(chains[c].fingerprint, int(T.parent_color(c, i)))] += 1
            nbr_prof[tau].add(tuple(sorted((fp, col, n) for (fp, col), n in cnt.items())))
        return child_prof, nbr_prof

    def relations_and_profiles(self):
        M = self.M
        T = self.graphs[self.last]
        for (tau, a), dom in self.dominant.items():
            for b in range(a + 1, self.k + 1):
                if (tau, b) not in self.dominant:
                    continue
                rel = set()
                for v in dom.get(self.last, []):
                    pa, pb = T.i_parent(v, a), T.i_parent(v, b)
                    if pa is None or pb is None:
                        continue
                    e = T.edge(pa, pb)
                    rel.add(e[0] if e else None)
                if len(rel) == 1 and None not in rel:
                    M.relation[(tau, a, b)] = rel.pop()
                elif rel:
                    self.fail((tau, a), f"relation to the {b}-parent differs between witnesses")
        child_prof, nbr_prof = self.profiles(self.last)
        if len(self.window) > 1:
            prev_child, prev_nbr = self.profiles(self.window[-2])
            child_prof = _mark_growth(child_prof, prev_child)
            nbr_prof = _mark_growth(nbr_prof, prev_nbr)
        M.child_profiles = {key: frozenset(s) for key, s in child_prof.items()}
        M.neighbor_profiles = {key: frozenset(s) for key, s in nbr_prof.items()}
        chains = self.trie.chains[self.last]
        marks: dict = defaultdict(set)
        for j, v in T.marks.items():
            if j <= self.D:
                marks[chains[v]].add(j)
        M.marks = {p: frozenset(marks.get(p, ())) for p in M.nu}


def _mark_growth(cur: dict, prev: dict) -> dict:
    """Replace counts whose maximum grew since the previous graph by UNBOUNDED."""

    def maxima(table):
        out: dict = defaultdict(int)
        for key, profs in table.items():
            for prof in profs:
                for *label, n in prof:
                    out[(key, tuple(label))] = max(out[(key, tuple(label))], n)
        return out

    before, now = maxima(prev), maxima(cur)
    grown = {lk for lk, n in now.items() if n > before.get(lk, 0)}
    return {
        key: {tuple((*label, UNBOUNDED if (key, tuple(label)) in grown else n) for *label, n in prof) for prof in profs}
        for key, profs in cur.items()
    }


def build_machine(
    graphs: Sequence[RootedKTree],
    D: int,
    window: int = 3,
    growth: float = 4.0,
    L: int | None = None,
    witness_cap: int = 8,
    template_cap: int = 4,
    est: MeasureEstimate | None = None,
) -> LimitMachine:
    """Measure the sequence (unless ``est`` is given) and derive every type-level table of the machine."""
    if est is None or est.trie is None:
        est = estimate_measures(graphs, D, window, growth)
    L = max(2 * est.depth, 2) if L is None else L
    b = _Builder(est, graphs, L, witness_cap, template_cap)
    b.parents_and_classes()
    b.importance()
    b.templates()
    b.relations_and_profiles()
    return b.M
