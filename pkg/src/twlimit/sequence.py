"""Graph sequences: greedy null-partition marking and ν/μ estimation over a trailing window."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import kernels
from .graph import GraphInputError, RootedKTree
from .hintikka import INF, ChainPrefix, TypeTrie, type_from_fingerprint

UNSTABLE = "UNSTABLE"


class CapExceeded(RuntimeError):
    pass


class MissingMarks(ValueError):
    pass


class SequenceTooShort(ValueError):
    pass


class GraphSequence(list):
    """Graphs of one arity with strictly increasing orders."""

    def __init__(self, graphs: Iterable[RootedKTree] = ()):
        super().__init__(graphs)
        if not self:
            return
        k = self[0].k
        for a, b in zip(self, self[1:]):
            if b.n <= a.n:
                raise GraphInputError("graph orders must strictly increase")
        if any(T.k != k for T in self):
            raise GraphInputError("all graphs must share the arity k")

    @property
    def k(self) -> int:
        return self[0].k


# -- null partitions ------------------------------------------------------------------


@dataclass
class MarkingPlan:
    eps: Fraction
    radius: int
    cap: int
    assignments: list[dict[int, int]]
    residual: list[Fraction]
    type_stable: dict[int, bool] = field(default_factory=dict)

    @property
    def mark_counts(self) -> list[int]:
        return [len(a) for a in self.assignments]


def as_fraction(x) -> Fraction:
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def _csr(T: RootedKTree):
    return kernels.csr(T.neighbors)


def greedy_marks(T: RootedKTree, eps, cap: int = 64) -> list[int]:
    """Vertices removed greedily until every remaining component has at most eps*n vertices.

    Each step removes a vertex minimising the largest remaining component;
    ties go to the lexicographically smallest descending size vector, then
    larger degree, then smaller id.
    """
    indptr, indices = _csr(T)
    removed = bytearray(T.n)
    chosen: list[int] = []
    limit = as_fraction(eps) * T.n
    while True:
        sizes = kernels.component_sizes(indptr, indices, removed)
        if not sizes or sizes[0] <= limit:
            return chosen
        if len(chosen) >= cap:
            raise CapExceeded(f"more than {cap} marks needed for n={T.n} at eps={eps}")
        cands = [v for v in range(T.n) if not removed[v]]
        largest = kernels.largest_after_removal(indptr, indices, removed, cands)
        low = min(largest)
        scored = []
        for s, v in zip(largest, cands):
            if s == low:
                removed[v] = 1
                scored.append((kernels.component_sizes(indptr, indices, removed), -len(T.neighbors[v]), v))
                removed[v] = 0
        best = min(scored)[2]
        removed[best] = 1
        chosen.append(best)


def mark_null_partition(seq: Sequence[RootedKTree], eps, r: int = 2, cap: int = 64):
    """Mark every graph greedily; U_j is the j-th vertex chosen.

    ``r`` is the type depth at which the report checks whether the j-th
    mark has the same type in every graph that carries it.
    """
    from .hintikka import vertex_type

    eps = as_fraction(eps)
    out, assignments, residual = [], [], []
    for T in seq:
        if T.marks:
            raise GraphInputError("graphs must be unmarked")
        chosen = greedy_marks(T, eps, cap)
        marks = {j: v for j, v in enumerate(chosen, 1)}
        M = T.with_marks(marks)
        out.append(M)
        assignments.append(marks)
        residual.append(largest_residual_fraction(M, len(chosen)))
    stable = {}
    for j in sorted({j for a in assignments for j in a}):
        types = {vertex_type(M, a[j], r) for M, a in zip(out, assignments) if j in a}
        stable[j] = len(types) == 1
    return GraphSequence(out), MarkingPlan(eps, r, cap, assignments, residual, stable)


def largest_residual_fraction(T: RootedKTree, k0: int, allow_missing: bool = False) -> Fraction:
    removed = bytearray(T.n)
    for j in range(1, k0 + 1):
        if j not in T.marks:
            if allow_missing:
                continue
            raise MissingMarks(f"mark U{j} missing in graph of order {T.n}")
        removed[T.marks[j]] = 1
    indptr, indices = _csr(T)
    sizes = kernels.component_sizes(indptr, indices, removed)
    return Fraction(sizes[0] if sizes else 0, max(T.n, 1))


@dataclass
class NullPartitionReport:
    eps: Fraction
    k0: int
    fractions: list[Fraction]
    n0: int | None

    @property
    def passed(self) -> bool:
        return self.n0 is not None


def check_null_partitioned(seq: Sequence[RootedKTree], eps, k0: int, allow_missing: bool = False) -> NullPartitionReport:
    """Largest residual component per graph; ``n0`` is the first index from which all stay within eps."""
    eps = as_fraction(eps)
    fr = [largest_residual_fraction(T, k0, allow_missing) for T in seq]
    n0 = None
    for idx in range(len(fr) - 1, -1, -1):
        if fr[idx] > eps:
            break
        n0 = idx
    return NullPartitionReport(eps, k0, fr, n0)


# -- measure estimation ---------------------------------------------------------------------


@dataclass
class MeasureEstimate:
    depth: int
    window: int
    growth: float
    nu: dict[ChainPrefix, object]
    mu: dict[ChainPrefix, Fraction]
    variation: dict[ChainPrefix, Fraction]
    counts: dict[ChainPrefix, list[int]]
    orders: list[int]
    trie: TypeTrie | None = None

    def prefixes(self, depth: int | None = None) -> list[ChainPrefix]:
        depth = self.depth if depth is None else depth
        return sorted((p for p in self.nu if p.depth == depth), key=lambda p: p.fingerprint)

    @property
    def support(self) -> list[ChainPrefix]:
        return [p for p in self.prefixes() if self.nu[p] == INF and self.mu[p] > 0]

    def finite_mass_flags(self) -> list[ChainPrefix]:
        """Finite-ν prefixes still carrying mass in the last graph (their mass should vanish in the limit)."""
        return [p for p in self.prefixes() if isinstance(self.nu[p], int) and self.mu[p] > 0]

    def unstable(self) -> list[ChainPrefix]:
        return [p for p in self.prefixes() if self.nu[p] == UNSTABLE]

    def to_json(self) -> dict:
        def nu_val(x):
            return "inf" if x == INF else x

        rows = []
        for p in sorted(self.nu, key=lambda p: (p.depth, p.fingerprint)):
            rows.append(
                {
                    "chain": [t.fingerprint for t in p.types],
                    "nu": nu_val(self.nu[p]),
                    "mu": str(self.mu[p]),
                    "variation": str(self.variation[p]),
                    "counts": self.counts[p],
                }
            )
        return {"depth": self.depth, "window": self.window, "growth": self.growth, "orders": self.orders, "prefixes": rows}

    @classmethod
    def from_json(cls, data: dict) -> "MeasureEstimate":
        nu, mu, var, counts = {}, {}, {}, {}
        for row in data["prefixes"]:
            p = ChainPrefix(tuple(type_from_fingerprint(d, fp) for d, fp in enumerate(row["chain"], 1)))
            v = row["nu"]
            nu[p] = INF if v == "inf" else v
            mu[p] = Fraction(row["mu"])
            var[p] = Fraction(row["variation"])
            counts[p] = list(row["counts"])
        return cls(data["depth"], data["window"], data["growth"], nu, mu, var, counts, list(data["orders"]))


def classify_counts(window: Sequence[int], growth: float) -> object:
    if all(c == window[0] for c in window):
        return window[0]
    if all(a <= b for a, b in zip(window, window[1:])) and window[-1] > growth * window[0]:
        return INF
    return UNSTABLE


def estimate_measures(seq: Sequence[RootedKTree], D: int, w: int, growth: float = 4.0, trie: TypeTrie | None = None) -> MeasureEstimate:
    """ν̂ and μ̂ for every chain prefix of depth 1..D, judged over the last ``w`` graphs."""
    if w < 2 or len(seq) < w:
        raise SequenceTooShort(f"need at least w={w} >= 2 graphs, got {len(seq)}")
    trie = trie if trie is not None else TypeTrie(seq, D)
    per_graph = []
    for chains in trie.chains:
        c = Counter()
        for ch in chains:
            for d in range(1, D + 1):
                c[ch.restrict(d)] += 1
        per_graph.append(c)
    keys = set().union(*per_graph)
    tail = per_graph[-w:]
    tail_orders = [T.n for T in seq[-w:]]
    nu, mu, var, counts = {}, {}, {}, {}
    for p in keys:
        window = [c[p] for c in tail]
        if not any(window):
            continue
        nu[p] = classify_counts(window, growth)
        mu[p] = Fraction(window[-1], tail_orders[-1])
        fracs = [Fraction(x, n) for x, n in zip(window, tail_orders)]
        var[p] = max(abs(a - b) for a, b in zip(fracs, fracs[1:]))
        counts[p] = [c[p] for c in per_graph]
    return MeasureEstimate(D, w, growth, nu, mu, var, counts, [T.n for T in seq], trie)
