"""Finite-depth limit machine: vertices, parent maps and sampling.

A machine stores type-level tables keyed by depth-D chain prefixes: the
i-parent prefix, edge class, importance, important path templates and the
parent-to-parent relation.  ``parent`` evaluates the parent map exactly on
FINITE atoms (ceiling rule) and CONTINUUM points (template replay).
Construction from a graph sequence lives in ``machine_build``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .dyadic import Dyadic, TorusCoord, zeta
from .graph import EdgeColor
from .hintikka import INF, ChainPrefix, type_from_fingerprint


class Instability(RuntimeError):
    """A type-level fact needed here could not be read consistently off the witnesses."""


class TruncationError(Instability):
    """The finite-depth tables cannot answer this query (e.g. a FINITE atom with an infinite parent)."""


class EmptySupport(ValueError):
    pass


@dataclass(frozen=True)
class EdgeClass:
    m: int | None  # None means infinitary

    @property
    def finitary(self) -> bool:
        return self.m is not None

    def __str__(self):
        return f"FINITARY({self.m})" if self.finitary else "INFINITARY"


INFINITARY = EdgeClass(None)

UNBOUNDED = -1  # profile count that grows along the window


@dataclass(frozen=True)
class Step:
    index: int
    edge: EdgeClass
    head: ChainPrefix
    higher_finitary: bool


@dataclass(frozen=True)
class PathTemplate:
    steps: tuple[Step, ...]

    def __len__(self):
        return len(self.steps)

    def indices(self) -> tuple[int, ...]:
        return tuple(s.index for s in self.steps)

    def ell_inf(self, nu: dict, start: ChainPrefix) -> int:
        heads = [start] + [s.head for s in self.steps]
        return max(j for j, p in enumerate(heads) if nu[p] == INF) if nu[start] == INF else -1


@dataclass(frozen=True)
class FiniteVertex:
    prefix: ChainPrefix
    index: int

    def describe(self) -> str:
        return f"FINITE {self.prefix.fingerprint} {self.index}"


@dataclass(frozen=True)
class ContinuumVertex:
    prefix: ChainPrefix
    n0: Dyadic
    hn: tuple[tuple[TorusCoord, Dyadic], ...]

    def describe(self) -> str:
        parts = [self.n0.hex()] + [f"{h.hex()},{n.hex()}" for h, n in self.hn]
        return f"CONTINUUM {self.prefix.fingerprint} " + " ".join(parts)


LimitVertex = FiniteVertex | ContinuumVertex


@dataclass
class LimitMachine:
    k: int
    D: int
    path_bound: int
    nu: dict[ChainPrefix, object]
    mu: dict[ChainPrefix, Fraction]
    parent_prefix: dict[tuple[ChainPrefix, int], ChainPrefix] = field(default_factory=dict)
    color: dict[tuple[ChainPrefix, int], EdgeColor] = field(default_factory=dict)
    edge_class: dict[tuple[ChainPrefix, int], EdgeClass] = field(default_factory=dict)
    important: dict[tuple[ChainPrefix, int], bool] = field(default_factory=dict)
    templates: dict[tuple[ChainPrefix, int], tuple[PathTemplate, ...]] = field(default_factory=dict)
    relation: dict[tuple[ChainPrefix, int, int], int] = field(default_factory=dict)
    child_profiles: dict[tuple[ChainPrefix, int], frozenset] = field(default_factory=dict)
    neighbor_profiles: dict[ChainPrefix, frozenset] = field(default_factory=dict)
    marks: dict[ChainPrefix, frozenset[int]] = field(default_factory=dict)
    unstable: dict[tuple[ChainPrefix, int], str] = field(default_factory=dict)

    # -- basic queries ------------------------------------------------------------

    @property
    def guaranteed_depth(self) -> int:
        """Depth to which returned parent prefixes are implied by the child's prefix."""
        return self.D - 1

    def prefixes(self) -> list[ChainPrefix]:
        return sorted(self.nu, key=lambda p: p.fingerprint)

    @property
    def support(self) -> list[ChainPrefix]:
        return [p for p in self.prefixes() if self.nu[p] == INF and self.mu.get(p, 0) > 0]

    def finite_prefixes(self) -> list[ChainPrefix]:
        return [p for p in self.prefixes() if isinstance(self.nu[p], int)]

    def _lookup(self, table: dict, key, what: str):
        if key in table:
            return table[key]
        reason = self.unstable.get(key[:2] if isinstance(key, tuple) else key)
        if reason:
            raise Instability(f"{what} of {key[0]} / {key[1:]}: {reason}")
        raise TruncationError(f"no {what} recorded for {key[0]} / {key[1:]}")

    def has_parent(self, tau: ChainPrefix, i: int) -> bool:
        return (tau, i) in self.parent_prefix or (tau, i) in self.unstable

    def parent_indices(self, tau: ChainPrefix) -> list[int]:
        return [i for i in range(1, self.k + 1) if self.has_parent(tau, i)]

    def classify_edge(self, tau: ChainPrefix, i: int) -> EdgeClass:
        return self._lookup(self.edge_class, (tau, i), "edge class")

    def important_path(self, tau: ChainPrefix, i: int) -> PathTemplate:
        return self._lookup(self.templates, (tau, i), "path template")[0]

    def with_overrides(self, **tables) -> "LimitMachine":
        """Copy with some table entries replaced, e.g. ``with_overrides(relation={key: 2})``."""
        changes = {}
        for name, entries in tables.items():
            merged = dict(getattr(self, name))
            merged.update(entries)
            changes[name] = merged
        return dataclasses.replace(self, **changes)

    # -- parent map -----------------------------------------------------------------

    def parent(self, v: LimitVertex, i: int, template: PathTemplate | None = None) -> LimitVertex:
        if isinstance(v, FiniteVertex):
            return self._finite_parent(v, i)
        if template is None:
            template = self.important_path(v.prefix, i)
        return self.replay(v, template)

    def _finite_parent(self, v: FiniteVertex, i: int) -> FiniteVertex:
        target = self._lookup(self.parent_prefix, (v.prefix, i), "parent prefix")
        nu, nu2 = self.nu[v.prefix], self.nu[target]
        if not isinstance(nu2, int) or not isinstance(nu, int):
            raise TruncationError(f"FINITE atom of {v.prefix} has parent prefix {target} with nu={nu2}")
        return FiniteVertex(target, -(-v.index * nu2 // nu))

    def replay(self, v: ContinuumVertex, template: PathTemplate) -> LimitVertex:
        """Walk the template applying the coordinate update of each step up to the last infinite head."""
        ell_inf = template.ell_inf(self.nu, v.prefix)
        n0 = v.n0
        h = [hn[0] for hn in v.hn]
        n = [hn[1] for hn in v.hn]
        for step in template.steps[:ell_inf]:
            i2 = step.index
            if not step.edge.finitary:
                parts = zeta(2 * i2, n[i2 - 1])
                n0 = parts[0]
                for t in range(1, i2):
                    h[t - 1] = TorusCoord(parts[2 * t - 1])
                    n[t - 1] = parts[2 * t]
                h[i2 - 1] = h[i2 - 1].shift()
                n[i2 - 1] = parts[2 * i2 - 1]
            else:
                n0 = n0.mul_mod1(step.edge.m)
                if not step.higher_finitary:
                    h[i2 - 1] = h[i2 - 1].shift()
        head = template.steps[-1].head
        if ell_inf == len(template):
            return ContinuumVertex(head, n0, tuple(zip(h, n)))
        nu2 = self.nu[head]
        if not isinstance(nu2, int):
            raise Instability(f"head {head} after the last infinite step has nu={nu2}")
        nk = n[-1]
        return FiniteVertex(head, 1 + ((nu2 * nk.num) >> nk.bits))

    # -- sampling -------------------------------------------------------------------

    def _support_probs(self) -> tuple[list[ChainPrefix], np.ndarray]:
        sup = self.support
        if not sup:
            raise EmptySupport("no prefix with nu = inf and positive mass")
        w = np.array([float(self.mu[p]) for p in sup])
        return sup, w / w.sum()

    def sample_arrays(self, n: int, seed: int, chunk: int = 4096) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Chunks of (support index, 64-bit coordinate words); chunk c draws from SeedSequence([seed, c])."""
        sup, probs = self._support_probs()
        width = 2 * self.k + 1
        for c, start in enumerate(range(0, n, chunk)):
            size = min(chunk, n - start)
            rng = np.random.default_rng(np.random.SeedSequence([seed, c]))
            idx = rng.choice(len(sup), size=size, p=probs)
            words = rng.integers(0, np.iinfo(np.uint64).max, size=(size, width), dtype=np.uint64, endpoint=True)
            yield idx, words

    def vertex_from_words(self, prefix: ChainPrefix, words) -> ContinuumVertex:
        vals = [Dyadic(int(x), 64) for x in words]
        hn = tuple((TorusCoord(vals[2 * t + 1]), vals[2 * t + 2]) for t in range(self.k))
        return ContinuumVertex(prefix, vals[0], hn)

    def sample(self, n: int, seed: int) -> list[ContinuumVertex]:
        sup = self.support
        out = []
        for idx, words in self.sample_arrays(n, seed):
            out.extend(self.vertex_from_words(sup[a], row) for a, row in zip(idx.tolist(), words))
        return out

    def finite_atoms(self) -> list[FiniteVertex]:
        return [FiniteVertex(p, m) for p in self.finite_prefixes() for m in range(1, self.nu[p] + 1)]

    # -- serialisation -----------------------------------------------------------------

    def to_json(self) -> dict:
        def cls(e: EdgeClass):
            return "inf" if not e.finitary else e.m

        def nu_val(x):
            return "inf" if x == INF else x

        prefixes = [
            {
                "chain": [t.fingerprint for t in p.types],
                "nu": nu_val(self.nu[p]),
                "mu": str(self.mu.get(p, Fraction(0))),
                "marks": sorted(self.marks.get(p, ())),
                "neighbors": sorted(sorted(map(list, prof)) for prof in self.neighbor_profiles.get(p, ())),
            }
            for p in self.prefixes()
        ]
        edges = []
        keys = sorted(set(self.parent_prefix) | set(self.unstable), key=lambda x: (x[0].fingerprint, x[1]))
        for tau, i in keys:
            row = {"prefix": tau.fingerprint, "i": i}
            if (tau, i) in self.parent_prefix:
                row["parent"] = self.parent_prefix[(tau, i)].fingerprint
            if (tau, i) in self.color:
                row["color"] = int(self.color[(tau, i)])
            if (tau, i) in self.edge_class:
                row["class"] = cls(self.edge_class[(tau, i)])
            if (tau, i) in self.important:
                row["important"] = self.important[(tau, i)]
            if (tau, i) in self.templates:
                row["templates"] = [
                    [[s.index, cls(s.edge), s.head.fingerprint, s.higher_finitary] for s in t.steps]
                    for t in self.templates[(tau, i)]
                ]
            if (tau, i) in self.child_profiles:
                row["children"] = sorted(sorted(map(list, prof)) for prof in self.child_profiles[(tau, i)])
            if (tau, i) in self.unstable:
                row["unstable"] = self.unstable[(tau, i)]
            edges.append(row)
        relation = [
            [tau.fingerprint, a, b, i]
            for (tau, a, b), i in sorted(self.relation.items(), key=lambda x: (x[0][0].fingerprint, x[0][1:]))
        ]
        return {
            "format": "twlimit-machine/1",
            "k": self.k,
            "depth": self.D,
            "guaranteed_depth": self.guaranteed_depth,
            "path_bound": self.path_bound,
            "prefixes": prefixes,
            "edges": edges,
            "relation": relation,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LimitMachine":
        if data.get("format") != "twlimit-machine/1":
            raise ValueError("not a machine document")
        by_fp: dict[str, ChainPrefix] = {}
        nu, mu, nbrs, marks = {}, {}, {}, {}
        for row in data["prefixes"]:
            p = ChainPrefix(tuple(type_from_fingerprint(d, fp) for d, fp in enumerate(row["chain"], 1)))
            by_fp[p.fingerprint] = p
            nu[p] = INF if row["nu"] == "inf" else row["nu"]
            mu[p] = Fraction(row["mu"])
            marks[p] = frozenset(row["marks"])
            nbrs[p] = frozenset(tuple(tuple(x) for x in prof) for prof in row["neighbors"])

        def ecls(x):
            return INFINITARY if x == "inf" else EdgeClass(x)

        M = cls(data["k"], data["depth"], data["path_bound"], nu, mu, neighbor_profiles=nbrs, marks=marks)
        for row in data["edges"]:
            key = (by_fp[row["prefix"]], row["i"])
            if "parent" in row:
                M.parent_prefix[key] = by_fp[row["parent"]]
            if "color" in row:
                M.color[key] = EdgeColor(row["color"])
            if "class" in row:
                M.edge_class[key] = ecls(row["class"])
            if "important" in row:
                M.important[key] = row["important"]
            if "templates" in row:
                M.templates[key] = tuple(
                    PathTemplate(tuple(Step(i, ecls(c), by_fp[h], hf) for i, c, h, hf in t)) for t in row["templates"]
                )
            if "children" in row:
                M.child_profiles[key] = frozenset(tuple(tuple(x) for x in prof) for prof in row["children"])
            if "unstable" in row:
                M.unstable[key] = row["unstable"]
        for fp, a, b, i in data["relation"]:
            M.relation[(by_fp[fp], a, b)] = i
        return M
