"""Checks of the limit machine: exact structural checks and seeded Monte Carlo estimates.

Statistical checks sample prefixes from the machine's measure.  Membership
in a definable set depends on the prefix only, and the prefix of g_i(v) is
the tabled parent prefix of v's prefix.  Indicator sums therefore run over
all N sampled prefixes.  Full coordinate-exact parent evaluation runs on
the first ``exact_cap`` samples, which confirms the tabled prefix.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .graph import EdgeColor, RootedKTree
from .hintikka import ChainPrefix
from .limit import UNBOUNDED, FiniteVertex, Instability, LimitMachine, TruncationError

PASS, FAIL = "PASS", "FAIL"
SIGMA = 3.0
CHI2_ALPHA = 0.0027  # two-sided 3-sigma tail


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class DefinableSet:
    """Union of basic sets, optionally refined by a mark or by the color of the i-edge."""

    prefixes: frozenset[ChainPrefix]
    mark: int | None = None
    edge_color: tuple[int, EdgeColor] | None = None

    @classmethod
    def of(cls, prefixes: Iterable[ChainPrefix], **kw) -> "DefinableSet":
        return cls(frozenset(prefixes), **kw)

    def contains_prefix(self, M: LimitMachine, p: ChainPrefix) -> bool:
        if p not in self.prefixes:
            return False
        if self.mark is not None and self.mark not in M.marks.get(p, ()):
            return False
        if self.edge_color is not None:
            i, c = self.edge_color
            if M.color.get((p, i)) != c:
                return False
        return True

    def contains(self, M: LimitMachine, v) -> bool:
        return self.contains_prefix(M, v.prefix)


@dataclass
class CheckReport:
    name: str
    samples: int
    statistic: float
    tolerance: float
    verdict: str
    counterexample: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def line(self) -> str:
        s = f"{self.verdict} {self.name}: statistic={self.statistic:.6g} tolerance={self.tolerance:.6g} samples={self.samples}"
        if self.counterexample:
            s += f" counterexample={self.counterexample}"
        return s

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "statistic": self.statistic,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "counterexample": self.counterexample,
            "notes": list(self.notes),
        }


def _describe(*vs) -> str:
    return " | ".join(v.describe() if hasattr(v, "describe") else repr(v) for v in vs)


# -- exact checks -------------------------------------------------------------------------


def check_path_independence(M: LimitMachine, N: int, cap: int = 4, seed: int = 0) -> CheckReport:
    """Parents agree across all recorded important templates and with composition along a template's first edge."""
    mismatches, comparisons, most, truncated = 0, 0, 1, 0
    example = None
    for v in M.sample(N, seed):
        for i in M.parent_indices(v.prefix):
            temps = M.templates.get((v.prefix, i), ())[:cap]
            most = max(most, len(temps))
            ref = M.parent(v, i)
            got = [(t, M.parent(v, i, t)) for t in temps]
            for t in temps:
                j = t.steps[0].index
                if j < i and (v.prefix, j, i) in M.relation:
                    try:
                        w = M.parent(v, j)
                        got.append((t, M.parent(w, M.relation[(v.prefix, j, i)])))
                    except TruncationError:
                        truncated += 1
            for t, r in got:
                comparisons += 1
                if r != ref:
                    mismatches += 1
                    example = example or f"{v.describe()} i={i} template={t.indices()}: {_describe(r, ref)}"
    rep = CheckReport("path_independence", N, mismatches, 0, PASS if mismatches == 0 else FAIL, example)
    rep.notes.append(f"comparisons={comparisons} max_templates={most} truncated={truncated}")
    return rep


def check_edge_consistency(M: LimitMachine, N: int, seed: int = 0) -> CheckReport:
    mismatches, comparisons, truncated = 0, 0, 0
    example = None
    for w in M.sample(N, seed):
        idx = M.parent_indices(w.prefix)
        for a in idx:
            for b in idx:
                if b <= a or (w.prefix, a, b) not in M.relation:
                    continue
                w1, w2 = M.parent(w, a), M.parent(w, b)
                try:
                    got = M.parent(w1, M.relation[(w.prefix, a, b)])
                except TruncationError:
                    truncated += 1
                    continue
                comparisons += 1
                if got != w2:
                    mismatches += 1
                    example = example or f"{w.describe()} ({a},{b}): {_describe(got, w2)}"
    rep = CheckReport("edge_consistency", N, mismatches, 0, PASS if mismatches == 0 else FAIL, example)
    rep.notes.append(f"comparisons={comparisons} truncated={truncated}")
    return rep


def finite_atom_graph(M: LimitMachine) -> tuple[dict, int]:
    """Parent digraph on FINITE atoms and the number of parent edges lost to depth truncation."""
    graph: dict = {}
    truncated = 0
    for atom in M.finite_atoms():
        graph[atom] = set()
        for i in M.parent_indices(atom.prefix):
            try:
                graph[atom].add(M.parent(atom, i))
            except TruncationError:
                truncated += 1
    return graph, truncated


def check_acyclicity(M: LimitMachine, N: int, walk: int = 32, seed: int = 0) -> CheckReport:
    """Random parent walks never revisit a vertex, and the FINITE atom digraph has a topological order."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xAC]))
    example = None
    revisits = cut = 0
    for v in M.sample(N, seed):
        seen = {v}
        cur = v
        for _ in range(walk):
            idx = M.parent_indices(cur.prefix)
            if not idx:
                break
            try:
                cur = M.parent(cur, idx[int(rng.integers(len(idx)))])
            except TruncationError:
                cut += 1
                break
            if cur in seen:
                revisits += 1
                example = example or f"walk from {v.describe()} revisits {cur.describe()}"
                break
            seen.add(cur)
    graph, truncated = finite_atom_graph(M)
    try:
        TopologicalSorter(graph).prepare()
        cyc = None
    except CycleError as exc:
        cyc = exc.args[1]
    bad = revisits + (1 if cyc else 0)
    if cyc:
        example = example or "FINITE cycle: " + " -> ".join(x.describe() if hasattr(x, "describe") else str(x) for x in cyc)
    rep = CheckReport("acyclicity", N, bad, 0, PASS if bad == 0 else FAIL, example)
    rep.notes.append(f"finite_atoms={len(graph)} truncated_edges={truncated} truncated_walks={cut}")
    return rep


def check_finite_parent_maps(M: LimitMachine) -> CheckReport:
    """Every FINITE parent map is exactly D-to-1 with D = nu(tau)/nu(tau'), and nu(tau') divides nu(tau)."""
    bad, example, maps, truncated = 0, None, 0, 0
    for tau in M.finite_prefixes():
        for i in M.parent_indices(tau):
            target = M._lookup(M.parent_prefix, (tau, i), "parent prefix")
            if not isinstance(M.nu[target], int):
                truncated += 1
                continue
            maps += 1
            nu, nu2 = M.nu[tau], M.nu[target]
            if nu % nu2:
                bad += 1
                example = example or f"{tau} i={i}: nu={nu} not a multiple of {nu2}"
                continue
            pre = Counter(M.parent(FiniteVertex(tau, m), i).index for m in range(1, nu + 1))
            if set(pre) != set(range(1, nu2 + 1)) or set(pre.values()) != {nu // nu2}:
                bad += 1
                example = example or f"{tau} i={i}: preimage sizes {dict(pre)}"
    rep = CheckReport("finite_parent_maps", 0, bad, 0, PASS if bad == 0 else FAIL, example)
    rep.notes.append(f"maps={maps} truncated={truncated}")
    return rep


# -- Monte Carlo checks -----------------------------------------------------------------------


def _prefix_samples(M: LimitMachine, N: int, seed: int) -> np.ndarray:
    return np.concatenate([idx for idx, _ in M.sample_arrays(N, seed)]) if N else np.zeros(0, dtype=int)


def _confirm_parents(M: LimitMachine, i: int, N: int, seed: int, exact_cap: int) -> None:
    for v in M.sample(min(N, exact_cap), seed):
        if i in M.parent_indices(v.prefix):
            p = M.parent(v, i)
            if p.prefix != M.parent_prefix[(v.prefix, i)]:
                raise Instability(f"parent of {v.describe()} has prefix {p.prefix}")


def _mean_test(z: np.ndarray, name: str, one_sided: bool, tol_sigma: float = SIGMA) -> CheckReport:
    n = len(z)
    mean = float(z.mean()) if n else 0.0
    sd = float(z.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    tol = tol_sigma * sd
    ok = mean <= tol if one_sided else abs(mean) <= tol
    if sd == 0.0:
        ok = mean <= 0 if one_sided else mean == 0
    rep = CheckReport(name, n, mean, tol, PASS if ok else FAIL)
    rep.notes.append(f"sigma={sd:.3g}")
    return rep


def check_measure_semipreserving(
    M: LimitMachine,
    X: DefinableSet,
    Y: DefinableSet,
    i: int,
    d: int,
    N: int,
    seed: int = 0,
    check_precondition: bool = True,
    exact_cap: int = 20_000,
) -> CheckReport:
    """Estimate mu(g_i^{-1}(Y) ∩ X) - d*mu(Y); PASS iff within 3 sigma of zero."""
    if check_precondition:
        x_fps = {p.fingerprint for p in X.prefixes if X.contains_prefix(M, p)}
        for tau in Y.prefixes:
            if not Y.contains_prefix(M, tau):
                continue
            for prof in M.child_profiles.get((tau, i), {()}):
                counts = [c for fp, c in prof if fp in x_fps]
                got = math.inf if UNBOUNDED in counts else sum(counts)
                if got != d:
                    raise PreconditionError(f"a vertex of {tau} has {got} {i}-children in X, not {d}")
    sup = M.support
    in_x = np.array([X.contains_prefix(M, p) for p in sup])
    in_y = np.array([Y.contains_prefix(M, p) for p in sup])
    par_y = np.array([(p, i) in M.parent_prefix and Y.contains_prefix(M, M.parent_prefix[(p, i)]) for p in sup])
    _confirm_parents(M, i, N, seed, exact_cap)
    idx = _prefix_samples(M, N, seed)
    z = (in_x & par_y)[idx].astype(float) - d * in_y[idx].astype(float)
    rep = _mean_test(z, f"measure_semipreserving(i={i},d={d})", one_sided=False)
    rep.notes.append(f"lhs={float((in_x & par_y)[idx].mean()):.6f} rhs={d * float(in_y[idx].mean()):.6f}")
    return rep


def _neighbor_count(prof, S: DefinableSet, M: LimitMachine, color: EdgeColor | None) -> float:
    by_fp = {p.fingerprint: p for p in S.prefixes}
    counts = [n for fp, col, n in prof if fp in by_fp and S.contains_prefix(M, by_fp[fp]) and (color is None or col == int(color))]
    return math.inf if UNBOUNDED in counts else sum(counts)


def check_sfmtp(
    M: LimitMachine,
    A: DefinableSet,
    B: DefinableSet,
    a: int,
    b: int,
    N: int,
    seed: int = 0,
    color: EdgeColor | None = None,
) -> CheckReport:
    """a*mu(A) <= b*mu(B) + 3 sigma, given that A-vertices have >= a neighbours in B and B-vertices <= b in A.

    With ``color`` only edges of that color count as neighbours.
    """
    for tau in A.prefixes:
        if A.contains_prefix(M, tau):
            for prof in M.neighbor_profiles.get(tau, ()):
                if _neighbor_count(prof, B, M, color) < a:
                    raise PreconditionError(f"a vertex of {tau} has fewer than {a} neighbours in B")
    for tau in B.prefixes:
        if B.contains_prefix(M, tau):
            for prof in M.neighbor_profiles.get(tau, ()):
                if _neighbor_count(prof, A, M, color) > b:
                    raise PreconditionError(f"a vertex of {tau} has more than {b} neighbours in A")
    sup = M.support
    in_a = np.array([A.contains_prefix(M, p) for p in sup], dtype=float)
    in_b = np.array([B.contains_prefix(M, p) for p in sup], dtype=float)
    idx = _prefix_samples(M, N, seed)
    z = a * in_a[idx] - b * in_b[idx]
    label = "sfmtp" if color is None else f"sfmtp[{EdgeColor(color).name}]"
    rep = _mean_test(z, f"{label}(a={a},b={b})", one_sided=True)
    rep.notes.append("certified on finite unions of basic sets only")
    return rep


def compare_type_distribution(M: LimitMachine, N: int, seed: int = 0) -> CheckReport:
    """Chi-square of sampled prefix frequencies against mu; FINITE atom counts against nu exactly."""
    sup = M.support
    w = np.array([float(M.mu[p]) for p in sup])
    expected = w / w.sum() * N
    observed = np.bincount(_prefix_samples(M, N, seed), minlength=len(sup))
    df = len(sup) - 1
    if df == 0:
        chi2, crit = 0.0, 0.0
        ok = observed[0] == N
    else:
        chi2 = float(((observed - expected) ** 2 / expected).sum())
        crit = float(stats.chi2.isf(CHI2_ALPHA, df))
        ok = chi2 <= crit
    atoms = Counter(a.prefix for a in M.finite_atoms())
    bad_atoms = [p for p in M.finite_prefixes() if atoms[p] != M.nu[p]]
    example = f"atom count mismatch for {bad_atoms[0]}" if bad_atoms else None
    ok = ok and not bad_atoms
    rep = CheckReport("type_distribution", N, chi2, crit, PASS if ok else FAIL, example)
    rep.notes.append(f"df={df} finite_atoms={sum(atoms.values())}")
    return rep


# -- diagnostics ---------------------------------------------------------------------------------


def residuality_trend(graphs: Sequence[RootedKTree], r: int) -> list[float]:
    """Per graph: mean size of the r-ball around an unmarked vertex, marks deleted, as a fraction of n."""
    out = []
    for T in graphs:
        removed = set(T.marks.values())
        total, count = 0, 0
        for v in range(T.n):
            if v in removed:
                continue
            seen = {v}
            frontier = [v]
            for _ in range(r):
                frontier = [w for u in frontier for w in T.neighbors[u] if w not in removed and w not in seen and not seen.add(w)]
            total += len(seen)
            count += 1
        out.append(total / count / T.n if count else 0.0)
    return out


def strictly_decreasing(xs: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def check_residuality(graphs: Sequence[RootedKTree], r: int) -> CheckReport:
    """Diagnostic: the r-ball mass after mark removal must shrink strictly along the sequence."""
    trend = residuality_trend(graphs, r)
    ok = strictly_decreasing(trend)
    worst = max((b - a for a, b in zip(trend, trend[1:])), default=0.0)
    rep = CheckReport(f"residuality(r={r})", len(graphs), worst, 0.0, PASS if ok else FAIL)
    rep.notes.append("trend=" + ",".join(f"{x:.6f}" for x in trend))
    return rep


# -- automatic suite ----------------------------------------------------------------------------------


def _auto_semipreserving(M: LimitMachine):
    """X = {tau}, Y = {i-parent prefix} for finitary i-edges of support prefixes, d = the edge multiplicity."""
    for tau in M.support:
        for i in M.parent_indices(tau):
            cls = M.edge_class.get((tau, i))
            target = M.parent_prefix.get((tau, i))
            if cls is None or not cls.finitary or target is None:
                continue
            counts = {dict(p).get(tau.fingerprint, 0) for p in M.child_profiles.get((target, i), ())}
            # the estimated masses must already satisfy the identity; otherwise the
            # test would measure finite-order bias in mu rather than the machine
            if counts == {cls.m} and M.mu.get(tau) == cls.m * M.mu.get(target, -1):
                yield DefinableSet.of([tau]), DefinableSet.of([target]), i, cls.m


def _auto_sfmtp(M: LimitMachine, color: EdgeColor | None):
    """A = {tau} for support prefixes, B = all prefixes adjacent to A, with the tightest bounded a and b."""
    by_fp = {p.fingerprint: p for p in M.prefixes()}
    for tau in M.support:
        A = DefinableSet.of([tau])
        nbr = {by_fp[fp] for prof in M.neighbor_profiles.get(tau, ()) for fp, col, _ in prof
               if fp in by_fp and (color is None or col == int(color))}
        if not nbr:
            continue
        B = DefinableSet.of(nbr)
        a = min(_neighbor_count(p, B, M, color) for p in M.neighbor_profiles[tau])
        b = max(_neighbor_count(p, A, M, color) for q in nbr for p in M.neighbor_profiles.get(q, ()))
        if 1 <= a < math.inf and b < math.inf:
            yield A, B, int(a), int(b)


def run_suite(
    M: LimitMachine,
    N: int,
    seed: int = 0,
    exact_n: int | None = None,
    colors: Sequence[EdgeColor | None] = (None, EdgeColor.KEPT, EdgeColor.FILL),
) -> list[CheckReport]:
    """All checks; pairs for the measure checks are derived from the machine's profiles."""
    exact_n = min(N, 10_000) if exact_n is None else exact_n
    reports = [
        check_path_independence(M, exact_n, seed=seed),
        check_edge_consistency(M, exact_n, seed=seed),
        check_acyclicity(M, exact_n, seed=seed),
        check_finite_parent_maps(M),
        compare_type_distribution(M, N, seed=seed),
    ]
    for X, Y, i, d in _auto_semipreserving(M):
        reports.append(check_measure_semipreserving(M, X, Y, i, d, N, seed, exact_cap=min(exact_n, 2000)))
    for color in colors:
        for A, B, a, b in _auto_sfmtp(M, color):
            reports.append(check_sfmtp(M, A, B, a, b, N, seed, color))
    return reports
