"""Command line entry point: one subcommand per stage plus the end-to-end pipeline."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import graphio
from .encoder import DecompositionTimeout, Infeasible, WidthOverflow, encode_as_rooted_ktree, exact_tree_decomposition
from .graph import EdgeColor, GraphInputError, validate_rooted_ktree
from .hintikka import type_histogram
from .limit import Instability, LimitMachine
from .logic import BudgetExceeded, FormulaSyntaxError, stone_pairing
from .sequence import (
    CapExceeded,
    GraphSequence,
    MeasureEstimate,
    SequenceTooShort,
    as_fraction,
    estimate_measures,
    mark_null_partition,
)

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_UNSTABLE = 0, 1, 2, 3


class StageError(Exception):
    def __init__(self, stage: str, message: str, code: int = EXIT_INPUT):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.code = code


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_ktrees(paths: Sequence[str]) -> GraphSequence:
    return GraphSequence(graphio.read_ktree(p) for p in paths)


def encode_graph(G, k: int, decomp=None):
    """Plain graph -> rooted k-tree; a supplied decomposition skips the exact solver."""
    D = decomp if decomp is not None else exact_tree_decomposition(G, k)
    T = encode_as_rooted_ktree(G, D, k)
    report = validate_rooted_ktree(T)
    if not report.ok:
        raise StageError("encode", f"encoder produced an invalid k-tree: {sorted(report.rules)}")
    return T


# -- per-module subcommands --------------------------------------------------------------


def cmd_encode(args) -> int:
    G = graphio.read_plain_graph(args.graph)
    D = graphio.parse_decomposition(Path(args.decomp).read_text()) if args.decomp else None
    T = encode_graph(G, args.k, D)
    _emit(graphio.format_ktree(T), args.out)
    return EXIT_PASS


def cmd_types(args) -> int:
    T = graphio.read_ktree(args.graph)
    h = type_histogram(T, args.depth)
    rows = sorted((t.fingerprint, c) for t, c in h.counts.items())
    if args.json:
        _emit(dump_json({"depth": args.depth, "n": T.n, "types": [{"fingerprint": f, "count": c} for f, c in rows]}), args.out)
    else:
        _emit("".join(f"{f} {c}\n" for f, c in rows), args.out)
    return EXIT_PASS


def cmd_stone(args) -> int:
    T = graphio.read_ktree(args.graph)
    p = stone_pairing(T, args.formula, budget=args.budget, samples=args.n, seed=args.seed)
    if args.json:
        _emit(dump_json({"value": str(p.value), "exact": p.exact, "samples": p.samples, "stderr": p.stderr}), args.out)
    else:
        how = "exact" if p.exact else f"sampled n={p.samples} stderr={p.stderr:.3g}"
        _emit(f"{p.value} {how}\n", args.out)
    return EXIT_PASS


def cmd_mark(args) -> int:
    seq = _read_ktrees(args.graphs)
    marked, plan = mark_null_partition(seq, args.eps, args.radius, args.cap)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for path, T in zip(args.graphs, marked):
            (out / Path(path).name).write_text(graphio.format_ktree(T))
    summary = {
        "eps": str(plan.eps),
        "radius": plan.radius,
        "marks": [{str(j): v for j, v in a.items()} for a in plan.assignments],
        "residual": [str(r) for r in plan.residual],
        "type_stable": {str(j): s for j, s in plan.type_stable.items()},
    }
    if args.json:
        sys.stdout.write(dump_json(summary))
    else:
        for path, a, r in zip(args.graphs, plan.assignments, plan.residual):
            sys.stdout.write(f"{Path(path).name} marks={len(a)} residual={r}\n")
    return EXIT_PASS


def cmd_measures(args) -> int:
    seq = _read_ktrees(args.graphs)
    est = estimate_measures(seq, args.depth, args.window, args.growth)
    if args.json:
        _emit(dump_json(est.to_json()), args.out)
    else:
        lines = [f"{p.fingerprint} nu={'inf' if est.nu[p] == float('inf') else est.nu[p]} mu={est.mu[p]} var={est.variation[p]}\n"
                 for p in est.prefixes()]
        _emit("".join(lines), args.out)
    return EXIT_PASS


def load_estimate_for(graphs: GraphSequence, data: dict) -> MeasureEstimate:
    """Recompute the estimate from ``graphs`` with the stored parameters and require it to match ``data``."""
    est = estimate_measures(graphs, data["depth"], data["window"], data["growth"])
    if est.to_json() != MeasureEstimate.from_json(data).to_json():
        raise StageError("limit", "measures file does not match the given graphs")
    return est


def cmd_limit_build(args) -> int:
    from .machine_build import build_machine

    seq = _read_ktrees(args.graphs)
    if args.measures:
        est = load_estimate_for(seq, json.loads(Path(args.measures).read_text()))
        if args.depth is not None and args.depth != est.depth:
            raise StageError("limit", f"--depth {args.depth} differs from the measures depth {est.depth}")
    else:
        est = estimate_measures(seq, args.depth or 2, args.window, args.growth)
    M = build_machine(seq, est.depth, est=est)
    _emit(dump_json(M.to_json()), args.out)
    if M.unstable:
        for (tau, i), why in sorted(M.unstable.items(), key=lambda kv: (kv[0][0].fingerprint, kv[0][1])):
            sys.stderr.write(f"unstable {tau.fingerprint} i={i}: {why}\n")
    return EXIT_PASS


def _load_machine(path: str) -> LimitMachine:
    return LimitMachine.from_json(json.loads(Path(path).read_text()))


def cmd_limit_sample(args) -> int:
    M = _load_machine(args.machine)
    lines = [v.describe() + "\n" for v in M.sample(args.n, args.seed)]
    _emit("".join(lines), args.out)
    return EXIT_PASS


SUITE = ("path_independence", "edge_consistency", "acyclicity", "finite_parent_maps", "type_distribution", "semipreserving", "sfmtp")


def select_reports(reports, names: set[str]):
    return [r for r in reports if r.name.split("(")[0].split("[")[0].replace("measure_", "") in names]


def cmd_verify(args) -> int:
    from .verify import run_suite

    M = _load_machine(args.machine)
    names = set(SUITE) if args.suite == "all" else set(args.suite.split(","))
    unknown = names - set(SUITE)
    if unknown:
        raise StageError("verify", f"unknown checks {sorted(unknown)}; choose from {', '.join(SUITE)}")
    reports = select_reports(run_suite(M, args.n, args.seed), names)
    if args.json:
        _emit(dump_json([r.to_json() for r in reports]), args.out)
    else:
        _emit("".join(r.line() + "\n" for r in reports), args.out)
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


# -- pipeline --------------------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    k: int
    depth: int = 2
    window: int = 3
    eps: object = "1/2"
    n: int = 20_000
    seed: int = 0
    color: EdgeColor | None = None
    growth: float = 4.0
    radius: int = 2
    out: Path = Path("twlimit-out")
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.k < 1 or self.depth < 1 or self.window < 2 or self.n < 1 or self.radius < 1:
            raise StageError("config", "k, depth, n and radius must be positive and window >= 2")
        if not 0 < as_fraction(self.eps) <= 1:
            raise StageError("config", "eps must lie in (0, 1]")


def run_pipeline(cfg: PipelineConfig, graphs) -> tuple[int, list]:
    """encode -> mark -> measure -> build -> verify, writing every artifact under ``cfg.out``."""
    from .machine_build import build_machine
    from .verify import check_residuality, run_suite

    out = Path(cfg.out)
    (out / "ktrees").mkdir(parents=True, exist_ok=True)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    names = cfg.names or [f"g{j:02d}" for j in range(len(graphs))]

    encoded = []
    for name, G in zip(names, graphs):
        try:
            encoded.append(encode_graph(G, cfg.k))
        except Infeasible as e:
            raise StageError("encode", f"{name}: tree-width exceeds k={cfg.k} ({e})") from None
        except DecompositionTimeout as e:
            raise StageError("encode", f"{name}: {e}", EXIT_UNSTABLE) from None
    try:
        seq = GraphSequence(encoded)
        marked, plan = mark_null_partition(seq, cfg.eps, cfg.radius)
    except (GraphInputError, CapExceeded) as e:
        raise StageError("mark", str(e)) from None
    for name, T in zip(names, marked):
        (out / "ktrees" / f"{name}.ktree").write_text(graphio.format_ktree(T))
    marking = {
        "eps": str(plan.eps),
        "marks": [{str(j): v for j, v in a.items()} for a in plan.assignments],
        "residual": [str(r) for r in plan.residual],
        "type_stable": {str(j): s for j, s in plan.type_stable.items()},
    }
    (out / "reports" / "marking.json").write_text(dump_json(marking))

    try:
        est = estimate_measures(marked, cfg.depth, cfg.window, cfg.growth)
    except SequenceTooShort as e:
        raise StageError("measures", str(e)) from None
    (out / "measures.json").write_text(dump_json(est.to_json()))
    load_estimate_for(marked, json.loads((out / "measures.json").read_text()))

    M = build_machine(marked, cfg.depth, est=est)
    (out / "machine.json").write_text(dump_json(M.to_json()))
    M = LimitMachine.from_json(json.loads((out / "machine.json").read_text()))

    colors = (None, EdgeColor.KEPT, EdgeColor.FILL) if cfg.color is None else (None, cfg.color)
    try:
        reports = run_suite(M, cfg.n, cfg.seed, colors=colors)
    except Instability as e:
        raise StageError("verify", f"instability: {e}", EXIT_UNSTABLE) from None
    reports.append(check_residuality(marked, cfg.radius))
    (out / "reports" / "checks.json").write_text(dump_json([r.to_json() for r in reports]))
    (out / "reports" / "summary.txt").write_text("".join(r.line() + "\n" for r in reports))
    return (EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL), reports


def _family_graphs(name: str, sizes: Sequence[int]):
    from . import families
    from .encoder import kept_subgraph

    makers = {
        "path": families.rooted_path,
        "star": families.star,
        "comb": families.comb,
        "bintree": families.binary_in_tree,
    }
    if name not in makers:
        raise StageError("config", f"unknown family {name!r}; choose from {', '.join(makers)}")
    return [kept_subgraph(makers[name](s)) for s in sizes]


def cmd_pipeline(args) -> int:
    if args.family:
        sizes = [int(x) for x in args.sizes.split(",")]
        graphs = _family_graphs(args.family, sizes)
        names = [f"{args.family}{s:04d}" for s in sizes]
    elif args.graphs:
        graphs = [graphio.read_plain_graph(p) for p in args.graphs]
        names = [f"g{j:02d}_{Path(p).stem}" for j, p in enumerate(args.graphs)]
    else:
        raise StageError("config", "give plain graph files or --family")
    color = None if args.color == "all" else EdgeColor[args.color.upper()]
    cfg = PipelineConfig(args.k, args.depth, args.window, args.eps, args.n, args.seed, color,
                         args.growth, args.radius, Path(args.out), names)
    code, reports = run_pipeline(cfg, graphs)
    for r in reports:
        sys.stdout.write(r.line() + "\n")
    return code


# -- argument parsing -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twlimit", description="Bounded tree-width graph limits, stage by stage.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, json_flag=True):
        sp.add_argument("--out", help="write the result here instead of stdout")
        if json_flag:
            sp.add_argument("--json", action="store_true", help="machine-readable output")

    sp = sub.add_parser("encode", help="plain graph -> rooted k-tree")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--decomp", help="tree decomposition file; skips the exact solver")
    sp.add_argument("graph")
    common(sp, json_flag=False)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("types", help="histogram of local types")
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("graph")
    common(sp)
    sp.set_defaults(func=cmd_types)

    sp = sub.add_parser("stone", help="Stone pairing of a formula with a graph")
    sp.add_argument("--formula", required=True)
    sp.add_argument("--budget", type=int, default=1_000_000)
    sp.add_argument("--n", type=int, default=None, help="sample this many tuples when over budget")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("graph")
    common(sp)
    sp.set_defaults(func=cmd_stone)

    sp = sub.add_parser("mark", help="greedy null-partition marking")
    sp.add_argument("--eps", default="1/2")
    sp.add_argument("--radius", type=int, default=2)
    sp.add_argument("--cap", type=int, default=64)
    sp.add_argument("--out", help="directory for the marked k-tree files")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("graphs", nargs="+")
    sp.set_defaults(func=cmd_mark)

    sp = sub.add_parser("measures", help="nu/mu estimates over a trailing window")
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--window", type=int, default=3)
    sp.add_argument("--growth", type=float, default=4.0)
    sp.add_argument("graphs", nargs="+")
    common(sp)
    sp.set_defaults(func=cmd_measures)

    lp = sub.add_parser("limit", help="build or sample a limit machine")
    lsub = lp.add_subparsers(dest="limit_command", required=True)
    sp = lsub.add_parser("build")
    sp.add_argument("--measures", help="measures JSON; must match the graphs")
    sp.add_argument("--graphs", nargs="+", required=True)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--window", type=int, default=3)
    sp.add_argument("--growth", type=float, default=4.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_limit_build)
    sp = lsub.add_parser("sample")
    sp.add_argument("--machine", required=True)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_limit_sample)

    sp = sub.add_parser("verify", help="run invariant checks on a machine")
    sp.add_argument("--machine", required=True)
    sp.add_argument("--suite", default="all", help="'all' or a comma list of " + ",".join(SUITE))
    sp.add_argument("--n", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("pipeline", help="encode, mark, measure, build and verify in one go")
    sp.add_argument("graphs", nargs="*", help="plain graph files in increasing order")
    sp.add_argument("--family", help="generate instead: path, star, comb or bintree")
    sp.add_argument("--sizes", default="8,16,32,64", help="orders (heights for bintree)")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--window", type=int, default=3)
    sp.add_argument("--growth", type=float, default=4.0)
    sp.add_argument("--eps", default="1/2")
    sp.add_argument("--radius", type=int, default=2)
    sp.add_argument("--n", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--color", choices=("all", "kept", "fill"), default="all")
    sp.add_argument("--out", default="twlimit-out")
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as e:
        sys.stderr.write(f"error: {e}\n")
        return e.code
    except Infeasible as e:
        sys.stderr.write(f"error: [encode] infeasible: {e}\n")
        return EXIT_INPUT
    except (DecompositionTimeout, Instability) as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_UNSTABLE
    except (GraphInputError, WidthOverflow, FormulaSyntaxError, BudgetExceeded, CapExceeded,
            SequenceTooShort, FileNotFoundError, KeyError, ValueError) as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
