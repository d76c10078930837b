"""Command-line front end.

Subcommands cover the whole pipeline: ``preprocess`` builds the
metric-independent artifact, ``customize`` joins it with a weight
function, ``query``/``knn`` answer batches against the customized
artifact, and ``bench`` runs everything end to end with a seeded query
workload and reports per-phase timings plus query statistics.

Exit codes: 0 success, 2 parse errors, 3 consistency errors, 4 state
errors, 5 I/O errors, 1 anything else. Vertex IDs in batch, source, and
target files are 0-based original IDs; DIMACS files stay 1-based.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass, field

from . import __version__
from .customize import customize, load_customized, query_input_graph, save_customized
from .dimacs import load_dimacs_co, load_dimacs_gr, load_metric
from .errors import ConsistencyError, ParseError, StateError
from .graph import INFINITY
from .order import export_order, import_order, nested_dissection_order
from .preprocess import build_cch, load_cch, save_cch
from .query import (QueryState, RphastState, knn_dijkstra, knn_query, knn_select,
                    query, rphast_source, unpack_path)

BENCH_SCHEMA = "cchroute-bench/1"


def _resolve_threads(flag: int | None) -> int:
    if flag is not None:
        if flag < 1:
            raise ConsistencyError("--threads must be at least 1")
        return flag
    env = os.environ.get("CCH_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConsistencyError(f"CCH_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise ConsistencyError("CCH_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


def _read_id_lines(path: str) -> list[int]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise ParseError(f"not a vertex ID: {line!r}", lineno) from None
    return out


def _read_pairs(path: str) -> list[tuple[int, int]]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected '<s> <t>', got {line!r}", lineno)
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ParseError(f"non-integer pair {line!r}", lineno) from None
    return pairs


def _check_vertex(v: int, n: int, what: str) -> None:
    if not (0 <= v < n):
        raise ConsistencyError(f"{what} {v} out of range [0, {n})")


def _dump_decomposition(decomp, out) -> None:
    stack = [(decomp, 0)]
    while stack:
        node, depth = stack.pop()
        sep = node.cell_hi - node.sep_lo
        out.write("  " * depth
                  + f"cell [{node.cell_lo}, {node.cell_hi}) separator [{node.sep_lo}, {node.cell_hi})"
                  + f" ({sep} vertices)\n")
        for child in reversed(node.children):
            stack.append((child, depth + 1))


def cmd_preprocess(args) -> int:
    g = load_dimacs_gr(args.graph)
    if args.order:
        order = import_order(args.order, g.vertex_count)
        coords = None
    elif args.coords:
        coords = load_dimacs_co(args.coords, g.vertex_count)
        order = None
    else:
        raise ConsistencyError("preprocess needs --coords (to compute an order) or --order")
    t0 = time.perf_counter()
    if order is None:
        order = nested_dissection_order(g, coords)
    t1 = time.perf_counter()
    cch = build_cch(g, order=order)
    t2 = time.perf_counter()
    save_cch(cch, args.out)
    if args.export_order:
        export_order(cch.order, args.export_order)
    if args.dump_decomposition:
        _dump_decomposition(cch.decomposition, sys.stdout)
    shortcuts = cch.ug.arc_count - len(g.undirected_edges())
    print(f"preprocessed {args.graph}: {g.vertex_count} vertices, {g.arc_count} arcs, "
          f"{cch.ug.arc_count} upward arcs ({shortcuts} shortcuts)")
    if g.dropped_self_loops:
        print(f"dropped {g.dropped_self_loops} self-loops at load time")
    print(f"ordering {t1 - t0:.3f}s, contraction+tree {t2 - t1:.3f}s -> {args.out}")
    return 0


def cmd_customize(args) -> int:
    g = load_dimacs_gr(args.graph)
    cch = load_cch(args.cch)
    if len(cch.parent) != g.vertex_count:
        raise ConsistencyError(
            f"hierarchy has {len(cch.parent)} vertices, graph has {g.vertex_count}")
    if cch.ug.input_arc_count != g.arc_count:
        raise ConsistencyError(
            f"hierarchy was built for {cch.ug.input_arc_count} arcs, graph has {g.arc_count}")
    weights = load_metric(args.weights, g) if args.weights else list(g.weight)
    threads = _resolve_threads(args.threads)
    times: dict = {}
    c = customize(cch, weights, use_perfect=not args.no_perfect,
                  threads=threads, timings=times)
    save_customized(c, args.out)
    if args.json:
        print(json.dumps({"schema": BENCH_SCHEMA, "kind": "customize",
                          "threads": threads, "perfect": not args.no_perfect,
                          "seconds": times}))
    else:
        print(f"mode: {'basic only' if args.no_perfect else 'perfect'}  threads: {threads}")
        print("phase      seconds")
        for name in ("respect", "basic", "perfect", "construct", "total"):
            print(f"{name:<10} {times[name]:8.3f}")
    print(f"customized artifact -> {args.out}", file=sys.stderr)
    return 0


def _format_dist(d: int) -> str:
    return "inf" if d == INFINITY else str(d)


def cmd_query(args) -> int:
    c = load_customized(args.customized)
    order = c.cch.order
    n = c.cch.ug.vertex_count
    pairs = _read_pairs(args.pairs)
    state = QueryState.for_vertex_count(n)
    for s, t in pairs:
        _check_vertex(s, n, "source")
        _check_vertex(t, n, "target")
        dist = query(order.rank_of[s], order.rank_of[t], state, c.graphs, c.cch.parent)
        if args.paths:
            path = unpack_path(state, c.graphs)
            if path is None:
                print(f"{s}\t{t}\t{_format_dist(dist)}\t-")
            else:
                original = [order.vertex_at[v] for v in path]
                print(f"{s}\t{t}\t{_format_dist(dist)}\t" + " ".join(map(str, original)))
        else:
            print(f"{s}\t{t}\t{_format_dist(dist)}")
    return 0


def cmd_knn(args) -> int:
    c = load_customized(args.customized)
    order = c.cch.order
    n = c.cch.ug.vertex_count
    sources = _read_id_lines(args.sources)
    targets = _read_id_lines(args.targets)
    for v in sources + targets:
        _check_vertex(v, n, "vertex")
    rank_targets = [order.rank_of[v] for v in targets]
    poi = knn_select(rank_targets, n, original=order.vertex_at)
    if args.algo == "sep":
        st = RphastState(c.graphs, c.cch.parent)
        for s in sources:
            rphast_source(order.rank_of[s], st)
            result = knn_query(order.rank_of[s], args.k, poi, c.cch.decomposition, st)
            for v, d in result:
                print(f"{s}\t{order.vertex_at[v]}\t{_format_dist(d)}")
    else:
        g = query_input_graph(c)
        for s in sources:
            result = knn_dijkstra(g, order.rank_of[s], args.k, rank_targets)
            for v, d in result:
                print(f"{s}\t{order.vertex_at[v]}\t{_format_dist(d)}")
    return 0


@dataclass
class BenchReport:
    """Per-phase timings and query statistics for one benchmark run."""

    schema: str
    seed: int
    threads: int
    count: int
    perfect: bool
    phase_seconds: dict
    query_stats: dict
    samples: list = field(default_factory=list)


def cmd_bench(args) -> int:
    import random

    g = load_dimacs_gr(args.graph)
    n = g.vertex_count
    threads = _resolve_threads(args.threads)

    t0 = time.perf_counter()
    if args.order:
        order = import_order(args.order, n)
    else:
        if not args.coords:
            raise ConsistencyError("bench needs --coords or --order")
        coords = load_dimacs_co(args.coords, n)
        order = nested_dissection_order(g, coords)
    t1 = time.perf_counter()
    cch = build_cch(g, order=order)
    t2 = time.perf_counter()
    weights = load_metric(args.weights, g) if args.weights else list(g.weight)
    c = customize(cch, weights, use_perfect=not args.no_perfect, threads=threads)
    t3 = time.perf_counter()

    rng = random.Random(args.seed)
    rank_of = cch.order.rank_of
    state = QueryState.for_vertex_count(n)
    samples = []
    for _ in range(args.count):
        s = rng.randrange(n)
        t = rng.randrange(n)
        v0, r0 = state.visited, state.relaxed
        q0 = time.perf_counter_ns()
        dist = query(rank_of[s], rank_of[t], state, c.graphs, cch.parent)
        q1 = time.perf_counter_ns()
        path = unpack_path(state, c.graphs)
        samples.append({
            "s": s, "t": t,
            "distance": None if dist == INFINITY else dist,
            "ns": q1 - q0,
            "visited": state.visited - v0,
            "relaxed": state.relaxed - r0,
            "path_vertices": 0 if path is None else len(path),
        })

    times_us = [s["ns"] / 1000.0 for s in samples] or [0.0]
    stats = {
        "mean_us": statistics.fmean(times_us),
        "median_us": statistics.median(times_us),
        "mean_visited": statistics.fmean(s["visited"] for s in samples) if samples else 0.0,
        "mean_relaxed": statistics.fmean(s["relaxed"] for s in samples) if samples else 0.0,
        "mean_path_vertices": statistics.fmean(s["path_vertices"] for s in samples) if samples else 0.0,
    }
    report = BenchReport(
        schema=BENCH_SCHEMA, seed=args.seed, threads=threads, count=args.count,
        perfect=not args.no_perfect,
        phase_seconds={"ordering": t1 - t0, "contraction": t2 - t1,
                       "customization": t3 - t2},
        query_stats=stats, samples=samples)

    if args.json:
        print(json.dumps({"schema": report.schema, "kind": "bench",
                          "seed": report.seed, "threads": report.threads,
                          "count": report.count, "perfect": report.perfect,
                          "phase_seconds": report.phase_seconds,
                          "query_stats": report.query_stats}))
        for sample in report.samples:
            print(json.dumps({"schema": report.schema, "kind": "sample", **sample}))
    else:
        print(f"bench: seed={report.seed} threads={report.threads} "
              f"count={report.count} mode={'perfect' if report.perfect else 'basic'}")
        print("phase          seconds")
        for name, value in report.phase_seconds.items():
            print(f"{name:<14} {value:8.3f}")
        print("query stat          value")
        for name, value in report.query_stats.items():
            print(f"{name:<18} {value:10.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cchroute",
                                     description="Customizable contraction hierarchies toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="build the metric-independent artifact")
    p.add_argument("--graph", required=True, help="DIMACS .gr file")
    p.add_argument("--coords", help="DIMACS .co file (to compute a dissection order)")
    p.add_argument("--order", help="pre-computed order file (overrides --coords)")
    p.add_argument("--out", required=True, help="output artifact path")
    p.add_argument("--export-order", help="also write the improved order to this file")
    p.add_argument("--dump-decomposition", action="store_true",
                   help="print the separator decomposition as an indented tree")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_preprocess)

    p = sub.add_parser("customize", help="compute a customized metric")
    p.add_argument("--graph", required=True, help="DIMACS .gr file the hierarchy was built from")
    p.add_argument("--cch", required=True, help="preprocessing artifact")
    p.add_argument("--weights", help="metric file overriding the graph's weights")
    p.add_argument("--out", required=True, help="output customized artifact")
    p.add_argument("--no-perfect", action="store_true",
                   help="stop after the basic customization")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--json", action="store_true", help="machine-readable timing output")
    p.set_defaults(fn=cmd_customize)

    p = sub.add_parser("query", help="answer a batch of point-to-point queries")
    p.add_argument("--customized", required=True, help="customized artifact")
    p.add_argument("--pairs", required=True, help="batch file: lines '<s> <t>' (0-based)")
    p.add_argument("--paths", action="store_true", help="also print unpacked paths")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("knn", help="k-nearest-neighbor queries")
    p.add_argument("--customized", required=True)
    p.add_argument("--sources", required=True, help="file with one source ID per line")
    p.add_argument("--targets", required=True, help="file with one target ID per line")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--algo", choices=("sep", "dijkstra"), default="sep")
    p.set_defaults(fn=cmd_knn)

    p = sub.add_parser("bench", help="end-to-end pipeline benchmark")
    p.add_argument("--graph", required=True)
    p.add_argument("--coords")
    p.add_argument("--order")
    p.add_argument("--weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--no-perfect", action="store_true")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except StateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
