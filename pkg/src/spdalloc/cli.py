"""Command-line front end.

Subcommands: ``gen`` (instance files), ``solve`` (one algorithm, one report),
``eval`` (cost of a given allocation), ``compare`` (several algorithms side by
side), ``bench`` (CSV suites, optionally with a rendered figure).

Reports are canonical JSON: sorted keys, one line, newline-terminated.  Exit
codes: 0 success, 2 usage or format errors, 3 resource-limit refusals.
Instance files may carry ``#``-prefixed metadata header lines; they are
recovered on load (graphs keep them in ``meta``).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .baselines import GreedyPolicy, balanced_avg, greedy_trace, trivial_single
from .continuous import compute_mapping, compute_weights, continuous_cost, optimal_delta
from .discrete import allocate, approximation_diagnostics
from .errors import FormatMismatch, ResourceLimit, SpdallocError
from .graph import (
    Allocation,
    StreamingGraph,
    graph_from_dict,
    graph_to_dict,
    streaming_cost,
    validate_graph,
)
from .instances import (
    gen_greedy_worstcase,
    gen_parallel_outlier,
    gen_partition_reduction,
    gen_random_spd,
    gen_subsetsum_reduction,
)
from .oracle import brute_force_optimal
from .spd import SpdTree, expand, parse_tree, serialize_tree, tree_from_dict

_GREEDY_ALGS = {
    "greedy-improve": GreedyPolicy.RETAIN_IF_IMPROVES,
    "greedy-keep": GreedyPolicy.RETAIN_UNLESS_WORSE,
    "greedy-path": GreedyPolicy.RETAIN_UNLESS_PATH_WORSE,
}
_ALGS = ("cont", "disc", "trivial", "avg") + tuple(_GREEDY_ALGS)

_BENCH_COLUMNS = [
    "suite", "family", "n", "c", "seed", "gamma",
    "algorithm", "d", "delta", "ratio", "flag", "runtime_ms",
]
_BENCH_DEFAULT_SIZES = {
    "avg-counterexample": [12, 24, 48],
    "disc-ratio": [8, 12, 16, 20],
    "greedy-worst": [12, 16, 20],
}


# --- I/O helpers -----------------------------------------------------------------


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise FormatMismatch(f"cannot read {path}: {exc}") from exc


def _split_meta(text: str) -> tuple[str, dict]:
    body_lines = []
    meta_lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            meta_lines.append(line[1:].lstrip())
        else:
            body_lines.append(line)
    meta: dict = {}
    if meta_lines:
        try:
            meta = json.loads("\n".join(meta_lines))
        except json.JSONDecodeError:
            meta = {}
    return "\n".join(body_lines).strip(), meta if isinstance(meta, dict) else {}


def load_instance(text: str):
    """Parse instance text into ('tree', SpdTree) or ('graph', StreamingGraph)."""
    body, meta = _split_meta(text)
    if not body:
        raise FormatMismatch("empty instance input")
    if body.lstrip().startswith("{"):
        try:
            data = json.loads(body)
        except json.JSONDecodeError as exc:
            raise FormatMismatch(f"invalid JSON instance: {exc}") from exc
        if not isinstance(data, dict):
            raise FormatMismatch("instance JSON must be an object")
        if "nodes" in data:
            g = graph_from_dict(data)
            g.meta.update(meta)
            return "graph", g
        if "leaf" in data or "op" in data:
            return "tree", tree_from_dict(data)
        raise FormatMismatch(
            "instance JSON needs graph keys (nodes/edges) or tree keys (op/leaf)"
        )
    return "tree", parse_tree(body)


def _write_out(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True) + "\n"


def _meta_header(meta: dict) -> str:
    pretty = json.dumps(meta, sort_keys=True, indent=1)
    return "".join(f"# {line}\n" for line in pretty.splitlines())


def _require_tree(kind: str, instance) -> SpdTree:
    """Tree-recursive solvers refuse raw graphs (no SPD recognition here)."""
    if kind == "tree":
        return instance
    meta = instance.meta
    if "tree" in meta:
        return parse_tree(meta["tree"])
    raise FormatMismatch(
        "this algorithm is tree-recursive; give a tree (DSL or JSON), "
        "not a raw graph"
    )


def _graph_for(kind: str, instance) -> StreamingGraph:
    if kind == "graph":
        return instance
    return expand(instance)


# --- gen -------------------------------------------------------------------------


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise FormatMismatch(f"expected comma-separated integers, got {text!r}") from exc


def cmd_gen(args) -> int:
    family = args.family
    if family == "parallel-outlier":
        tree = gen_parallel_outlier(args.n)
        meta = {"family": family, "n": args.n, "c": 2}
        _write_out(_meta_header(meta) + serialize_tree(tree) + "\n", args.out)
    elif family == "partition":
        values = _parse_int_list(args.set)
        tree = gen_partition_reduction(values)
        meta = {"family": family, "set": values, "c": 2}
        _write_out(_meta_header(meta) + serialize_tree(tree) + "\n", args.out)
    elif family == "subsetsum":
        values = _parse_int_list(args.set)
        g = gen_subsetsum_reduction(values, args.x, args.k)
        _write_out(_meta_header(g.meta) + _canonical_json(graph_to_dict(g)), args.out)
    elif family == "greedy-worst":
        g = gen_greedy_worstcase(args.n)
        _write_out(_meta_header(g.meta) + _canonical_json(graph_to_dict(g)), args.out)
    elif family == "random":
        tree = gen_random_spd(
            args.n,
            args.seed,
            p_serial=args.p_serial,
            max_fanout=args.max_fanout,
            weight_range=_parse_range(args.weight_range),
            edge_weight_range=_parse_range(args.edge_weight_range),
        )
        meta = {"family": family, "n": args.n, "seed": args.seed}
        _write_out(_meta_header(meta) + serialize_tree(tree) + "\n", args.out)
    else:  # pragma: no cover - argparse restricts choices
        raise FormatMismatch(f"unknown family {family}")
    return 0


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise FormatMismatch(f"expected 'low,high', got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise FormatMismatch(f"expected numbers in range {text!r}") from exc
    return lo, hi


# --- solve -----------------------------------------------------------------------


def _solve_payload(kind, instance, alg: str, c: int, gamma: float) -> dict:
    if alg == "cont":
        t = _require_tree(kind, instance)
        ann = compute_weights(t)
        shares = compute_mapping(ann, float(c)).shares
        report = continuous_cost(t, shares)
        return {
            "algorithm": "cont",
            "capacity": c,
            "delta": optimal_delta(t, float(c)),
            "shares": shares,
            "critical_path": list(report.critical_path),
        }
    if alg == "disc":
        t = _require_tree(kind, instance)
        report = allocate(t, c, gamma)
        diag = approximation_diagnostics(t, c, report)
        g = _graph_for(kind, instance)
        cost = streaming_cost(g, report.allocation)
        return {
            "algorithm": "disc",
            "capacity": c,
            "allocation": report.allocation.assignment,
            "d": cost.total_cost,
            "d_hat": diag.d_hat,
            "delta": diag.delta,
            "gamma": report.gamma,
            "overflow": report.overflow,
            "groups": [list(b) for b in report.group_boundaries],
            "critical_path": list(cost.critical_path),
        }
    if alg in _GREEDY_ALGS:
        t = _require_tree(kind, instance)
        g = _graph_for(kind, instance)
        trace = greedy_trace(t, c, _GREEDY_ALGS[alg], gamma, graph=g)
        return {
            "algorithm": alg,
            "capacity": c,
            "allocation": trace.allocation.assignment,
            "d": trace.cost,
            "retained_edges": [list(e) for e in trace.retained],
            "critical_path": list(streaming_cost(g, trace.allocation).critical_path),
        }
    g = _graph_for(kind, instance)
    if alg == "trivial":
        alloc = trivial_single(g)
    else:
        alloc = balanced_avg(g, c)
    report = streaming_cost(g, alloc)
    return {
        "algorithm": alg,
        "capacity": alloc.resource_count,
        "allocation": alloc.assignment,
        "d": report.total_cost,
        "critical_path": list(report.critical_path),
    }


def _format_table(payload: dict) -> str:
    lines = []
    for key in sorted(payload):
        value = payload[key]
        if isinstance(value, dict):
            value = json.dumps(value, sort_keys=True)
        elif isinstance(value, list):
            value = json.dumps(value)
        lines.append(f"{key:<15} {value}")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    kind, instance = load_instance(_read_text(args.input))
    payload = _solve_payload(kind, instance, args.alg, args.c, args.gamma)
    if args.format == "table":
        _write_out(_format_table(payload), args.out)
    else:
        _write_out(_canonical_json(payload), args.out)
    return 0


# --- eval ------------------------------------------------------------------------


def _load_allocation(text: str) -> Allocation:
    """Accept {"assignment": {...}, "resource_count": n} or a bare task map."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatMismatch(f"invalid allocation JSON: {exc}") from exc
    if not isinstance(data, dict) or not data:
        raise FormatMismatch("allocation JSON must be a non-empty object")
    if set(data) == {"assignment", "resource_count"}:
        assignment, count = data["assignment"], data["resource_count"]
    else:
        assignment, count = data, None
    if not isinstance(assignment, dict) or not all(
        isinstance(r, int) and not isinstance(r, bool) for r in assignment.values()
    ):
        raise FormatMismatch("allocation must map task id to integer resource")
    assignment = {str(v): int(r) for v, r in assignment.items()}
    if count is None:
        count = max(assignment.values(), default=0)
    return Allocation(assignment, int(count))


def cmd_eval(args) -> int:
    kind, instance = load_instance(_read_text(args.input))
    g = _graph_for(kind, instance)
    alloc = _load_allocation(_read_text(args.allocation))
    report = streaming_cost(g, alloc)
    payload = {
        "d": report.total_cost,
        "critical_path": list(report.critical_path),
        "per_node_cost": report.per_node_cost,
        "per_resource_load": {
            str(r): [cnt, ws] for r, (cnt, ws) in sorted(report.per_resource_load.items())
        },
    }
    if args.format == "table":
        _write_out(_format_table(payload), args.out)
    else:
        _write_out(_canonical_json(payload), args.out)
    return 0


# --- compare ---------------------------------------------------------------------


def cmd_compare(args) -> int:
    kind, instance = load_instance(_read_text(args.input))
    algs = [a.strip() for a in args.algs.split(",") if a.strip()]
    for alg in algs:
        if alg not in _ALGS or alg == "cont":
            raise FormatMismatch(
                f"compare works over discrete allocators {sorted(set(_ALGS) - {'cont'})}, got {alg!r}"
            )
    g = _graph_for(kind, instance)
    delta = None
    if kind == "tree":
        delta = optimal_delta(instance, float(args.c))
    elif "tree" in instance.meta:
        delta = optimal_delta(parse_tree(instance.meta["tree"]), float(args.c))
    oracle_d = None
    if args.oracle:
        _, oracle_d = brute_force_optimal(g, args.c)
    rows = []
    for alg in sorted(algs):
        payload = _solve_payload(kind, instance, alg, args.c, args.gamma)
        row = {
            "algorithm": alg,
            "d": payload["d"],
            "ratio_delta": payload["d"] / delta if delta else None,
            "ratio_oracle": payload["d"] / oracle_d if oracle_d else None,
        }
        rows.append(row)
    result = {"capacity": args.c, "delta": delta, "oracle": oracle_d, "rows": rows}
    if args.format == "table":
        header = f"{'algorithm':<16}{'d':>12}{'d/delta':>12}{'d/oracle':>12}"
        lines = [header]
        for row in rows:
            rd = f"{row['ratio_delta']:.4f}" if row["ratio_delta"] else "-"
            ro = f"{row['ratio_oracle']:.4f}" if row["ratio_oracle"] else "-"
            lines.append(f"{row['algorithm']:<16}{row['d']:>12.4f}{rd:>12}{ro:>12}")
        if delta:
            lines.append(f"delta = {delta}")
        if oracle_d is not None:
            lines.append(f"oracle d = {oracle_d}")
        _write_out("\n".join(lines) + "\n", args.out)
    else:
        _write_out(_canonical_json(result), args.out)
    return 0


# --- bench -----------------------------------------------------------------------


def _bench_rows(suite: str, sizes: list[int], seeds: list[int], gamma: float):
    rows = []
    if suite == "avg-counterexample":
        for n in sizes:
            tree = gen_parallel_outlier(n)
            g = expand(tree)
            start = time.perf_counter()
            alloc = balanced_avg(g, 2)
            d = streaming_cost(g, alloc).total_cost
            ms = (time.perf_counter() - start) * 1000.0
            delta = optimal_delta(tree, 2.0)
            rows.append({
                "suite": suite, "family": "parallel-outlier", "n": n, "c": 2,
                "seed": "", "gamma": "", "algorithm": "avg", "d": d,
                "delta": delta, "ratio": d / delta, "flag": "",
                "runtime_ms": ms,
            })
    elif suite == "disc-ratio":
        for n in sizes:
            for seed in seeds:
                tree = gen_random_spd(n, seed, edge_weight_range=(0.0, 0.0))
                c = 2 + (seed + n) % 5  # deterministic c in 2..6
                start = time.perf_counter()
                report = allocate(tree, c, gamma)
                diag = approximation_diagnostics(tree, c, report)
                ms = (time.perf_counter() - start) * 1000.0
                within = (diag.d <= diag.bound * diag.delta + 1e-9)
                rows.append({
                    "suite": suite, "family": "random-zero-transfer", "n": n,
                    "c": c, "seed": seed, "gamma": gamma, "algorithm": "disc",
                    "d": diag.d, "delta": diag.delta, "ratio": diag.ratio_d,
                    "flag": "overflow" if report.overflow else str(within).lower(),
                    "runtime_ms": ms,
                })
    elif suite == "greedy-worst":
        for n in sizes:
            g = gen_greedy_worstcase(n)
            c = g.meta["c"]
            # the family documents its own packing constant
            g_gamma = g.meta.get("gamma", gamma)
            tree = parse_tree(g.meta["tree"])
            repaired = Allocation(g.meta["repaired_allocation"], c)
            d_rep = streaming_cost(g, repaired).total_cost
            start = time.perf_counter()
            trace = greedy_trace(
                tree, c, GreedyPolicy.RETAIN_UNLESS_WORSE, g_gamma, graph=g
            )
            ms = (time.perf_counter() - start) * 1000.0
            rows.append({
                "suite": suite, "family": "greedy-worstcase", "n": n, "c": c,
                "seed": "", "gamma": g_gamma, "algorithm": "greedy-keep",
                "d": trace.cost, "delta": d_rep, "ratio": trace.cost / d_rep,
                "flag": f"retained={len(trace.retained)}", "runtime_ms": ms,
            })
            rows.append({
                "suite": suite, "family": "greedy-worstcase", "n": n, "c": c,
                "seed": "", "gamma": g_gamma, "algorithm": "repaired",
                "d": d_rep, "delta": d_rep, "ratio": "", "flag": "",
                "runtime_ms": 0.0,
            })
    else:  # pragma: no cover - argparse restricts choices
        raise FormatMismatch(f"unknown suite {suite}")
    rows.sort(key=lambda r: (str(r["family"]), r["n"], str(r["seed"]), r["algorithm"]))
    return rows


def _rows_to_csv(rows) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def cmd_bench(args) -> int:
    sizes = _parse_int_list(args.sizes) if args.sizes is not None else \
        _BENCH_DEFAULT_SIZES[args.suite]
    seeds = _parse_int_list(args.seeds) if args.seeds else [1]
    rows = _bench_rows(args.suite, sizes, seeds, args.gamma)
    _write_out(_rows_to_csv(rows), args.out)
    if args.plot:
        from .plots import render_bench_plot

        render_bench_plot(rows, args.suite, args.plot)
    return 0


# --- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdalloc",
        description="Allocate stream-processing task graphs onto uniform resources.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate an instance file")
    p_gen.add_argument("family", choices=[
        "parallel-outlier", "partition", "subsetsum", "greedy-worst", "random",
    ])
    p_gen.add_argument("--n", type=int, default=12)
    p_gen.add_argument("--set", default="1,2,3", help="comma-separated multiset")
    p_gen.add_argument("--x", type=int, default=3)
    p_gen.add_argument("--k", type=int, default=1)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--p-serial", type=float, default=0.5)
    p_gen.add_argument("--max-fanout", type=int, default=4)
    p_gen.add_argument("--weight-range", default="0.5,4.0")
    p_gen.add_argument("--edge-weight-range", default="0.0,2.0")
    p_gen.add_argument("--out", "-o", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_solve = sub.add_parser("solve", help="run one allocator on an instance")
    p_solve.add_argument("--input", "-i", required=True, help="file or - for stdin")
    p_solve.add_argument("--c", type=int, required=True)
    p_solve.add_argument("--alg", choices=_ALGS, required=True)
    p_solve.add_argument("--gamma", type=float, default=2.0)
    p_solve.add_argument("--format", choices=["json", "table"], default="json")
    p_solve.add_argument("--out", "-o", default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_eval = sub.add_parser("eval", help="evaluate a given allocation")
    p_eval.add_argument("--input", "-i", required=True)
    p_eval.add_argument("--allocation", required=True, help="allocation JSON file")
    p_eval.add_argument("--format", choices=["json", "table"], default="json")
    p_eval.add_argument("--out", "-o", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", help="compare allocators on one instance")
    p_cmp.add_argument("--input", "-i", required=True)
    p_cmp.add_argument("--c", type=int, required=True)
    p_cmp.add_argument("--algs", required=True, help="comma-separated algorithms")
    p_cmp.add_argument("--gamma", type=float, default=2.0)
    p_cmp.add_argument("--oracle", action="store_true")
    p_cmp.add_argument("--format", choices=["json", "table"], default="json")
    p_cmp.add_argument("--out", "-o", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_bench = sub.add_parser("bench", help="run a benchmark suite to CSV")
    p_bench.add_argument("--suite", choices=list(_BENCH_DEFAULT_SIZES), required=True)
    p_bench.add_argument("--sizes", default=None, help="comma-separated sizes")
    p_bench.add_argument("--seeds", default=None, help="comma-separated seeds")
    p_bench.add_argument("--gamma", type=float, default=2.0)
    p_bench.add_argument("--plot", default=None, help="also render a PNG figure here")
    p_bench.add_argument("--out", "-o", default=None)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SpdallocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
