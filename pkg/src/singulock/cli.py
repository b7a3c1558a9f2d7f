"""Command-line front end: ``singulock {analyze,explore,filtration,export-dot} FILE``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .calculus import ProgramError, parse_program
from .homology import persistence_csv, persistent_h1
from .report import EXIT_BOUND, EXIT_INPUT, EXIT_OK, AnalysisConfig, analyze, render_text, to_json
from .semantics import explore, to_dot
from .semantics import to_json as graph_json
from .topology import POLICIES, depth_filtration


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="program source (.ccs) or a bundled fixture name such as FX-PHIL2")
    common.add_argument("--max-states", type=int, default=100_000)
    common.add_argument("--max-depth", type=int, default=10_000)
    common.add_argument("--cells", choices=POLICIES, default="both", help="two-cell policy")
    common.add_argument("--fairness", choices=("weak", "strong"), default="weak")
    common.add_argument("--kmax", type=int, default=None, help="last filtration level (default: full graph)")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--dot", metavar="PATH", help="also write the execution graph as DOT")
    common.add_argument("--csv", metavar="PATH", help="also write persistence pairs as CSV")
    common.add_argument("--future-depth", type=int, default=4, help="walk length for bounded future classes")

    p = argparse.ArgumentParser(prog="singulock", description="Deadlock and livelock analysis via execution-space topology.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="full analysis report")
    sub.add_parser("explore", parents=[common], help="execution graph only")
    sub.add_parser("filtration", parents=[common], help="persistence pairs of the depth filtration as CSV")
    sub.add_parser("export-dot", parents=[common], help="execution graph in Graphviz DOT")
    return p


def _resolve(path: str) -> Path | None:
    p = Path(path)
    if p.is_file():
        return p
    from .corpus import fixture_names, fixture_path

    stem = p.name[:-4] if p.name.endswith(".ccs") else p.name
    if stem in fixture_names() and not p.parent.parts:
        return Path(str(fixture_path(stem)))
    return None


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = AnalysisConfig(
            input=args.input,
            fairness=args.fairness,
            cells=args.cells,
            max_states=args.max_states,
            max_depth=args.max_depth,
            kmax=args.kmax,
            future_depth=args.future_depth,
            format=args.format,
            dot=args.dot,
            csv=args.csv,
            seed=os.environ.get("SINGULOCK_SEED"),
        )
    except ValueError as exc:
        print(f"singulock: {exc}", file=sys.stderr)
        return EXIT_INPUT
    src = _resolve(args.input)
    if src is None:
        print(f"singulock: cannot read {args.input!r}: no such file or fixture", file=sys.stderr)
        return EXIT_INPUT
    try:
        program = parse_program(src.read_bytes())
    except ProgramError as exc:
        for d in exc.diagnostics:
            print(f"{args.input}:{d}", file=sys.stderr)
        return EXIT_INPUT

    graph = explore(program, config.max_states, config.max_depth)
    bounded = EXIT_BOUND if graph.truncated else EXIT_OK
    if graph.truncated:
        print("singulock: exploration bound reached; results cover the explored prefix only", file=sys.stderr)
    if args.dot:
        _emit(to_dot(graph), args.dot)

    if args.command == "explore":
        if config.format == "json":
            _emit(graph_json(graph), None)
        else:
            _emit(f"{graph.num_vertices} states, {len(graph.edges)} transitions\n", None)
        return bounded
    if args.command == "export-dot":
        if not args.dot:
            _emit(to_dot(graph), None)
        return bounded
    if args.command == "filtration":
        try:
            pairs = persistent_h1(depth_filtration(graph, config.cells, config.kmax))
        except ValueError as exc:
            print(f"singulock: {exc}", file=sys.stderr)
            return EXIT_INPUT
        _emit(persistence_csv(pairs), args.csv)
        return bounded

    report = analyze(program, config, graph)
    if args.csv and "pairs" in report["persistence"]:
        pairs = persistent_h1(depth_filtration(graph, config.cells, config.kmax))
        _emit(persistence_csv(pairs), args.csv)
    _emit(to_json(report) if config.format == "json" else render_text(report), None)
    return report["verdict"]["exit_code"]


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
