"""Command-line front end: run programs under monitors, record and replay traces.

Exit status is 0 on success, 1 for program or file errors, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .collect import Monitor, MonitorError, collect_checkpointed, merge, run_collect
from .engine import EngineError, EngineOptions, solve, solution_text
from .lang import ParseError, parse_program, parse_query
from .monitors import REGISTRY, UnknownMonitorError, get_monitor
from .trace_io import (
    TraceFormatError, TraceWriter, make_header, open_writer, read_header, read_trace, replay,
)
from .trace_model import MalformedTraceError, check_trace

log = logging.getLogger("byrdscope")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _styled(text: str, code: str) -> str:
    if os.environ.get("BYRDSCOPE_NO_COLOR") or not sys.stderr.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _error(message: str) -> None:
    print(f"{_styled('error:', '1;31')} {message}", file=sys.stderr)


def _note(message: str) -> None:
    print(f"{_styled('note:', '36')} {message}", file=sys.stderr)


# -- argument parsing --------------------------------------------------------


def _engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--query", "-q", default="main.",
                   help="query to run (default: %(default)s)")
    p.add_argument("--internal-events", action="store_true",
                   help="also emit disj/then/else events")
    p.add_argument("--args", action="store_true", dest="capture_args",
                   help="capture rendered call arguments on every event")
    p.add_argument("--all-solutions", action="store_true",
                   help="backtrack through every solution of the query")
    p.add_argument("--max-events", type=int, metavar="N",
                   help="stop after N events")


def _monitor_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--monitor", "-m", action="append", dest="monitors", metavar="NAME",
                   help=f"monitor to run, repeatable ({', '.join(REGISTRY)}); "
                        "default count-calls")
    p.add_argument("--dot", action="append", default=[], metavar="PATH",
                   help="DOT output for graph monitors, repeatable")
    p.add_argument("--out", "-o", metavar="PATH",
                   help="write JSON results here instead of stdout")
    p.add_argument("--node-args", action="store_true",
                   help="append captured arguments to graph and tree node labels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="byrdscope",
        description="Trace a logic program and fold monitors over its Byrd-box events.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a program under one or more monitors")
    run.add_argument("program")
    _engine_flags(run)
    _monitor_flags(run)
    run.add_argument("--checkpoint-every", type=int, metavar="N",
                     help="suspend every N events and hand out a snapshot")

    trace = sub.add_parser("trace", help="record a trace file")
    trace.add_argument("program")
    _engine_flags(trace)
    trace.add_argument("--output", "-o", metavar="PATH",
                       help="trace file to write (default: stdout)")

    rep = sub.add_parser("replay", help="fold monitors over a recorded trace")
    rep.add_argument("trace")
    _monitor_flags(rep)

    chk = sub.add_parser("check", help="validate a trace file")
    chk.add_argument("trace")
    chk.add_argument("--partial", action="store_true",
                     help="the trace was cut short; open calls at the end are fine")
    return parser


# -- helpers -----------------------------------------------------------------


def _options(args) -> EngineOptions:
    if args.max_events is not None and args.max_events < 1:
        raise UsageError("--max-events must be a positive integer")
    return EngineOptions(emit_internal_events=args.internal_events,
                         capture_args=args.capture_args,
                         all_solutions=args.all_solutions,
                         max_events=args.max_events)


def _load(args):
    path = Path(args.program)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"file not found: {path}") from None
    try:
        program = parse_program(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc.message}", exc.line, exc.column) from None
    try:
        query = parse_query(args.query)
    except ParseError as exc:
        raise ParseError(f"query: {exc.message}", exc.line, exc.column) from None
    return program, query


def _monitors(args) -> list[Monitor]:
    names = args.monitors or ["count-calls"]
    if len(set(names)) != len(names):
        raise UsageError("each monitor may be given only once")
    try:
        monitors = [get_monitor(n, with_args=args.node_args) for n in names]
    except UnknownMonitorError as exc:
        raise UsageError(str(exc)) from None
    _dot_paths(args, monitors)
    return monitors


def _dot_paths(args, monitors: Sequence[Monitor]) -> dict[str, Path]:
    graph = [m.name for m in monitors if m.output == "dot"]
    dots = [Path(d) for d in args.dot]
    if not graph:
        if dots:
            raise UsageError("--dot given but no graph monitor selected")
        return {}
    if not dots:
        raise UsageError(f"monitor {graph[0]} writes DOT; pass --dot PATH")
    if len(dots) == len(graph):
        return dict(zip(graph, dots))
    if len(dots) == 1:
        base = dots[0]
        return {name: base.with_name(f"{base.stem}.{name}{base.suffix or '.dot'}")
                for name in graph}
    raise UsageError(f"{len(dots)} --dot paths for {len(graph)} graph monitors")


def _write_results(args, monitors: Sequence[Monitor], accs: Sequence) -> None:
    dot_paths = _dot_paths(args, monitors)
    values = {}
    for m, acc in zip(monitors, accs):
        rendered = m.render(acc)
        if m.output == "dot":
            dot_paths[m.name].write_text(rendered, encoding="utf-8", newline="\n")
            log.info("wrote %s", dot_paths[m.name])
        else:
            values[m.name] = rendered
    if not values:
        return
    payload = next(iter(values.values())) if len(values) == 1 else values
    text = json.dumps(payload, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------


def cmd_run(args) -> int:
    monitors = _monitors(args)
    options = _options(args)
    if args.checkpoint_every is not None and args.checkpoint_every < 1:
        raise UsageError("--checkpoint-every must be a positive integer")
    program, query = _load(args)
    merged = merge(monitors)
    if args.checkpoint_every:
        checkpoints = 0

        def emit(_acc):
            nonlocal checkpoints
            checkpoints += 1
            log.debug("checkpoint %d", checkpoints)

        accs = collect_checkpointed(program, query, options, merged,
                                    args.checkpoint_every, emit, snapshot=False)
        log.info("%d checkpoints", checkpoints)
    else:
        result = run_collect(program, query, options, merged)
        accs = result.result
        if result.stopped_early:
            _note(f"execution stopped early after {result.outcome.events_emitted} events")
        for sol in result.outcome.solutions:
            log.info("solution: %s", solution_text(sol))
    _write_results(args, monitors, accs)
    return EXIT_OK


def cmd_trace(args) -> int:
    options = _options(args)
    program, query = _load(args)
    header = make_header(Path(args.program).stem, args.query, options)
    if args.output:
        with open_writer(args.output, header) as writer:
            outcome = solve(program, query, options, writer)
    else:
        outcome = solve(program, query, options, TraceWriter(sys.stdout, header))
    log.info("%d events, %d solutions", outcome.events_emitted, len(outcome.solutions))
    if outcome.stopped_early:
        _note(f"execution stopped early after {outcome.events_emitted} events")
    return EXIT_OK


def cmd_replay(args) -> int:
    monitors = _monitors(args)
    merged = merge(monitors)
    accs = replay(args.trace, merged)
    _write_results(args, monitors, accs)
    return EXIT_OK


def cmd_check(args) -> int:
    header = read_header(args.trace)
    events = read_trace(args.trace)
    max_events = (header.get("options") or {}).get("max_events")
    cut_short = args.partial or bool(max_events and len(events) >= max_events)
    diags = check_trace(events, complete=not cut_short)
    for d in diags:
        print(str(d), file=sys.stderr)
    if diags:
        _error(f"{len(diags)} problem(s) in {len(events)} events")
        return EXIT_ERROR
    print(f"ok: {len(events)} events")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "trace": cmd_trace, "replay": cmd_replay, "check": cmd_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        _error(str(exc))
        return EXIT_USAGE
    except ParseError as exc:
        _error(f"parse error at {exc.line}:{exc.column}: {exc.message}")
    except (FileNotFoundError, IsADirectoryError) as exc:
        _error(str(exc) if str(exc).startswith("file not found") else f"file not found: {exc.filename}")
    except TraceFormatError as exc:
        _error(f"{args.trace}: {exc}")
    except (EngineError, MonitorError, MalformedTraceError) as exc:
        _error(str(exc))
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
