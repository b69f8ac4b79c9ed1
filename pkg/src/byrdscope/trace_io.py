"""Line-delimited JSON trace files.

Line 1 is a header record; every following line is one event with
explicit field names. Optional attributes are omitted, never null::

    {"format": "byrdscope-trace", "version": "1.0", "program": "q", ...}
    {"chrono": 1, "goal_id": 1, "depth": 1, "port": "call", ...}
"""

from __future__ import annotations

import io
import json
import os
from contextlib import contextmanager
from dataclasses import asdict
from typing import IO, Iterable, Iterator, Optional, Union

from .collect import Monitor, foldl_oracle
from .trace_model import Determinism, Event, Port, Predicate, StopFlag, parse_goal_path, render_goal_path

FORMAT = "byrdscope-trace"
VERSION = "1.0"

PathLike = Union[str, os.PathLike]


class TraceFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


def make_header(program: str = "", query: str = "", options=None) -> dict:
    opts = asdict(options) if options is not None else {}
    return {"format": FORMAT, "version": VERSION, "program": program,
            "query": query, "options": opts}


def event_to_record(ev: Event) -> dict:
    p = ev.predicate
    rec = {
        "chrono": ev.chrono, "goal_id": ev.goal_id, "depth": ev.depth,
        "port": ev.port.value, "determinism": ev.determinism.value,
        "module": p.module_name, "name": p.proc_name, "arity": p.arity,
        "mode_num": p.mode_num, "proc_type": p.proc_type,
    }
    if ev.args is not None:
        rec["args"] = list(ev.args)
    if ev.goal_path is not None:
        rec["goal_path"] = render_goal_path(ev.goal_path)
    return rec


_INT_FIELDS = ("chrono", "goal_id", "depth", "arity", "mode_num")
_STR_FIELDS = ("port", "determinism", "module", "name", "proc_type")


def record_to_event(rec: dict, line: int = 0) -> Event:
    if not isinstance(rec, dict):
        raise TraceFormatError("event record must be a JSON object", line)
    for key in _INT_FIELDS:
        if type(rec.get(key)) is not int:
            raise TraceFormatError(f"field {key!r} missing or not an integer", line)
    for key in _STR_FIELDS:
        if not isinstance(rec.get(key), str):
            raise TraceFormatError(f"field {key!r} missing or not a string", line)
    try:
        port = Port(rec["port"])
        det = Determinism(rec["determinism"])
    except ValueError as exc:
        raise TraceFormatError(str(exc), line) from None
    args = rec.get("args")
    if args is not None:
        if not isinstance(args, list) or not all(isinstance(a, str) for a in args):
            raise TraceFormatError("field 'args' must be a list of strings", line)
        args = tuple(args)
    path = rec.get("goal_path")
    if path is not None:
        try:
            path = parse_goal_path(path)
        except (ValueError, TypeError) as exc:
            raise TraceFormatError(str(exc), line) from None
    pred = Predicate(rec["module"], rec["name"], rec["arity"], rec["mode_num"],
                     rec["proc_type"])
    return Event(rec["chrono"], rec["goal_id"], rec["depth"], port, det, pred, args, path)


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False) + "\n"


class TraceWriter:
    """Engine sink that streams events to a trace file."""

    def __init__(self, out: IO[str], header: Optional[dict] = None):
        self.out = out
        self.count = 0
        out.write(_dump(header or make_header()))

    def __call__(self, event: Event) -> StopFlag:
        self.out.write(_dump(event_to_record(event)))
        self.count += 1
        return StopFlag.CONTINUE


@contextmanager
def open_writer(path: PathLike, header: Optional[dict] = None) -> Iterator[TraceWriter]:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield TraceWriter(fh, header)


def write_trace(events: Iterable[Event], path: PathLike, header: Optional[dict] = None) -> int:
    with open_writer(path, header) as writer:
        for ev in events:
            writer(ev)
        return writer.count


def _lines(fh: IO[str]) -> Iterator[tuple[int, dict]]:
    for lineno, raw in enumerate(fh, 1):
        if not raw.endswith("\n"):
            raise TraceFormatError("truncated record (no line terminator)", lineno)
        try:
            yield lineno, json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"invalid JSON: {exc.msg}", lineno) from None


def _check_header(rec, lineno: int = 1) -> dict:
    if not isinstance(rec, dict) or rec.get("format") != FORMAT:
        raise TraceFormatError("not a trace file (bad header)", lineno)
    version = str(rec.get("version", ""))
    major = version.split(".")[0]
    if major != VERSION.split(".")[0]:
        raise TraceFormatError(
            f"unsupported trace format version {version!r} (reader supports {VERSION})", lineno)
    return rec


def iter_trace(source: Union[PathLike, IO[str]]) -> Iterator[Event]:
    """Stream events from a trace file, validating the header first."""
    if isinstance(source, io.TextIOBase):
        yield from _iter_open(source)
        return
    with open(source, encoding="utf-8", newline="") as fh:
        yield from _iter_open(fh)


def _iter_open(fh: IO[str]) -> Iterator[Event]:
    lines = _lines(fh)
    first = next(lines, None)
    if first is None:
        raise TraceFormatError("empty file (missing header)", 1)
    _check_header(first[1], first[0])
    for lineno, rec in lines:
        yield record_to_event(rec, lineno)


def read_header(path: PathLike) -> dict:
    with open(path, encoding="utf-8", newline="") as fh:
        first = next(_lines(fh), None)
    if first is None:
        raise TraceFormatError("empty file (missing header)", 1)
    return _check_header(first[1])


def read_trace(path: PathLike) -> list[Event]:
    return list(iter_trace(path))


def replay(path: PathLike, monitor: Monitor):
    """Fold ``monitor`` over a recorded trace; stops reading at a stop flag."""
    events = iter_trace(path)
    try:
        return foldl_oracle(events, monitor)
    finally:
        events.close()
