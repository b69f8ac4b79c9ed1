"""Event schema for Byrd-box traces and a well-formedness checker.

A trace is a sequence of :class:`Event` values. The four Byrd ports
(call, exit, fail, redo) are *external*; events fired on entry to a
disjunction branch or a then/else branch are *internal*.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence


class Port(str, enum.Enum):
    CALL = "call"
    EXIT = "exit"
    FAIL = "fail"
    REDO = "redo"
    DISJ = "disj"
    SWITCH = "switch"
    THEN = "then"
    ELSE = "else"

    @property
    def is_external(self) -> bool:
        return self in _EXTERNAL_PORTS


_EXTERNAL_PORTS = frozenset({Port.CALL, Port.EXIT, Port.FAIL, Port.REDO})


class PortClass(str, enum.Enum):
    EXTERNAL = "external"
    INTERNAL = "internal"


def classify_port(port: Port) -> PortClass:
    return PortClass.EXTERNAL if port in _EXTERNAL_PORTS else PortClass.INTERNAL


class Determinism(str, enum.Enum):
    DET = "det"
    SEMIDET = "semidet"
    NONDET = "nondet"
    MULTI = "multi"
    CC_MULTI = "cc_multi"
    CC_NONDET = "cc_nondet"
    FAILURE = "failure"
    UNKNOWN = "unknown"


class StopFlag(str, enum.Enum):
    """Verdict of a monitor step: keep folding or unwind the execution."""

    STOP = "stop"
    CONTINUE = "continue"


@dataclass(frozen=True, slots=True)
class Predicate:
    module_name: str
    proc_name: str
    arity: int
    mode_num: int = 0
    proc_type: str = "predicate"

    def __str__(self) -> str:
        return f"{self.proc_name}/{self.arity}"

    @property
    def indicator(self) -> str:
        return str(self)


ROOT_PREDICATE = Predicate("user", "<query>", 0)


class GoalStep(NamedTuple):
    """One step of a goal path: ``c``/``d`` carry a 1-based index, ``t``/``e`` none."""

    kind: str
    index: Optional[int] = None

    def render(self) -> str:
        return self.kind if self.index is None else f"{self.kind}{self.index}"


def conj(i: int) -> GoalStep:
    if i < 1:
        raise ValueError("conjunct index must be >= 1")
    return GoalStep("c", i)


def disj(i: int) -> GoalStep:
    if i < 1:
        raise ValueError("disjunct index must be >= 1")
    return GoalStep("d", i)


THEN = GoalStep("t")
ELSE = GoalStep("e")


def render_goal_path(path: Sequence[GoalStep]) -> str:
    """Render ``path`` as e.g. ``[c3;e;d1]``.

    Paths are stored innermost step first; the text lists the outermost
    step first.
    """
    return "[" + ";".join(step.render() for step in reversed(path)) + "]"


_STEP_RE = re.compile(r"^(?:([cd])([1-9][0-9]*)|([te]))$")


def parse_goal_path(text: str) -> tuple[GoalStep, ...]:
    """Inverse of :func:`render_goal_path`."""
    if len(text) < 2 or text[0] != "[" or text[-1] != "]":
        raise ValueError(f"malformed goal path: {text!r}")
    body = text[1:-1]
    if not body:
        return ()
    steps = []
    for part in body.split(";"):
        m = _STEP_RE.match(part)
        if m is None:
            raise ValueError(f"malformed goal path step {part!r} in {text!r}")
        if m.group(3):
            steps.append(GoalStep(m.group(3)))
        else:
            steps.append(GoalStep(m.group(1), int(m.group(2))))
    return tuple(reversed(steps))


@dataclass(frozen=True)
class Event:
    """One trace event.

    ``local_vars`` and ``ancestors`` exist for schema completeness and are
    never populated by the engine.
    """

    chrono: int
    goal_id: int
    depth: int
    port: Port
    determinism: Determinism
    predicate: Predicate
    args: Optional[tuple[str, ...]] = None
    goal_path: Optional[tuple[GoalStep, ...]] = None
    local_vars: Optional[tuple[str, ...]] = None
    ancestors: Optional[tuple[Predicate, ...]] = None

    @property
    def is_external(self) -> bool:
        return self.port in _EXTERNAL_PORTS


@dataclass(frozen=True)
class TraceDiagnostic:
    chrono: int
    rule: str
    description: str

    def __str__(self) -> str:
        return f"chrono {self.chrono}: rule ({self.rule}): {self.description}"


class MalformedTraceError(Exception):
    """A trace violates the call-stack discipline."""


def update_call_stack(port: Port, current, stack: tuple) -> tuple:
    """Push on call/redo, pop on exit/fail, leave internal ports alone.

    ``stack`` is a tuple whose last element is the top.
    """
    if port is Port.CALL or port is Port.REDO:
        return stack + (current,)
    if port is Port.EXIT or port is Port.FAIL:
        if not stack:
            raise MalformedTraceError(f"{port.value} event with an empty call stack")
        return stack[:-1]
    return stack


def check_trace(events: Iterable[Event], complete: bool = True) -> list[TraceDiagnostic]:
    """Return one diagnostic per Byrd-discipline violation in ``events``.

    Rules: (a) consecutive chrono from 1; (b) stack never underflows and,
    when ``complete``, ends empty; (c) exit/fail match the stack top;
    (d) redo only for a goal that has exited; (e) call depth is one more
    than the enclosing call; (f) goal paths only on internal events.
    """
    diags: list[TraceDiagnostic] = []
    stack: tuple = ()  # of (goal_id, predicate, depth)
    exited: set[int] = set()
    expected = 1
    last_chrono = 0
    for ev in events:
        last_chrono = ev.chrono
        if ev.chrono != expected:
            diags.append(TraceDiagnostic(
                ev.chrono, "a", f"expected chrono {expected}, got {ev.chrono}"))
        expected = ev.chrono + 1

        external = ev.port in _EXTERNAL_PORTS
        if external and ev.goal_path is not None:
            diags.append(TraceDiagnostic(
                ev.chrono, "f", f"goal path on external {ev.port.value} event"))

        if ev.port is Port.CALL:
            parent_depth = stack[-1][2] if stack else 0
            if ev.depth != parent_depth + 1:
                diags.append(TraceDiagnostic(
                    ev.chrono, "e",
                    f"call depth {ev.depth} but enclosing depth is {parent_depth}"))
        elif ev.port is Port.REDO:
            if ev.goal_id not in exited:
                diags.append(TraceDiagnostic(
                    ev.chrono, "d", f"redo of goal {ev.goal_id} which never exited"))
        elif ev.port is Port.EXIT or ev.port is Port.FAIL:
            if not stack:
                diags.append(TraceDiagnostic(
                    ev.chrono, "b", f"pop of empty stack at {ev.port.value} {ev.predicate}"))
                continue
            top_goal, top_pred, _ = stack[-1]
            if top_pred != ev.predicate or top_goal != ev.goal_id:
                diags.append(TraceDiagnostic(
                    ev.chrono, "c",
                    f"{ev.port.value} of {ev.predicate} (goal {ev.goal_id}) "
                    f"but innermost call is {top_pred} (goal {top_goal})"))
            if ev.port is Port.EXIT:
                exited.add(ev.goal_id)
        if external:
            stack = update_call_stack(ev.port, (ev.goal_id, ev.predicate, ev.depth), stack)

    if complete and stack:
        open_goals = ", ".join(f"{p} (goal {g})" for g, p, _ in stack)
        diags.append(TraceDiagnostic(
            last_chrono, "b", f"trace ends with open calls: {open_goals}"))
    return diags
