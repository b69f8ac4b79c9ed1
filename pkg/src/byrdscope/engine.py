"""Depth-first backtracking interpreter that reports Byrd-box events.

Each user-predicate activation is a procedure box: ``call`` on entry,
``exit`` per solution, ``redo`` when execution backtracks into it and
``fail`` once its clauses are exhausted. With internal events enabled,
entering a disjunction branch or a then/else branch also fires an event
tagged with its goal path inside the enclosing clause body.

Search is written as nested generators: a goal's generator yields once
per solution, leaving its bindings on a shared trail. Resuming the
generator backtracks into the goal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .lang import (
    Builtin, Call, Conj, Disj, FailGoal, Goal, Int, Ite, Program,
    Struct, Term, TrueGoal, Unify, Var, goal_variables, iter_calls, render_term,
)
from .trace_model import (
    ELSE, ROOT_PREDICATE, THEN, Determinism, Event, Port, Predicate,
    StopFlag, conj, disj,
)

log = logging.getLogger(__name__)

EventSink = Callable[[Event], Optional[StopFlag]]
Substitution = dict  # Var -> Term


class EngineError(Exception):
    """Raised for run-time errors in the interpreted program."""


class UndefinedPredicateError(EngineError):
    def __init__(self, indicator: str):
        super().__init__(f"undefined predicate: {indicator}")
        self.indicator = indicator


@dataclass(frozen=True)
class EngineOptions:
    emit_internal_events: bool = False
    capture_args: bool = False
    all_solutions: bool = False
    max_events: Optional[int] = None

    def __post_init__(self):
        if self.max_events is not None and self.max_events < 1:
            raise ValueError("max_events must be a positive integer")


@dataclass
class RunOutcome:
    solutions: list = field(default_factory=list)
    stopped_early: bool = False
    events_emitted: int = 0


# -- bindings ----------------------------------------------------------------


class Bindings:
    """Variable bindings with a trail for undoing them on backtracking."""

    __slots__ = ("values", "trail")

    def __init__(self, values: Optional[dict] = None):
        self.values = {} if values is None else values
        self.trail: list = []

    def deref(self, t):
        values = self.values
        while type(t) is Var:
            bound = values.get(t)
            if bound is None:
                return t
            t = bound
        return t

    def bind(self, var: Var, t) -> None:
        self.values[var] = t
        self.trail.append(var)

    def undo(self, mark: int) -> None:
        trail, values = self.trail, self.values
        while len(trail) > mark:
            del values[trail.pop()]

    def unify(self, a, b) -> bool:
        # no occurs check
        todo = [(a, b)]
        while todo:
            x, y = todo.pop()
            x = self.deref(x)
            y = self.deref(y)
            if x is y:
                continue
            tx, ty = type(x), type(y)
            if tx is Var:
                if ty is Var and x == y:
                    continue
                self.bind(x, y)
            elif ty is Var:
                self.bind(y, x)
            elif tx is Struct:
                if ty is not Struct or x.functor != y.functor or len(x.args) != len(y.args):
                    return False
                todo.extend(zip(x.args, y.args))
            elif x != y:
                return False
        return True

    def resolve(self, t):
        t = self.deref(t)
        if type(t) is Struct:
            return Struct(t.functor, tuple(self.resolve(a) for a in t.args))
        return t

    def substitution(self) -> Substitution:
        return {v: self.resolve(v) for v in self.values}


def unify(a: Term, b: Term, s: Optional[Substitution] = None) -> Optional[Substitution]:
    """Most general unifier of ``a`` and ``b`` extending ``s``, or None on clash."""
    bindings = Bindings(dict(s or {}))
    if not bindings.unify(a, b):
        return None
    return bindings.substitution()


# -- arithmetic --------------------------------------------------------------


def _int_div(a: int, b: int) -> int:
    if b == 0:
        raise EngineError("integer division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "//": _int_div,
}

_COMPARE = {
    "=:=": lambda a, b: a == b,
    "=\\=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def _eval(t, b: Bindings) -> int:
    t = b.deref(t)
    if type(t) is Int:
        return t.value
    if type(t) is Var:
        raise EngineError("unbound arithmetic operand")
    if type(t) is Struct and len(t.args) == 2 and t.functor in _ARITH:
        return _ARITH[t.functor](_eval(t.args[0], b), _eval(t.args[1], b))
    raise EngineError(f"non-integer arithmetic operand: {render_term(b.resolve(t))}")


def _builtin(name: str, args: tuple, b: Bindings) -> bool:
    if name == "is":
        return b.unify(args[0], Int(_eval(args[1], b)))
    if name in _COMPARE:
        return _COMPARE[name](_eval(args[0], b), _eval(args[1], b))
    if name == "=":
        return b.unify(args[0], args[1])
    if name == "\\=":
        mark = len(b.trail)
        ok = b.unify(args[0], args[1])
        b.undo(mark)
        return not ok
    raise EngineError(f"unknown builtin {name}/{len(args)}")


def eval_builtin(name: str, args, s: Optional[Substitution] = None) -> Optional[Substitution]:
    """Run builtin ``name`` on ``args`` under ``s``; None when it fails."""
    bindings = Bindings(dict(s or {}))
    if not _builtin(name, tuple(args), bindings):
        return None
    return bindings.substitution()


# -- renaming ----------------------------------------------------------------


def _copy_term(t, m: dict):
    tt = type(t)
    if tt is Var:
        return m[t]
    if tt is Struct:
        return Struct(t.functor, tuple(_copy_term(a, m) for a in t.args))
    return t


def _copy_goal(g, m: dict):
    tg = type(g)
    if tg is Call:
        return Call(g.name, tuple(_copy_term(a, m) for a in g.args))
    if tg is Conj:
        return Conj(tuple(_copy_goal(x, m) for x in g.goals))
    if tg is Unify:
        return Unify(_copy_term(g.left, m), _copy_term(g.right, m))
    if tg is Builtin:
        return Builtin(g.name, tuple(_copy_term(a, m) for a in g.args))
    if tg is Disj:
        return Disj(tuple(_copy_goal(x, m) for x in g.goals))
    if tg is Ite:
        return Ite(_copy_goal(g.cond, m), _copy_goal(g.then, m), _copy_goal(g.else_, m))
    return g


def _term_vars(t, out: dict):
    if type(t) is Var:
        out.setdefault(t)
    elif type(t) is Struct:
        for a in t.args:
            _term_vars(a, out)


class _CompiledClause:
    __slots__ = ("args", "body", "variables")

    def __init__(self, clause):
        self.args = clause.args
        self.body = clause.body
        found: dict = {}
        for a in clause.args:
            _term_vars(a, found)
        for v in goal_variables(clause.body):
            found.setdefault(v)
        self.variables = tuple(found)


# -- the machine -------------------------------------------------------------


class _Stop(Exception):
    pass


class _Frame:
    """The enclosing call that internal events and child calls refer to."""

    __slots__ = ("goal_id", "depth", "predicate", "determinism", "args")

    def __init__(self, goal_id, depth, predicate, determinism, args):
        self.goal_id = goal_id
        self.depth = depth
        self.predicate = predicate
        self.determinism = determinism
        self.args = args


def _succeed():
    yield


def _fail():
    return
    yield


class _Machine:
    def __init__(self, program: Program, options: EngineOptions,
                 sink: Optional[EventSink]):
        self.program = program
        self.options = options
        self.sink = sink
        self.tracing = sink is not None
        self.internal = self.tracing and options.emit_internal_events
        self.capture = self.tracing and options.capture_args
        self.max_events = options.max_events if self.tracing else None
        self.b = Bindings()
        self.serial = 0
        self.chrono = 0
        self.goal_counter = 0
        self.procs = {
            key: (Predicate("user", key[0], key[1]),
                  program.determinism.get(key, Determinism.UNKNOWN),
                  tuple(_CompiledClause(c) for c in clauses))
            for key, clauses in program.predicates.items()
        }

    def fresh(self, vs) -> dict:
        m = {}
        for v in vs:
            self.serial += 1
            m[v] = Var("_G", self.serial)
        return m

    def render_args(self, args: tuple) -> tuple:
        return tuple(render_term(self.b.resolve(a)) for a in args)

    def emit(self, goal_id, depth, port, predicate, determinism, args, path):
        self.chrono += 1
        reply = self.sink(Event(self.chrono, goal_id, depth, port, determinism,
                                predicate, args, path))
        if reply is StopFlag.STOP:
            raise _Stop
        if self.max_events is not None and self.chrono >= self.max_events:
            raise _Stop

    def emit_internal(self, frame: _Frame, port: Port, path: tuple):
        args = self.render_args(frame.args) if self.capture else None
        self.emit(frame.goal_id, frame.depth, port, frame.predicate,
                  frame.determinism, args, path)

    # one generator per goal kind; each yields once per solution

    def solve(self, g, frame: _Frame, path) -> Iterator[None]:
        tg = type(g)
        if tg is Call:
            return self.call(g, frame)
        if tg is Conj:
            return self.conj(g.goals, 0, frame, path)
        if tg is Unify:
            return self.unify_goal(g.left, g.right)
        if tg is Builtin:
            return self.builtin(g)
        if tg is Disj:
            return self.disj(g, frame, path)
        if tg is Ite:
            return self.ite(g, frame, path)
        if tg is TrueGoal:
            return _succeed()
        if tg is FailGoal:
            return _fail()
        raise TypeError(f"not a goal: {g!r}")

    def unify_goal(self, left, right):
        b = self.b
        mark = len(b.trail)
        if b.unify(left, right):
            yield
        b.undo(mark)

    def builtin(self, g: Builtin):
        b = self.b
        mark = len(b.trail)
        if _builtin(g.name, g.args, b):
            yield
        b.undo(mark)

    def conj(self, goals, i, frame, path):
        sub = (conj(i + 1),) + path if self.internal else None
        if i == len(goals) - 1:
            yield from self.solve(goals[i], frame, sub)
            return
        for _ in self.solve(goals[i], frame, sub):
            yield from self.conj(goals, i + 1, frame, path)

    def disj(self, g: Disj, frame, path):
        for i, branch in enumerate(g.goals, 1):
            sub = None
            if self.internal:
                sub = (disj(i),) + path
                self.emit_internal(frame, Port.DISJ, sub)
            yield from self.solve(branch, frame, sub)

    def ite(self, g: Ite, frame, path):
        b = self.b
        mark = len(b.trail)
        cond = self.solve(g.cond, frame, path)
        proved = next(cond, False) is None
        # commit to the first solution of the condition
        cond.close()
        if proved:
            sub = None
            if self.internal:
                sub = (THEN,) + path
                self.emit_internal(frame, Port.THEN, sub)
            yield from self.solve(g.then, frame, sub)
        else:
            sub = None
            if self.internal:
                sub = (ELSE,) + path
                self.emit_internal(frame, Port.ELSE, sub)
            yield from self.solve(g.else_, frame, sub)
        b.undo(mark)

    def call(self, g: Call, parent: _Frame):
        predicate, det, clauses = self.procs[g.key]
        self.goal_counter += 1
        gid = self.goal_counter
        depth = parent.depth + 1
        frame = _Frame(gid, depth, predicate, det, g.args)
        tracing = self.tracing
        call_args = None
        if tracing:
            if self.capture:
                call_args = self.render_args(g.args)
            self.emit(gid, depth, Port.CALL, predicate, det, call_args, None)
        b = self.b
        body_path = () if self.internal else None
        for clause in clauses:
            mark = len(b.trail)
            m = self.fresh(clause.variables) if clause.variables else {}
            ok = True
            for head_arg, actual in zip(clause.args, g.args):
                if not b.unify(_copy_term(head_arg, m) if m else head_arg, actual):
                    ok = False
                    break
            if ok:
                body = _copy_goal(clause.body, m) if m else clause.body
                for _ in self.solve(body, frame, body_path):
                    if tracing:
                        exit_args = self.render_args(g.args) if self.capture else None
                        self.emit(gid, depth, Port.EXIT, predicate, det, exit_args, None)
                    yield
                    if tracing:
                        self.emit(gid, depth, Port.REDO, predicate, det, call_args, None)
            b.undo(mark)
        if tracing:
            self.emit(gid, depth, Port.FAIL, predicate, det, call_args, None)


def check_defined(program: Program, query: Goal) -> None:
    """Raise UndefinedPredicateError for any user call reachable from ``query``."""
    seen: set = set()
    todo = [c.key for c in iter_calls(query)]
    while todo:
        key = todo.pop()
        if key in seen:
            continue
        seen.add(key)
        if key not in program:
            raise UndefinedPredicateError(f"{key[0]}/{key[1]}")
        for clause in program.clauses(key):
            todo.extend(c.key for c in iter_calls(clause.body))


def solve(program: Program, query: Goal, options: Optional[EngineOptions] = None,
          sink: Optional[EventSink] = None) -> RunOutcome:
    """Run ``query`` against ``program``, feeding every event to ``sink``.

    The query runs as the body of a synthetic root goal (goal id 0, depth 0)
    that emits no events. ``sink`` returning ``StopFlag.STOP`` unwinds the
    search at once; solutions found so far are kept.
    """
    options = options or EngineOptions()
    check_defined(program, query)
    m = _Machine(program, options, sink)
    qvars = goal_variables(query)
    renaming = m.fresh(qvars)
    root = _Frame(0, 0, ROOT_PREDICATE, Determinism.UNKNOWN, ())
    outcome = RunOutcome()
    search = m.solve(_copy_goal(query, renaming), root, () if m.internal else None)
    try:
        for _ in search:
            outcome.solutions.append({v: m.b.resolve(renaming[v]) for v in qvars})
            if not options.all_solutions:
                break
    except _Stop:
        outcome.stopped_early = True
    finally:
        search.close()
    outcome.events_emitted = m.chrono
    log.debug("run finished: %d events, %d solutions, stopped_early=%s",
              m.chrono, len(outcome.solutions), outcome.stopped_early)
    return outcome


def solution_text(solution: Substitution) -> dict[str, str]:
    return {v.name: render_term(t) for v, t in solution.items() if v.name != "_"}


__all__ = [
    "Bindings", "EngineError", "EngineOptions", "EventSink", "RunOutcome",
    "Substitution", "UndefinedPredicateError", "check_defined", "eval_builtin",
    "solution_text", "solve", "unify",
]
