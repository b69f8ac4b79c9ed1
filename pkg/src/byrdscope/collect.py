"""The collect operator: a left fold over the live event stream.

A :class:`Monitor` pairs an initial accumulator with a step function
``filter(event, acc) -> (acc, StopFlag)``. :func:`run_collect` plugs the
step straight into the engine so no trace is ever materialized;
:func:`foldl_oracle` folds an already-recorded sequence and serves as the
reference the streaming path is checked against.

Accumulators belong to the run that created them. Steps may update them
in place and return the same object; anything handed out mid-run goes
through ``Monitor.snapshot`` first.
"""

from __future__ import annotations

import copy
import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Generic, Iterable, Optional, Sequence, TypeVar

from .engine import EngineOptions, RunOutcome, solve
from .lang import Goal, Program
from .trace_model import Event, StopFlag

log = logging.getLogger(__name__)

A = TypeVar("A")

__all__ = [
    "CollectResult", "CollectSession", "Monitor", "MonitorError",
    "SessionExhaustedError", "StopFlag", "collect_checkpointed", "foldl_oracle",
    "merge", "run_collect",
]


@dataclass(frozen=True)
class Monitor(Generic[A]):
    name: str
    initialize: Callable[[], A]
    filter: Callable[[Event, A], tuple]
    finish: Optional[Callable[[A], Any]] = None
    output: str = "json"  # how the CLI renders finish(): "json" or "dot"
    snapshot: Callable[[A], A] = copy.deepcopy
    parts: tuple = field(default=(), repr=False)

    def describe(self) -> str:
        return self.name

    def render(self, acc: A) -> Any:
        return acc if self.finish is None else self.finish(acc)


class MonitorError(Exception):
    """A monitor step raised; carries the chrono of the offending event."""

    def __init__(self, monitor: str, chrono: int, cause: BaseException):
        super().__init__(f"monitor {monitor!r} failed at event {chrono}: {cause!r}")
        self.monitor = monitor
        self.chrono = chrono


class SessionExhaustedError(RuntimeError):
    pass


@dataclass
class CollectResult(Generic[A]):
    result: A
    stopped_early: bool
    outcome: Optional[RunOutcome] = None


class _Fold:
    """Engine sink that advances a monitor's accumulator one event at a time."""

    __slots__ = ("monitor", "step", "acc", "count")

    def __init__(self, monitor: Monitor):
        self.monitor = monitor
        self.step = monitor.filter
        self.acc = monitor.initialize()
        self.count = 0

    def __call__(self, event: Event) -> StopFlag:
        try:
            self.acc, flag = self.step(event, self.acc)
        except Exception as exc:
            raise MonitorError(self.monitor.name, event.chrono, exc) from exc
        self.count += 1
        return flag


def run_collect(program: Program, query: Goal, options: Optional[EngineOptions],
                monitor: Monitor[A]) -> CollectResult[A]:
    fold = _Fold(monitor)
    outcome = solve(program, query, options, fold)
    return CollectResult(fold.acc, outcome.stopped_early, outcome)


def foldl_oracle(events: Iterable[Event], monitor: Monitor[A]) -> A:
    """Fold ``monitor`` over a materialized trace, truncating at a stop."""
    acc = monitor.initialize()
    for event in events:
        acc, flag = monitor.filter(event, acc)
        if flag is StopFlag.STOP:
            break
    return acc


def merge(monitors: Sequence[Monitor]) -> Monitor[tuple]:
    """Run several monitors in one execution.

    The accumulator is the tuple of the sub-accumulators in input order.
    The merged step stops as soon as any sub-step asks to stop.
    """
    monitors = tuple(monitors)
    if not monitors:
        raise ValueError("merge needs at least one monitor")
    steps = tuple(m.filter for m in monitors)

    def initialize():
        return tuple(m.initialize() for m in monitors)

    def step(event, accs):
        out = []
        stop = False
        for f, acc in zip(steps, accs):
            acc, flag = f(event, acc)
            out.append(acc)
            if flag is StopFlag.STOP:
                stop = True
        return tuple(out), StopFlag.STOP if stop else StopFlag.CONTINUE

    def finish(accs):
        return tuple(m.render(a) for m, a in zip(monitors, accs))

    def snapshot(accs):
        return tuple(m.snapshot(a) for m, a in zip(monitors, accs))

    name = "+".join(m.name for m in monitors)
    return Monitor(name, initialize, step, finish, "merged", snapshot, monitors)


# -- suspendable collection --------------------------------------------------

_RESUME = "resume"
_CANCEL = "cancel"


class CollectSession(Generic[A]):
    """A collect run that suspends every ``every_n`` events.

    The execution lives on a worker thread that blocks inside the event
    sink while suspended, so resuming continues exactly where it stopped.
    Only one side runs at any time: two locks pass a baton back and forth.
    """

    def __init__(self, program: Program, query: Goal, options: Optional[EngineOptions],
                 monitor: Monitor[A], every_n: Optional[int] = None):
        if every_n is not None and every_n < 1:
            raise ValueError("every_n must be >= 1")
        self.program = program
        self.query = query
        self.options = options
        self.monitor = monitor
        self.every_n = every_n
        self.accumulator: A = monitor.initialize()
        self.events_folded = 0
        self.exhausted = False
        self.stopped_early = False
        self.outcome: Optional[RunOutcome] = None
        self._thread: Optional[threading.Thread] = None
        # each lock is held except while the other side hands control over
        self._worker_turn = threading.Lock()
        self._worker_turn.acquire()
        self._caller_turn = threading.Lock()
        self._caller_turn.acquire()
        self._command = _RESUME
        self._message: tuple = ("suspended", None)

    def _sink(self, event: Event) -> StopFlag:
        try:
            self.accumulator, flag = self.monitor.filter(event, self.accumulator)
        except Exception as exc:
            raise MonitorError(self.monitor.name, event.chrono, exc) from exc
        self.events_folded += 1
        if flag is StopFlag.STOP:
            return flag
        if self.every_n and self.events_folded % self.every_n == 0:
            self._message = ("suspended", None)
            self._caller_turn.release()
            self._worker_turn.acquire()
            if self._command == _CANCEL:
                return StopFlag.STOP
        return StopFlag.CONTINUE

    def _work(self):
        try:
            outcome = solve(self.program, self.query, self.options, self._sink)
        except BaseException as exc:  # handed to the caller's thread
            self._message = ("error", exc)
        else:
            self._message = ("done", outcome)
        self._caller_turn.release()

    def resume(self) -> "CollectSession[A]":
        """Run until the next suspension point or the end of the execution."""
        if self.exhausted:
            raise SessionExhaustedError("session already exhausted")
        if self._thread is None:
            self._thread = threading.Thread(target=self._work, daemon=True,
                                            name=f"collect-{self.monitor.name}")
            self._thread.start()
        else:
            self._command = _RESUME
            self._worker_turn.release()
        self._caller_turn.acquire()
        kind, payload = self._message
        if kind == "suspended":
            return self
        self.exhausted = True
        self._thread.join()
        if kind == "error":
            raise payload
        self.outcome = payload
        self.stopped_early = payload.stopped_early
        return self

    def close(self) -> None:
        """Abandon a suspended session, unwinding its execution."""
        if self._thread is None or self.exhausted:
            self.exhausted = True
            return
        self._command = _CANCEL
        self._worker_turn.release()
        self._caller_turn.acquire()
        self._thread.join()
        self.exhausted = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def collect_checkpointed(program: Program, query: Goal, options: Optional[EngineOptions],
                         monitor: Monitor[A], every_n: int,
                         emit: Callable[[A], None], snapshot: bool = True) -> A:
    """Collect with a pause every ``every_n`` events to hand out a snapshot.

    Checkpoints only observe: the final accumulator equals the one-shot
    :func:`run_collect` result. Each snapshot is a copy made with
    ``monitor.snapshot``, safe to keep or pass to another thread. With
    ``snapshot=False`` the live accumulator is passed instead; it is only
    valid until ``emit`` returns, and copying large accumulators at every
    event is avoided.
    """
    if every_n < 1:
        raise ValueError("every_n must be >= 1")
    with CollectSession(program, query, options, monitor, every_n) as session:
        session.resume()
        while not session.exhausted:
            acc = session.accumulator
            emit(monitor.snapshot(acc) if snapshot else acc)
            session.resume()
        log.debug("checkpointed collect: %d events folded", session.events_folded)
        return session.accumulator
