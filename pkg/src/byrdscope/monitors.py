"""Built-in monitors: counters, histograms, flow and call graphs, proof trees."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Optional, Union

from .collect import Monitor
from .graphviz import graph_to_dot, tree_to_dot
from .trace_model import (
    ROOT_PREDICATE, Event, MalformedTraceError, Port, Predicate, StopFlag,
    update_call_stack,
)

CONTINUE = StopFlag.CONTINUE

Node = Union[Predicate, str]


class Arc(NamedTuple):
    source: Node
    target: Node


class LabeledArc(NamedTuple):
    source: Node
    chrono: int
    target: Node


def _node(event: Event, with_args: bool) -> Node:
    if with_args and event.args is not None:
        return f"{event.predicate.proc_name}({', '.join(event.args)})"
    return event.predicate


def _same(acc):
    return acc


# -- counters ----------------------------------------------------------------


def count_call_monitor() -> Monitor[int]:
    def step(event, n):
        return (n + 1 if event.port is Port.CALL else n), CONTINUE

    return Monitor("count-calls", lambda: 0, step, snapshot=_same)


def port_histogram_monitor() -> Monitor[dict]:
    def step(event, hist):
        hist[event.port] = hist.get(event.port, 0) + 1
        return hist, CONTINUE

    def finish(hist):
        return {port.value: n for port, n in hist.items()}

    return Monitor("port-histogram", dict, step, finish, snapshot=dict.copy)


def depth_histogram_monitor() -> Monitor[dict]:
    def step(event, hist):
        hist[event.depth] = hist.get(event.depth, 0) + 1
        return hist, CONTINUE

    def finish(hist):
        return {str(depth): n for depth, n in sorted(hist.items())}

    return Monitor("depth-histogram", dict, step, finish, snapshot=dict.copy)


# -- control flow graphs -----------------------------------------------------


@dataclass
class FlowState:
    """Last visited node plus the arcs seen so far."""

    previous: Node = ROOT_PREDICATE
    arcs: set = field(default_factory=set)

    def copy(self) -> "FlowState":
        return FlowState(self.previous, set(self.arcs))


def cfg_monitor(with_args: bool = False) -> Monitor[FlowState]:
    """Arc from the previous to the current predicate at every external event."""

    def step(event, acc):
        if event.port.is_external:
            current = _node(event, with_args)
            acc.arcs.add(Arc(acc.previous, current))
            acc.previous = current
        return acc, CONTINUE

    return Monitor("cfg", FlowState, step,
                   lambda acc: graph_to_dot(acc.arcs, "cfg"), "dot", FlowState.copy)


def cfg_chrono_monitor(with_args: bool = False) -> Monitor[FlowState]:
    """Like :func:`cfg_monitor` but every traversal is its own chrono-labeled arc."""

    def step(event, acc):
        if event.port.is_external:
            current = _node(event, with_args)
            acc.arcs.add(LabeledArc(acc.previous, event.chrono, current))
            acc.previous = current
        return acc, CONTINUE

    return Monitor("cfg-chrono", FlowState, step,
                   lambda acc: graph_to_dot(acc.arcs, "cfg-chrono"), "dot", FlowState.copy)


# -- dynamic call graph ------------------------------------------------------


@dataclass
class CallGraphState:
    stack: tuple = (ROOT_PREDICATE,)
    arcs: set = field(default_factory=set)

    def copy(self) -> "CallGraphState":
        return CallGraphState(self.stack, set(self.arcs))


def dcg_monitor(with_args: bool = False) -> Monitor[CallGraphState]:
    """Caller-to-callee arcs, with the call stack rebuilt from the ports."""

    def step(event, acc):
        current = _node(event, with_args)
        before = acc.stack
        acc.stack = update_call_stack(event.port, current, before)
        if event.port is Port.CALL:
            if not before:
                raise MalformedTraceError(f"call of {event.predicate} outside any caller")
            acc.arcs.add(Arc(before[-1], current))
        return acc, CONTINUE

    return Monitor("dcg", CallGraphState, step,
                   lambda acc: graph_to_dot(acc.arcs, "dcg"), "dot", CallGraphState.copy)


# -- proof trees -------------------------------------------------------------


@dataclass(frozen=True)
class ProofTree:
    """A node of a proof tree; ``predicate is None`` marks the empty tree."""

    predicate: Optional[Predicate] = None
    children: tuple = ()
    args: Optional[tuple] = None

    @property
    def is_empty(self) -> bool:
        return self.predicate is None

    @property
    def label(self) -> str:
        if self.args is not None:
            return f"{self.predicate.proc_name}({', '.join(self.args)})"
        return str(self.predicate)

    def nodes(self) -> Iterator["ProofTree"]:
        """Preorder walk over the non-empty nodes."""
        if self.is_empty:
            return
        todo = [self]
        while todo:
            node = todo.pop()
            yield node
            todo.extend(reversed(node.children))

    def size(self) -> int:
        return sum(1 for _ in self.nodes())


EMPTY_TREE = ProofTree()

ROOT_GOAL = 0


@dataclass
class GoalTables:
    """Per-goal successor lists and proof trees, keyed by goal id."""

    succ: dict = field(default_factory=dict)
    trees: dict = field(default_factory=dict)
    stack: tuple = ()

    def copy(self) -> "GoalTables":
        # trees are immutable, so only the containers need copying
        return GoalTables({g: list(kids) for g, kids in self.succ.items()},
                          dict(self.trees), self.stack)


def extract_proof_tree(tables: GoalTables) -> ProofTree:
    proven = [tables.trees[g] for g in tables.succ.get(ROOT_GOAL, ()) if g in tables.trees]
    if not proven:
        return EMPTY_TREE
    if len(proven) == 1:
        return proven[0]
    return ProofTree(ROOT_PREDICATE, tuple(proven))


def proof_tree_monitor(with_args: bool = False) -> Monitor[GoalTables]:
    """Proof tree of the query: the call graph with failed goals left out."""

    def pop(acc, event):
        if not acc.stack or acc.stack[-1] != event.goal_id:
            raise MalformedTraceError(
                f"{event.port.value} of goal {event.goal_id} is not the innermost call")
        acc.stack = acc.stack[:-1]

    def step(event, acc):
        port, g = event.port, event.goal_id
        if port is Port.CALL:
            parent = acc.stack[-1] if acc.stack else ROOT_GOAL
            acc.succ.setdefault(parent, []).append(g)
            acc.stack += (g,)
        elif port is Port.EXIT:
            pop(acc, event)
            trees = acc.trees
            kids = tuple(trees[c] for c in acc.succ.get(g, ()) if c in trees)
            args = event.args if with_args else None
            trees[g] = ProofTree(event.predicate, kids, args)
        elif port is Port.REDO:
            acc.stack += (g,)
            acc.trees.pop(g, None)
        elif port is Port.FAIL:
            pop(acc, event)
            acc.trees.pop(g, None)
            acc.succ.pop(g, None)
        return acc, CONTINUE

    return Monitor("proof-tree", GoalTables, step,
                   lambda acc: tree_to_dot(extract_proof_tree(acc), "proof-tree"), "dot",
                   GoalTables.copy)


# -- registry ----------------------------------------------------------------

REGISTRY: dict[str, Callable[..., Monitor]] = {
    "count-calls": count_call_monitor,
    "port-histogram": port_histogram_monitor,
    "depth-histogram": depth_histogram_monitor,
    "cfg": cfg_monitor,
    "cfg-chrono": cfg_chrono_monitor,
    "dcg": dcg_monitor,
    "proof-tree": proof_tree_monitor,
}

GRAPH_MONITORS = frozenset({"cfg", "cfg-chrono", "dcg", "proof-tree"})


class UnknownMonitorError(KeyError):
    def __str__(self) -> str:
        return f"unknown monitor: {self.args[0]}"


def get_monitor(name: str, with_args: bool = False) -> Monitor:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise UnknownMonitorError(name) from None
    if name in GRAPH_MONITORS:
        return factory(with_args=with_args)
    return factory()


def builtin_monitors() -> list[Monitor]:
    return [get_monitor(name) for name in REGISTRY]


__all__ = [
    "Arc", "CallGraphState", "EMPTY_TREE", "FlowState", "GoalTables", "LabeledArc",
    "ProofTree", "REGISTRY", "UnknownMonitorError", "builtin_monitors",
    "cfg_chrono_monitor", "cfg_monitor", "count_call_monitor", "dcg_monitor",
    "depth_histogram_monitor", "extract_proof_tree", "get_monitor",
    "port_histogram_monitor", "proof_tree_monitor", "update_call_stack",
]
