"""Reference computations the library is checked against.

Nothing here imports the monitors or collect modules: each oracle works
from first principles or from a materialized list of events.
"""

from __future__ import annotations

import dataclasses
import itertools

from byrdscope.trace_model import Port, StopFlag


def safe_board(cols) -> bool:
    """True when no two queens (row i, column cols[i]) attack each other."""
    n = len(cols)
    if sorted(cols) != list(range(1, n + 1)):
        return False
    for i, j in itertools.combinations(range(n), 2):
        if abs(cols[i] - cols[j]) == j - i:
            return False
    return True


def all_boards(n: int) -> list[tuple]:
    return [p for p in itertools.permutations(range(1, n + 1)) if safe_board(p)]


class Recorder:
    """Sink that keeps every event."""

    def __init__(self):
        self.events = []

    def __call__(self, event):
        self.events.append(event)
        return StopFlag.CONTINUE


def external_only(events):
    """External events only, chrono renumbered from 1."""
    kept = [e for e in events if e.port.is_external]
    return [dataclasses.replace(e, chrono=i) for i, e in enumerate(kept, 1)]


# -- hand-rolled monitor references ------------------------------------------


def calls(events) -> int:
    return sum(1 for e in events if e.port is Port.CALL)


def cfg_arcs(events, root):
    """Pairs of consecutive external-event predicates, seeded with ``root``."""
    preds = [root] + [e.predicate for e in events if e.port.is_external]
    return set(zip(preds, preds[1:]))


def dcg_arcs(events, root):
    """Caller/callee pairs, the caller found by scanning the goal nesting."""
    owner = {0: root}
    active = [0]
    arcs = set()
    for e in events:
        if e.port is Port.CALL:
            arcs.add((owner[active[-1]], e.predicate))
            owner[e.goal_id] = e.predicate
            active.append(e.goal_id)
        elif e.port is Port.REDO:
            active.append(e.goal_id)
        elif e.port in (Port.EXIT, Port.FAIL):
            assert active.pop() == e.goal_id
    return arcs


def rebuild_proof_tree(events):
    """Proof tree from a whole trace, as nested ``(predicate, children)`` pairs.

    A goal's parent is the goal of the latest call or redo one level up
    (the query itself at depth 1). A goal counts as proven when its last
    external event is an exit. Children are listed in call order.
    """
    latest_at_depth = {0: 0}
    parent, pred, first_call, last_port = {}, {}, {}, {}
    for e in events:
        if not e.port.is_external:
            continue
        g = e.goal_id
        if e.port is Port.CALL:
            parent[g] = latest_at_depth[e.depth - 1]
            pred[g] = e.predicate
            first_call[g] = e.chrono
        if e.port in (Port.CALL, Port.REDO):
            latest_at_depth[e.depth] = g
        last_port[g] = e.port

    def proven(g):
        return last_port.get(g) is Port.EXIT

    def kids(g):
        out = [c for c in parent if parent[c] == g and proven(c)]
        return sorted(out, key=first_call.__getitem__)

    def build(g):
        return (pred[g], tuple(build(c) for c in kids(g)))

    roots = kids(0)
    if not roots:
        return None
    if len(roots) == 1:
        return build(roots[0])
    return ("<query>", tuple(build(c) for c in roots))


def tree_shape(tree):
    """A :class:`ProofTree` as the nested pairs :func:`rebuild_proof_tree` yields."""
    if tree.is_empty:
        return None
    if tree.predicate.proc_name == "<query>":
        return ("<query>", tuple(tree_shape(c) for c in tree.children))
    return (tree.predicate, tuple(tree_shape(c) for c in tree.children))
