"""Deterministic DOT output for arc sets and proof trees."""

from __future__ import annotations

import re
from typing import Iterable

_UNSAFE = re.compile(r"[^A-Za-z0-9]")


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _ids_for(labels: list[str]) -> dict[str, str]:
    """Sanitized identifiers, suffixed when two labels sanitize alike."""
    ids: dict[str, str] = {}
    taken: set[str] = set()
    for label in labels:
        base = _UNSAFE.sub("_", label) or "_"
        ident, k = base, 1
        while ident in taken:
            k += 1
            ident = f"{base}_{k}"
        taken.add(ident)
        ids[label] = ident
    return ids


def graph_to_dot(arcs: Iterable, title: str = "G") -> str:
    """One node per distinct predicate, one edge per arc.

    Arcs are ``(source, target)`` or ``(source, chrono, target)`` tuples;
    the three-field form puts the chrono on the edge label.
    """
    edges = []
    for arc in arcs:
        if len(arc) == 3:
            src, chrono, dst = arc
            edges.append((str(src), str(dst), chrono))
        else:
            src, dst = arc
            edges.append((str(src), str(dst), None))
    labels = sorted({e[0] for e in edges} | {e[1] for e in edges})
    ids = _ids_for(labels)
    lines = [f"digraph {_quote(title)} {{"]
    for label in labels:
        lines.append(f"  {_quote(ids[label])} [label={_quote(label)}];")
    edges.sort(key=lambda e: (e[0], e[1], -1 if e[2] is None else e[2]))
    for src, dst, chrono in edges:
        attr = "" if chrono is None else f" [label={_quote(str(chrono))}]"
        lines.append(f"  {_quote(ids[src])} -> {_quote(ids[dst])}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_to_dot(tree, title: str = "proof-tree") -> str:
    """Every tree node is its own DOT node, numbered in preorder."""
    lines = [f"digraph {_quote(title)} {{"]
    edges = []
    if not tree.is_empty:
        counter = 0
        todo = [(tree, None)]
        while todo:
            node, parent = todo.pop()
            ident = f"n{counter}"
            counter += 1
            lines.append(f"  {_quote(ident)} [label={_quote(node.label)}];")
            if parent is not None:
                edges.append(f"  {_quote(parent)} -> {_quote(ident)};")
            todo.extend((child, ident) for child in reversed(node.children))
    lines.extend(edges)
    lines.append("}")
    return "\n".join(lines) + "\n"


_NODE_RE = re.compile(r'^\s*"([^"]+)" \[label=')
_EDGE_RE = re.compile(r'^\s*"([^"]+)" -> "([^"]+)"(?: \[label="([^"]*)"\])?;$')


def dot_node_count(text: str) -> int:
    return sum(1 for line in text.splitlines() if _NODE_RE.match(line))


def dot_edges(text: str) -> list[tuple]:
    """``(source id, target id, label or None)`` for each edge line."""
    out = []
    for line in text.splitlines():
        m = _EDGE_RE.match(line)
        if m:
            out.append((m.group(1), m.group(2), m.group(3)))
    return out
