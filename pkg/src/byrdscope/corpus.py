"""Bundled example programs and the runs the test suite sweeps over."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .lang import Program, parse_program, parse_query


def source(name: str) -> str:
    return resources.files(__package__).joinpath("corpus").joinpath(name).read_text(encoding="utf-8")


def queens_source(n: int = 5) -> str:
    """The queens program with its board set to ``[1..n]``."""
    board = "[" + ",".join(str(i) for i in range(1, n + 1)) + "]"
    text, count = re.subn(r"^data\(\[[0-9,]*\]\)\.$", f"data({board}).",
                          source("queens.lp"), flags=re.M)
    assert count == 1
    return text


def queens_program(n: int = 5) -> Program:
    return parse_program(queens_source(n))


def lists_program() -> Program:
    return parse_program(source("lists.lp"))


@dataclass(frozen=True)
class CorpusRun:
    label: str
    program_text: str
    query_text: str
    all_solutions: bool

    @property
    def program(self) -> Program:
        return parse_program(self.program_text)

    @property
    def query(self):
        return parse_query(self.query_text)


def corpus_runs() -> list[CorpusRun]:
    """Queens n=4,5,6 in both modes, list programs, and a failing query.

    ``main`` commits to its first board, so each size is also run as a
    board enumeration that backtracks through every solution.
    """
    runs = []
    for n in (4, 5, 6):
        text = queens_source(n)
        runs += [
            CorpusRun(f"queens{n}-main-first", text, "main.", False),
            CorpusRun(f"queens{n}-main-all", text, "main.", True),
            CorpusRun(f"queens{n}-boards-all", text, "data(D), queen(D, Out).", True),
        ]
    lists = source("lists.lp")
    runs += [
        CorpusRun("append-split", lists, "append(X, Y, [1,2,3]).", True),
        CorpusRun("member-shared", lists, "shared(X).", True),
        CorpusRun("split-sum", lists, "split_sum([1,2,3,4,5,5], A, B).", False),
        CorpusRun("failing", lists, "no_such_pair.", False),
    ]
    return runs
