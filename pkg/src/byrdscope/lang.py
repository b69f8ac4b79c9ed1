"""AST, parser and printer for the Prolog subset the tracer executes.

The grammar covers facts and rules with ``,`` / ``;`` / ``(C -> T ; E)``,
list syntax, integers, ``is/2`` arithmetic (``+ - * //``), integer
comparisons, ``=``/``\\=``, ``true``/``fail`` and the determinism pragma
``:- det(name/arity, nondet).``.  ``%`` starts a line comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .trace_model import Determinism

# -- terms -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Var:
    """A logic variable.

    Source variables have ``serial == 0`` except anonymous ``_`` ones,
    which get a per-clause serial so that each occurrence is distinct.
    The engine renames every variable to a fresh ``_G<serial>``.
    """

    name: str
    serial: int = 0


@dataclass(frozen=True, slots=True)
class Atom:
    name: str


@dataclass(frozen=True, slots=True)
class Int:
    value: int


@dataclass(frozen=True, slots=True)
class Struct:
    functor: str
    args: tuple

    @property
    def arity(self) -> int:
        return len(self.args)


Term = Union[Var, Atom, Int, Struct]

NIL = Atom("[]")


def make_list(items, tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = Struct(".", (item, out))
    return out


def list_items(t: Term) -> Optional[list]:
    """Items of a proper list, or None if ``t`` is not one."""
    items = []
    while isinstance(t, Struct) and t.functor == "." and len(t.args) == 2:
        items.append(t.args[0])
        t = t.args[1]
    return items if t == NIL else None


# -- goals -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Call:
    name: str
    args: tuple

    @property
    def key(self) -> tuple[str, int]:
        return (self.name, len(self.args))


@dataclass(frozen=True, slots=True)
class Unify:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Builtin:
    name: str
    args: tuple


@dataclass(frozen=True, slots=True)
class Conj:
    goals: tuple


@dataclass(frozen=True, slots=True)
class Disj:
    goals: tuple


@dataclass(frozen=True, slots=True)
class Ite:
    cond: "Goal"
    then: "Goal"
    else_: "Goal"


@dataclass(frozen=True, slots=True)
class TrueGoal:
    pass


@dataclass(frozen=True, slots=True)
class FailGoal:
    pass


TRUE = TrueGoal()
FAIL = FailGoal()

Goal = Union[Call, Unify, Builtin, Conj, Disj, Ite, TrueGoal, FailGoal]

COMPARISONS = frozenset({"=:=", "=\\=", "<", ">", "=<", ">="})
BUILTINS = {("is", 2), ("\\=", 2)} | {(op, 2) for op in COMPARISONS}


@dataclass(frozen=True)
class Clause:
    name: str
    args: tuple
    body: Goal = TRUE

    @property
    def key(self) -> tuple[str, int]:
        return (self.name, len(self.args))


@dataclass
class Program:
    """Clauses grouped by ``(name, arity)`` in first-appearance order."""

    predicates: dict = field(default_factory=dict)
    determinism: dict = field(default_factory=dict)

    def clauses(self, key: tuple[str, int]) -> tuple:
        return self.predicates.get(key, ())

    def __contains__(self, key) -> bool:
        return key in self.predicates

    def indicators(self) -> list[str]:
        return [f"{n}/{a}" for n, a in self.predicates]


def goal_variables(goal: Goal) -> list[Var]:
    """Distinct variables of ``goal`` in first-occurrence order."""
    seen: dict[Var, None] = {}

    def term(t):
        if isinstance(t, Var):
            seen.setdefault(t)
        elif isinstance(t, Struct):
            for a in t.args:
                term(a)

    def walk(g):
        if isinstance(g, (Call, Builtin)):
            for a in g.args:
                term(a)
        elif isinstance(g, Unify):
            term(g.left)
            term(g.right)
        elif isinstance(g, (Conj, Disj)):
            for sub in g.goals:
                walk(sub)
        elif isinstance(g, Ite):
            walk(g.cond)
            walk(g.then)
            walk(g.else_)

    walk(goal)
    return list(seen)


def iter_calls(goal: Goal) -> Iterator[Call]:
    if isinstance(goal, Call):
        yield goal
    elif isinstance(goal, (Conj, Disj)):
        for g in goal.goals:
            yield from iter_calls(g)
    elif isinstance(goal, Ite):
        yield from iter_calls(goal.cond)
        yield from iter_calls(goal.then)
        yield from iter_calls(goal.else_)


# -- tokenizer ---------------------------------------------------------------


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class _Tok:
    kind: str  # var, atom, qatom, int, punct, sym, end, eof
    text: str
    line: int
    col: int
    spaced: bool  # layout text precedes the token


_SYMBOL_CHARS = set("+-*/\\^<>=~:.?@#&$")
_PUNCT = set("()[],|;")


def _tokenize(src: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(src)
    line, line_start = 1, 0
    spaced = True
    while i < n:
        c = src[i]
        col = i - line_start + 1
        if c == "\n":
            i += 1
            line, line_start = line + 1, i
            spaced = True
            continue
        if c.isspace():
            i += 1
            spaced = True
            continue
        if c == "%":
            while i < n and src[i] != "\n":
                i += 1
            spaced = True
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(_Tok("int", src[i:j], line, col, spaced))
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            kind = "var" if (c.isupper() or c == "_") else "atom"
            toks.append(_Tok(kind, src[i:j], line, col, spaced))
        elif c == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n or src[j] == "\n":
                    raise ParseError("unterminated quoted atom", line, col)
                if src[j] == "'":
                    if j + 1 < n and src[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    j += 1
                    break
                if src[j] == "\\" and j + 1 < n:
                    buf.append(src[j + 1])
                    j += 2
                    continue
                buf.append(src[j])
                j += 1
            toks.append(_Tok("qatom", "".join(buf), line, col, spaced))
        elif c in _PUNCT:
            j = i + 1
            toks.append(_Tok("punct", c, line, col, spaced))
        elif c in _SYMBOL_CHARS:
            j = i
            while j < n and src[j] in _SYMBOL_CHARS:
                j += 1
            text = src[i:j]
            if text == "." and (j >= n or src[j].isspace() or src[j] == "%"):
                toks.append(_Tok("end", ".", line, col, spaced))
            else:
                toks.append(_Tok("sym", text, line, col, spaced))
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
        i = j
        spaced = False
    col = n - line_start + 1
    toks.append(_Tok("eof", "", line, col, spaced))
    return toks


# -- parser ------------------------------------------------------------------

_OPS_700 = frozenset({"=", "\\=", "is"} | COMPARISONS)
_OPS_500 = frozenset({"+", "-"})
_OPS_400 = frozenset({"*", "//", "/"})


@dataclass(frozen=True, slots=True)
class _Arrow:
    cond: Goal
    then: Goal


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.pos = 0
        self.varmap: dict[str, Var] = {}
        self.anon = 0

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def advance(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_op(self, ops) -> bool:
        t = self.tok
        return (t.kind in ("sym", "atom") and t.text in ops)

    def error(self, message: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{message} at {where}", tok.line, tok.col)

    def expect(self, kind: str, text: Optional[str] = None) -> _Tok:
        if not self.at(kind, text):
            raise self.error(f"expected {text or kind}")
        return self.advance()

    def reset_vars(self):
        self.varmap = {}
        self.anon = 0

    # terms
    def term(self) -> Term:
        left = self.term500()
        if self.at_op(_OPS_700):
            op = self.advance().text
            right = self.term500()
            return Struct(op, (left, right))
        return left

    def term500(self) -> Term:
        left = self.term400()
        while self.at_op(_OPS_500):
            op = self.advance().text
            left = Struct(op, (left, self.term400()))
        return left

    def term400(self) -> Term:
        left = self.primary()
        while self.at_op(_OPS_400):
            op = self.advance().text
            left = Struct(op, (left, self.primary()))
        return left

    def primary(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Int(int(t.text))
        if t.kind == "sym" and t.text == "-" and self.toks[self.pos + 1].kind == "int" \
                and not self.toks[self.pos + 1].spaced:
            self.advance()
            return Int(-int(self.advance().text))
        if t.kind == "var":
            self.advance()
            if t.text == "_":
                self.anon += 1
                return Var("_", self.anon)
            return self.varmap.setdefault(t.text, Var(t.text))
        if t.kind in ("atom", "qatom"):
            self.advance()
            if self.at("punct", "(") and not self.tok.spaced:
                self.advance()
                args = [self.term()]
                while self.at("punct", ","):
                    self.advance()
                    args.append(self.term())
                self.expect("punct", ")")
                return Struct(t.text, tuple(args))
            return Atom(t.text)
        if t.kind == "punct" and t.text == "[":
            self.advance()
            if self.at("punct", "]"):
                self.advance()
                return NIL
            items = [self.term()]
            while self.at("punct", ","):
                self.advance()
                items.append(self.term())
            tail: Term = NIL
            if self.at("punct", "|"):
                self.advance()
                tail = self.term()
            self.expect("punct", "]")
            return make_list(items, tail)
        if t.kind == "punct" and t.text == "(":
            self.advance()
            inner = self.term()
            self.expect("punct", ")")
            return inner
        raise self.error("expected a term")

    # goals
    def body(self) -> Goal:
        branches = [self.branch()]
        while self.at("punct", ";"):
            self.advance()
            branches.append(self.branch())
        return _build_disjunction(branches)

    def branch(self):
        c = self.conjunction()
        if self.at("sym", "->"):
            self.advance()
            return _Arrow(c, self.conjunction())
        return c

    def conjunction(self) -> Goal:
        goals: list = []
        while True:
            g = self.goal()
            if isinstance(g, Conj):
                goals.extend(g.goals)
            else:
                goals.append(g)
            if not self.at("punct", ","):
                break
            self.advance()
        return goals[0] if len(goals) == 1 else Conj(tuple(goals))

    def goal(self) -> Goal:
        if self.at("punct", "("):
            self.advance()
            g = self.body()
            self.expect("punct", ")")
            return g
        start = self.tok
        return _term_to_goal(self.term(), start)

    # top level
    def program(self) -> Program:
        prog = Program()
        while not self.at("eof"):
            self.reset_vars()
            if self.at("sym", ":-"):
                self.pragma(prog)
                continue
            start = self.tok
            head = self.term()
            if isinstance(head, Atom):
                name, args = head.name, ()
            elif isinstance(head, Struct) and head.functor not in _OPS_700:
                name, args = head.functor, head.args
            else:
                raise ParseError("clause head must be an atom or compound term",
                                 start.line, start.col)
            body: Goal = TRUE
            if self.at("sym", ":-"):
                self.advance()
                body = self.body()
            self.expect("end", ".")
            clause = Clause(name, args, body)
            prog.predicates.setdefault(clause.key, ())
            prog.predicates[clause.key] += (clause,)
        return prog

    def pragma(self, prog: Program):
        start = self.advance()
        t = self.term()
        self.expect("end", ".")
        ok = (isinstance(t, Struct) and t.functor == "det" and len(t.args) == 2
              and isinstance(t.args[0], Struct) and t.args[0].functor == "/"
              and isinstance(t.args[0].args[0], Atom)
              and isinstance(t.args[0].args[1], Int)
              and isinstance(t.args[1], Atom))
        if not ok:
            raise ParseError("pragma must look like ':- det(name/arity, determinism).'",
                             start.line, start.col)
        key = (t.args[0].args[0].name, t.args[0].args[1].value)
        try:
            det = Determinism(t.args[1].name)
        except ValueError:
            raise ParseError(f"unknown determinism {t.args[1].name!r}",
                             start.line, start.col) from None
        if key in prog.determinism:
            raise ParseError(f"duplicate pragma for {key[0]}/{key[1]}", start.line, start.col)
        prog.determinism[key] = det


def _build_disjunction(branches: list) -> Goal:
    out: list = []
    for i, b in enumerate(branches):
        if isinstance(b, _Arrow):
            rest = branches[i + 1:]
            out.append(Ite(b.cond, b.then, _build_disjunction(rest) if rest else FAIL))
            break
        out.append(b)
    return out[0] if len(out) == 1 else Disj(tuple(out))


def _term_to_goal(t: Term, tok: _Tok) -> Goal:
    if isinstance(t, Atom):
        if t.name == "true":
            return TRUE
        if t.name == "fail":
            return FAIL
        return Call(t.name, ())
    if isinstance(t, Struct):
        if t.functor == "=" and len(t.args) == 2:
            return Unify(t.args[0], t.args[1])
        if (t.functor, len(t.args)) in BUILTINS:
            return Builtin(t.functor, t.args)
        return Call(t.functor, t.args)
    raise ParseError("goal is not callable", tok.line, tok.col)


def parse_program(source: str) -> Program:
    """Parse a whole source file."""
    return _Parser(source).program()


def parse_query(source: str) -> Goal:
    """Parse a single goal terminated by ``.``."""
    p = _Parser(source)
    g = p.body()
    p.expect("end", ".")
    p.expect("eof")
    return g


def parse_term(source: str) -> Term:
    p = _Parser(source)
    t = p.term()
    p.expect("eof")
    return t


# -- printer -----------------------------------------------------------------

_INFIX_PREC = {**{op: 700 for op in _OPS_700}, "+": 500, "-": 500,
               "*": 400, "//": 400, "/": 400}


def _atom_text(name: str) -> str:
    if name == "[]" or (name[:1].islower() and name[:1].isalpha()
                        and all(ch.isalnum() or ch == "_" for ch in name)):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def render_term(t: Term, max_prec: int = 999) -> str:
    """Canonical text for ``t``; parses back to an equal term."""
    if isinstance(t, Var):
        if t.name == "_":
            return "_"
        return f"{t.name}{t.serial}" if t.serial else t.name
    if isinstance(t, Int):
        return str(t.value)
    if isinstance(t, Atom):
        return _atom_text(t.name)
    if t.functor == "." and len(t.args) == 2:
        items = []
        while isinstance(t, Struct) and t.functor == "." and len(t.args) == 2:
            items.append(render_term(t.args[0]))
            t = t.args[1]
        tail = "" if t == NIL else "|" + render_term(t)
        return "[" + ", ".join(items) + tail + "]"
    prec = _INFIX_PREC.get(t.functor)
    if prec is not None and len(t.args) == 2:
        left_max = prec - 1 if prec == 700 else prec
        text = (f"{render_term(t.args[0], left_max)} {t.functor} "
                f"{render_term(t.args[1], prec - 1)}")
        return f"({text})" if prec > max_prec else text
    return f"{_atom_text(t.functor)}({', '.join(render_term(a) for a in t.args)})"


def _render_call(name: str, args: tuple) -> str:
    if not args:
        return _atom_text(name)
    return f"{_atom_text(name)}({', '.join(render_term(a) for a in args)})"


def render_goal(g: Goal) -> str:
    if isinstance(g, TrueGoal):
        return "true"
    if isinstance(g, FailGoal):
        return "fail"
    if isinstance(g, Call):
        return _render_call(g.name, g.args)
    if isinstance(g, Unify):
        return f"{render_term(g.left, 699)} = {render_term(g.right, 699)}"
    if isinstance(g, Builtin):
        return render_term(Struct(g.name, g.args), 999)
    if isinstance(g, Conj):
        return ", ".join(render_goal(sub) for sub in g.goals)
    if isinstance(g, Disj):
        return "(" + " ; ".join(render_goal(sub) for sub in g.goals) + ")"
    if isinstance(g, Ite):
        return (f"({render_goal(g.cond)} -> {render_goal(g.then)} ; "
                f"{render_goal(g.else_)})")
    raise TypeError(f"not a goal: {g!r}")


def render_clause(c: Clause) -> str:
    head = _render_call(c.name, c.args)
    if isinstance(c.body, TrueGoal):
        return head + "."
    return f"{head} :- {render_goal(c.body)}."


def render_program(p: Program) -> str:
    lines = [f":- det({_atom_text(n)}/{a}, {d.value})."
             for (n, a), d in p.determinism.items()]
    for clauses in p.predicates.values():
        lines.extend(render_clause(c) for c in clauses)
    return "\n".join(lines) + "\n"
