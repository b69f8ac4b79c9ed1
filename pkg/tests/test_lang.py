import pytest
from hypothesis import given

from strategies import programs, terms

from byrdscope.corpus import lists_program, queens_program, queens_source, source
from byrdscope.lang import (
    NIL, Atom, Call, Conj, Disj, Int, Ite, ParseError, Struct, Unify, Var, make_list,
    parse_program, parse_query, parse_term, render_program, render_term,
)
from byrdscope.trace_model import Determinism

QUEENS_PREDICATES = {
    "main/0", "data/1", "queen/2", "qperm/2", "qdelete/3", "safe/1", "nodiag/3",
    "print_list/1", "print_list_2/1",
}


def test_single_fact():
    prog = parse_program("p.")
    assert prog.indicators() == ["p/0"]
    (clause,) = prog.clauses(("p", 0))
    assert clause.args == ()


def test_queens_inventory():
    assert set(queens_program().indicators()) == QUEENS_PREDICATES


def test_queens_determinism_pragmas():
    prog = queens_program()
    assert prog.determinism[("queen", 2)] is Determinism.NONDET
    assert prog.determinism[("main", 0)] is Determinism.CC_MULTI


def test_incomplete_clause():
    with pytest.raises(ParseError) as info:
        parse_program("p :-")
    assert "end of input" in info.value.message


def test_query_main():
    assert parse_query("main.") == Call("main", ())


def test_query_with_list():
    goal = parse_query("queen([1,2,3,4,5], Out).")
    assert goal.key == ("queen", 2)
    assert goal.args[0] == make_list([Int(i) for i in range(1, 6)])
    assert goal.args[1] == Var("Out")


def test_query_bad_arithmetic():
    with pytest.raises(ParseError):
        parse_query("X is 1 +.")


@pytest.mark.parametrize("term,text", [
    (Atom("nil"), "nil"),
    (Struct(".", (Int(1), Struct(".", (Int(2), NIL)))), "[1, 2]"),
    (Struct("f", (Var("X"), Struct("g", (Var("Y"),)))), "f(X, g(Y))"),
])
def test_render_term_examples(term, text):
    assert render_term(term) == text


def test_render_operators_and_tails():
    assert render_term(parse_term("1 - (2 - 3)")) == "1 - (2 - 3)"
    assert render_term(parse_term("(1 - 2) - 3")) == "1 - 2 - 3"
    assert render_term(parse_term("[H|T]")) == "[H|T]"
    assert render_term(parse_term("2 * (X + 1)")) == "2 * (X + 1)"


def test_negative_literal_needs_no_space():
    assert parse_term("-3") == Int(-3)
    assert parse_term("1 - 3") == Struct("-", (Int(1), Int(3)))


def test_anonymous_variables_are_distinct():
    goal = parse_query("p(_, _).")
    a, b = goal.args
    assert a != b


def test_ite_and_disjunction_structure():
    prog = parse_program("p(X) :- ( X = a -> true ; X = b ; fail ).")
    (clause,) = prog.clauses(("p", 1))
    body = clause.body
    assert isinstance(body, Ite)
    assert isinstance(body.cond, Unify)
    assert isinstance(body.else_, Disj)


def test_conjunction_is_flat():
    (clause,) = parse_program("p :- a, (b, c), d.\na.\nb.\nc.\nd.").clauses(("p", 0))
    assert isinstance(clause.body, Conj)
    assert [g.name for g in clause.body.goals] == ["a", "b", "c", "d"]


def test_comments_and_line_numbers():
    with pytest.raises(ParseError) as info:
        parse_program("% header\np :- q.\nq :- )")
    assert info.value.line == 3


@pytest.mark.parametrize("text", [
    ":- det(p/0, bogus).\np.",
    ":- det(p/0, det).\n:- det(p/0, det).\np.",
])
def test_bad_pragmas(text):
    with pytest.raises(ParseError):
        parse_program(text)


@pytest.mark.parametrize("name", ["queens.lp", "lists.lp"])
def test_program_round_trip(name):
    prog = parse_program(source(name))
    assert parse_program(render_program(prog)) == prog


def test_queens_round_trip_other_sizes():
    for n in (4, 6):
        prog = parse_program(queens_source(n))
        assert parse_program(render_program(prog)) == prog


def test_lists_program_loads():
    assert "append/3" in lists_program().indicators()


@given(terms)
def test_term_round_trip(term):
    assert parse_term(render_term(term)) == term


@given(programs())
def test_random_program_round_trip(text):
    prog = parse_program(text)
    assert parse_program(render_program(prog)) == prog
