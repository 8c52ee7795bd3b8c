import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatground.errors import ParseError
from flatground.parser import parse_program, parse_rule, tokenize
from flatground.syntax import (
    Aggregate,
    Atom,
    Constant,
    FunctionApp,
    Literal,
    Program,
    Rule,
    Variable,
    print_program,
)

X, Y, Z = Variable("X"), Variable("Y"), Variable("Z")


def test_function_terms_stay_nested():
    rule = parse_rule("p(s(X)) :- a(X, f(Y,Z)).")
    assert rule.head == (Atom("p", (FunctionApp("s", (X,)),)),)
    assert rule.body == (Literal(Atom("a", (X, FunctionApp("f", (Y, Z))))),)


def test_negative_literal():
    rule = parse_rule("a(X) :- p(X), not ab(s(X)).")
    assert rule.body[1] == Literal(Atom("ab", (FunctionApp("s", (X,)),)), negative=True)


def test_aggregate_literal():
    rule = parse_rule("a(X) :- X = #count( Y: p(s(Y)), q(Y) ).")
    (agg,) = rule.body
    assert isinstance(agg, Aggregate)
    assert agg.bound_var == X and agg.local_vars == (Y,)
    assert [lit.atom.predicate for lit in agg.conjunction] == ["p", "q"]


@pytest.mark.parametrize("sep", [" v ", " | "])
def test_disjunction_separators(sep):
    rule = parse_rule(f"a{sep}b :- c.")
    assert [a.predicate for a in rule.head] == ["a", "b"]


def test_constraints_comments_and_integers():
    program = parse_program("% comment\n:- p(1), not q. % trailing\nr(007).\n")
    constraint, fact = program.rules
    assert constraint.head == () and len(constraint.body) == 2
    assert fact.head[0].args == (Constant(7),)


def test_function_predicates_and_ids():
    rule = parse_rule("p(S) :- q(S), #s(S,X), t(@3).")
    assert rule.body[1].atom.is_function_predicate
    assert str(rule.body[2].atom) == "t(@3)"


@pytest.mark.parametrize(
    "text, line, column",
    [("p(X", 1, 4), ("p(X).\nq(.", 2, 3), ("p :- .", 1, 6), ("p(X) :- q(X)", 1, 13), ("p $ q.", 1, 3)],
)
def test_errors_carry_positions(text, line, column):
    with pytest.raises(ParseError) as info:
        parse_program(text)
    assert (info.value.line, info.value.column) == (line, column)


def test_error_lists_expected_tokens():
    with pytest.raises(ParseError) as info:
        parse_program("p(X")
    assert ")" in info.value.expected


def test_lexical_classes():
    kinds = [tok.kind for tok in tokenize("p(X, a, 1, @2) :- #f(F, X).")]
    assert kinds[:9] == ["IDENT", "(", "VAR", ",", "IDENT", ",", "INT", ",", "IDREF"]
    assert "FPRED" in kinds


SOURCE_FORMS = [
    "p(s(X)) :- a(X, f(Y,Z)).",
    "p(s(X)) :- q(s(X), Y).",
    "p(s(X)) :- q(s(Y), X).",
    "a(X) :- p(X), not ab(s(X)).",
    "a(X) :- X = #count( Y: p(s(Y)), q(Y) ).",
    "m(X, Y) :- k(s(X, Y), T), p(W, Z, T).",
    "p(X) :- q(s(Y), X), t(Y).",
    "p(s(X)) :- q(X).",
    "p(X) :- q(X, s(Y)), t(Y).",
    "p(s(X)) :- t(X), q(s(X), Y).",
    "p(s(1)). q(s(1)).",
    "p(s(f(1,a)), 2).",
]


@pytest.mark.parametrize("text", SOURCE_FORMS)
def test_source_forms_parse_and_roundtrip(text):
    program = parse_program(text)
    assert parse_program(print_program(program)) == program


# -- roundtrip property ----------------------------------------------------------

names = st.sampled_from(["a", "b", "p", "q", "foo", "s1", "x_y"])
variables = st.sampled_from(["X", "Y", "Z", "Var1", "A_b"]).map(Variable)
constants = st.one_of(names, st.integers(min_value=0, max_value=999)).map(Constant)
terms = st.recursive(
    st.one_of(variables, constants),
    lambda inner: st.builds(FunctionApp, st.sampled_from(["s", "f", "g"]), st.lists(inner, min_size=1, max_size=3).map(tuple)),
    max_leaves=5,
)
atoms = st.builds(Atom, names, st.lists(terms, max_size=3).map(tuple))
literals = st.builds(Literal, atoms, st.booleans())
aggregates = st.builds(
    Aggregate,
    st.just(Variable("N")),
    st.lists(variables, min_size=1, max_size=2, unique=True).map(tuple),
    st.lists(atoms.map(Literal), min_size=1, max_size=2).map(tuple),
)
bodies = st.lists(st.one_of(literals, literals, aggregates), max_size=3).map(tuple)


@st.composite
def rules(draw):
    head = tuple(draw(st.lists(atoms, max_size=3)))
    body = draw(bodies if head else bodies.filter(bool))
    return Rule(head, body)


@settings(max_examples=300, deadline=None)
@given(st.lists(rules(), max_size=4).map(tuple).map(Program))
def test_print_parse_roundtrip(program):
    assert parse_program(print_program(program)) == program
