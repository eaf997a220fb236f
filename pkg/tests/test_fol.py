import itertools

import pytest
from hypothesis import given, settings

from folbench.fol import (
    And, Atom, Const, EmptyDomain, ForAll, Implies, Not, Or, ParseError, Var, Xor,
    atom, evaluate, format_formula, format_unicode, generalize, ground, instantiate, is_closed,
    parse_formula, predicates, rename_predicates, to_nnf,
)
from strategies import formulas, ground_formulas

a, b, c = atom("a", "S"), atom("b", "S"), atom("c", "S")


@pytest.mark.parametrize("text, expected", [
    ("a(S)", a),
    ("-a(S)", Not(a)),
    ("a(S) & b(S) | c(S)", Or(And(a, b), c)),
    ("a(S) -> b(S) -> c(S)", Implies(a, Implies(b, c))),
    ("a(S) ^ b(S) -> c(S)", Implies(Xor(a, b), c)),
    ("all x (a(x) -> b(x))", ForAll("x", Implies(Atom("a", Var("x")), Atom("b", Var("x"))))),
    ("--a(S)", Not(Not(a))),
])
def test_parse_examples(text, expected):
    assert parse_formula(text) == expected


@pytest.mark.parametrize("text", ["", "a(S", "a(S) &", "All x (a(x))", "a(S) b(S)", "all x (b(y))", "(a(S)))"])
def test_parse_errors(text):
    with pytest.raises(ParseError) as info:
        parse_formula(text)
    assert info.value.offset >= 0


def test_format_conventions():
    f = parse_formula("all x ((a(x) ^ b(x)) -> -c(x))")
    assert format_formula(f) == "all x ((a(x) ^ b(x)) -> -c(x))"
    assert format_unicode(f) == "∀x ((a(x) ⊕ b(x)) → ¬c(x))"
    assert format_formula(And(And(a, b), c)) == "a(S) & b(S) & c(S)"
    assert format_formula(And(a, And(b, c))) == "a(S) & (b(S) & c(S))"


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_round_trip(f):
    assert parse_formula(format_formula(f)) == f


@settings(max_examples=200, deadline=None)
@given(ground_formulas())
def test_nnf_preserves_truth(f):
    atoms = sorted({x for x in _atoms(f)}, key=str)
    g = to_nnf(f)
    for bits in itertools.product([False, True], repeat=len(atoms)):
        v = dict(zip(atoms, bits))
        assert evaluate(f, v) == evaluate(g, v)


def _atoms(f):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from _atoms(f.arg)
    else:
        yield from _atoms(f.left)
        yield from _atoms(f.right)


def test_grounding_and_instantiation():
    rule = parse_formula("all x (a(x) -> b(x))")
    assert instantiate(rule, "Bo") == parse_formula("a(Bo) -> b(Bo)")
    assert generalize(instantiate(rule, "Bo"), "Bo") == rule
    assert ground(rule, ["Bo", "A"]) == parse_formula("(a(A) -> b(A)) & (a(Bo) -> b(Bo))")
    assert ground(parse_formula("exists x (a(x))"), ["A", "Bo"]) == parse_formula("a(A) | a(Bo)")
    with pytest.raises(EmptyDomain):
        ground(rule, [])


def test_open_formulas_parse_but_are_not_closed():
    assert not is_closed(parse_formula("a(x) -> b(S)"))
    assert is_closed(parse_formula("all x (a(x) -> b(S))"))


def test_rename_and_predicates():
    f = parse_formula("F1(S) -> -F2(S)")
    assert predicates(f) == {"F1", "F2"}
    assert rename_predicates(f, {"F1": "wild"}) == Implies(Atom("wild", Const("S")), Not(Atom("F2", Const("S"))))


def test_evaluate_quantifier_needs_domain():
    with pytest.raises(EmptyDomain):
        evaluate(parse_formula("all x (a(x))"), {})
    assert evaluate(parse_formula("exists x (a(x))"), {atom("a", "B"): True}, ["A", "B"])
