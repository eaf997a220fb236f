import itertools

import pytest
from hypothesis import given, settings, strategies as st

from folbench.engine import (
    AtomBudgetExceeded, InconsistentPremises, PremiseSet, ProofStep, TruthLabel,
    decide_label, export_prover9, is_consistent, is_satisfiable, validate_chain, validate_step,
)
from folbench.fol import Atom, Not, evaluate, parse_formula
from oracle import brute_label
from strategies import formulas, ground_formulas

P = parse_formula


def naive_label(premises, goal):
    """Textbook truth-table labeling over every atom, no shortcuts at all."""
    atoms = sorted({a for f in [*premises, goal] for a in _atoms(f)}, key=str)
    entails = refutes = True
    any_model = False
    for bits in itertools.product([False, True], repeat=len(atoms)):
        v = dict(zip(atoms, bits))
        if all(evaluate(p, v) for p in premises):
            any_model = True
            g = evaluate(goal, v)
            entails &= g
            refutes &= not g
    if not any_model:
        return None
    return "A" if entails else "B" if refutes else "C"


def _atoms(f):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from _atoms(f.arg)
    else:
        yield from _atoms(f.left)
        yield from _atoms(f.right)


small = ground_formulas(("p", "q", "r"), ("A", "Bo"), max_leaves=5)


@settings(max_examples=300, deadline=None)
@given(st.lists(small, min_size=1, max_size=4), small)
def test_engine_matches_truth_table(premises, goal):
    expected = naive_label(premises, goal)
    if expected is None:
        with pytest.raises(InconsistentPremises):
            decide_label(premises, goal)
    else:
        assert decide_label(premises, goal).label.letter == expected


@settings(max_examples=300, deadline=None)
@given(st.lists(small, min_size=1, max_size=4), small)
def test_oracle_matches_truth_table(premises, goal):
    expected = naive_label(premises, goal)
    if expected is None:
        with pytest.raises(ValueError):
            brute_label(premises, goal)
    else:
        assert brute_label(premises, goal) == expected


@settings(max_examples=200, deadline=None)
@given(st.lists(formulas(), min_size=1, max_size=4), formulas())
def test_engine_matches_oracle_with_quantifiers(premises, goal):
    try:
        expected = brute_label(premises, goal)
    except ValueError:
        with pytest.raises(InconsistentPremises):
            decide_label(premises, goal)
        return
    assert decide_label(premises, goal).label.letter == expected


@settings(max_examples=100, deadline=None)
@given(st.lists(small, min_size=1, max_size=4), small)
def test_witnesses_are_models(premises, goal):
    try:
        v = decide_label(premises, goal)
    except InconsistentPremises:
        return
    # models only cover the goal's component; they must extend to full models
    for model, value in ((v.witness, False), (v.goal_model, True)):
        if model is None:
            continue
        assert evaluate(goal, model) is value
        pinned = [a if b else Not(a) for a, b in model.items()]
        assert naive_label(premises + pinned, goal) is not None


def test_three_labels():
    prem = [P("all x (wild(x) -> -tame(x))"), P("wild(Rex)")]
    assert decide_label(prem, P("-tame(Rex)")).label is TruthLabel.TRUE
    assert decide_label(prem, P("tame(Rex)")).label is TruthLabel.FALSE
    assert decide_label(prem, P("tame(Bo)")).label is TruthLabel.UNCERTAIN


def test_existential_premise_over_domain():
    # the domain is exactly the named constants
    prem = [P("exists x (red(x))"), P("-red(A)")]
    assert decide_label(prem, P("red(B)")).label is TruthLabel.TRUE
    assert decide_label(prem + [P("blue(C)")], P("red(B)")).label is TruthLabel.UNCERTAIN


def test_inconsistent_premises_raise():
    with pytest.raises(InconsistentPremises):
        decide_label([P("a(S)"), P("a(S) -> b(S)"), P("-b(S)")], P("c(S)"))
    assert not is_consistent([P("a(S) ^ b(S)"), P("a(S)"), P("b(S)")])
    assert is_consistent([P("a(S) ^ b(S)"), P("a(S)")])


def test_atom_budget():
    chain = [P(f"p{i}(S) | p{i + 1}(S)") for i in range(70)]
    with pytest.raises(AtomBudgetExceeded):
        is_satisfiable(chain)
    with pytest.raises(AtomBudgetExceeded):
        decide_label(chain, P("p0(S)"))
    # disjoint components are never pooled, so each stays under budget
    pairs = [P(f"p{i}(S) | q{i}(S)") for i in range(40)]
    assert decide_label(pairs, P("p0(S)")).label is TruthLabel.UNCERTAIN


def test_premise_set_split():
    ps = PremiseSet.of([P("a(S)"), P("-b(T)"), P("all x (a(x) -> b(x))")], domain=["U"])
    assert ps.facts == (P("a(S)"), P("-b(T)"))
    assert ps.rules == (P("all x (a(x) -> b(x))"),)
    assert ps.domain == {"S", "T", "U"}


def test_validate_step_and_chain():
    rule = P("all x (a(x) -> b(x))")
    rule2 = P("b(S) -> -c(S)")
    facts = [P("a(S)")]
    s1 = ProofStep((P("a(S)"),), rule, P("b(S)"))
    s2 = ProofStep((P("b(S)"),), rule2, P("-c(S)"))
    assert validate_step(s1) and validate_step(s2)
    assert not validate_step(ProofStep((P("b(S)"),), rule, P("a(S)")))
    ps = PremiseSet.of(facts + [rule, rule2])
    assert validate_chain([s1, s2], ps, P("c(S)"), TruthLabel.FALSE)
    assert not validate_chain([s1, s2], ps, P("c(S)"), TruthLabel.TRUE)
    # a step may only use premises or earlier conclusions
    assert not validate_chain([s2, s1], ps, P("c(S)"), TruthLabel.FALSE)
    assert validate_chain([], PremiseSet.of(facts), P("z(S)"), TruthLabel.UNCERTAIN)


def test_modus_tollens_step():
    step = ProofStep((P("-b(S)"),), P("a(S) -> b(S)"), P("-a(S)"))
    assert validate_step(step)


def test_export_prover9():
    text = export_prover9([P("wild(Rex)"), P("all x (wild(x) ^ tame(x))")], P("-tame(Rex)"))
    assert text.splitlines() == [
        "formulas(assumptions).",
        "  wild(Rex).",
        "  all x (-(wild(x) <-> tame(x))).",
        "end_of_list.",
        "",
        "formulas(goals).",
        "  -tame(Rex).",
        "end_of_list.",
    ]
