"""Hypothesis strategies for formulas."""

from hypothesis import strategies as st

from folbench.fol import And, Atom, Const, Exists, ForAll, Implies, Not, Or, Var, Xor

PREDICATES = ("p", "q", "r", "s", "green_thumb", "wild")
CONSTANTS = ("A", "Bo", "Cy")
BINARY = (And, Or, Implies, Xor)


def ground_atoms(preds=PREDICATES[:4], consts=CONSTANTS[:4]):
    return st.builds(Atom, st.sampled_from(preds), st.sampled_from(consts).map(Const))


def ground_formulas(preds=PREDICATES[:4], consts=CONSTANTS[:4], max_leaves=8):
    return st.recursive(
        ground_atoms(preds, consts),
        lambda sub: st.one_of(
            sub.map(Not),
            st.builds(lambda op, a, b: op(a, b), st.sampled_from(BINARY), sub, sub),
        ),
        max_leaves=max_leaves,
    )


def _open_body(var):
    leaf = st.one_of(
        st.builds(Atom, st.sampled_from(PREDICATES), st.just(Var(var))),
        ground_atoms(PREDICATES, CONSTANTS),
    )
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            sub.map(Not),
            st.builds(lambda op, a, b: op(a, b), st.sampled_from(BINARY), sub, sub),
        ),
        max_leaves=6,
    )


def formulas():
    """Closed formulas of the fragment: ground, or one prenex quantifier."""
    quantified = st.builds(lambda q, body: q("x", body), st.sampled_from((ForAll, Exists)), _open_body("x"))
    return st.one_of(ground_formulas(PREDICATES, CONSTANTS), quantified)
