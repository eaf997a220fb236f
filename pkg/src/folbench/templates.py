"""Rule templates used to expand reasoning-tree nodes.

A template shape is written over slot predicates on the placeholder subject
``S``: ``P`` is the node being explained, ``C1``/``C2`` are children whose
labels come from the assignment table, and ``E1`` is a free side atom that
is neither asserted nor expanded.

Every table row is checked with the entailment engine when the catalog is
first loaded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .engine import PremiseSet, TruthLabel, decide_label, is_consistent
from .fol import Atom, Const, Formula, literal, parse_formula, predicates

FORWARD = "forward"
BACKWARD = "backward"

T, F = True, False


class CatalogError(Exception):
    pass


@dataclass(frozen=True)
class RuleTemplate:
    id: str
    shape: Formula
    family: str
    # parent truth value -> child truth-value tuples (ordered C1, C2, ...)
    assignment_table: dict[bool, tuple[tuple[bool, ...], ...]]

    @property
    def children(self) -> tuple[str, ...]:
        return tuple(sorted(p for p in predicates(self.shape) if p.startswith("C")))

    @property
    def extras(self) -> tuple[str, ...]:
        return tuple(sorted(p for p in predicates(self.shape) if p.startswith("E")))

    def rows(self, parent: bool) -> tuple[tuple[bool, ...], ...]:
        return self.assignment_table.get(parent, ())


_SPECS: list[tuple[str, str, str, dict]] = [
    # parent in the consequent, or a bare disjunction that eliminates to it
    ("mp", "C1(S) -> P(S)", FORWARD, {T: [(T,)]}),
    ("neg_mp", "-C1(S) -> P(S)", FORWARD, {T: [(F,)]}),
    ("mp_neg", "C1(S) -> -P(S)", FORWARD, {F: [(T,)]}),
    ("neg_mp_neg", "-C1(S) -> -P(S)", FORWARD, {F: [(F,)]}),
    ("and_mp", "(C1(S) & C2(S)) -> P(S)", FORWARD, {T: [(T, T)]}),
    ("and_mp_neg", "(C1(S) & C2(S)) -> -P(S)", FORWARD, {F: [(T, T)]}),
    ("or_mp", "(C1(S) | C2(S)) -> P(S)", FORWARD, {T: [(T, T), (T, F), (F, T)]}),
    ("or_mp_neg", "(C1(S) | C2(S)) -> -P(S)", FORWARD, {F: [(T, T), (T, F), (F, T)]}),
    ("xor_mp", "(C1(S) ^ C2(S)) -> P(S)", FORWARD, {T: [(T, F), (F, T)]}),
    ("mp_and", "C1(S) -> (P(S) & E1(S))", FORWARD, {T: [(T,)]}),
    ("mp_xor", "C1(S) -> (P(S) ^ C2(S))", FORWARD, {T: [(T, F)], F: [(T, T)]}),
    ("mp_or", "C1(S) -> (P(S) | C2(S))", FORWARD, {T: [(T, F)]}),
    ("xor_elim", "P(S) ^ C1(S)", FORWARD, {T: [(F,)], F: [(T,)]}),
    ("xor_elim_r", "C1(S) ^ P(S)", FORWARD, {T: [(F,)], F: [(T,)]}),
    ("or_elim", "P(S) | C1(S)", FORWARD, {T: [(F,)]}),
    ("or_elim_r", "C1(S) | P(S)", FORWARD, {T: [(F,)]}),
    # parent in the antecedent: conclusions run against the arrow
    ("mt", "P(S) -> C1(S)", BACKWARD, {F: [(F,)]}),
    ("mt_neg", "-P(S) -> C1(S)", BACKWARD, {T: [(F,)]}),
    ("mt_cons_neg", "P(S) -> -C1(S)", BACKWARD, {F: [(T,)]}),
    ("mt_and", "(P(S) & C2(S)) -> C1(S)", BACKWARD, {F: [(F, T)]}),
    ("mt_or", "(P(S) | E1(S)) -> C1(S)", BACKWARD, {F: [(F,)]}),
    ("mt_cons_and", "P(S) -> (C1(S) & E1(S))", BACKWARD, {F: [(F,)]}),
    ("mt_xor", "(P(S) ^ C2(S)) -> C1(S)", BACKWARD, {T: [(F, T)], F: [(F, F)]}),
    ("mt_cons_xor", "P(S) -> (C1(S) ^ C2(S))", BACKWARD, {F: [(F, F), (T, T)]}),
]


def _row_premises(template: RuleTemplate, row: tuple[bool, ...]) -> list[Formula]:
    s = Const("S")
    facts = [literal(Atom(c, s), v) for c, v in zip(template.children, row)]
    return facts + [template.shape]


def check_row(template: RuleTemplate, parent: bool, row: tuple[bool, ...]) -> bool:
    """Children with ``row`` labels plus the rule entail the parent literal."""
    premises = _row_premises(template, row)
    if not is_consistent(premises):
        return False
    verdict = decide_label(PremiseSet.of(premises), Atom("P", Const("S")))
    return verdict.label is TruthLabel.of(parent)


def derive_rows(template: RuleTemplate) -> dict[bool, list[tuple[bool, ...]]]:
    """All valid rows by enumeration; used to audit the hand-written tables."""
    out: dict[bool, list[tuple[bool, ...]]] = {}
    for parent in (True, False):
        for row in itertools.product((True, False), repeat=len(template.children)):
            if check_row(template, parent, row):
                out.setdefault(parent, []).append(row)
    return out


@lru_cache(maxsize=None)
def load_catalog() -> tuple[RuleTemplate, ...]:
    catalog = []
    for tid, text, family, table in _SPECS:
        template = RuleTemplate(
            tid, parse_formula(text), family, {k: tuple(v) for k, v in table.items()}
        )
        for parent, rows in template.assignment_table.items():
            for row in rows:
                if len(row) != len(template.children) or not check_row(template, parent, row):
                    raise CatalogError(f"template {tid}: row {row} does not entail P={parent}")
        catalog.append(template)
    return tuple(catalog)


def templates_for(parent: bool, family: str) -> list[RuleTemplate]:
    return [t for t in load_catalog() if t.family == family and t.rows(parent)]


def get_template(tid: str) -> RuleTemplate:
    for t in load_catalog():
        if t.id == tid:
            return t
    raise KeyError(tid)


# Type-2 distraction shapes.  ``{L}`` is the target literal, kept at the
# target's own polarity so the rule can never force it.  ``D1`` is asserted
# true and ``D2`` is left open, so every antecedent stays undetermined.
DISTRACTION_SHAPES: tuple[tuple[str, str], ...] = (
    ("xor_ante", "(D1(S) ^ D2(S)) -> {L}"),
    ("and_ante", "(D1(S) & D2(S)) -> {L}"),
    ("neg_or_ante", "(-D1(S) | D2(S)) -> {L}"),
)
# no asserted fact; the witness may be any constant in the domain
EXISTS_SHAPE = "exists x (D2(x) & {L})"
