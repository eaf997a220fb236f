"""Template rendering of formulas from lexicon phrases.

Phrases are verb phrases in the third person ("is a poet", "has charisma"),
so a subject name or a quantified noun phrase can be put in front of them.
"""

from __future__ import annotations

from typing import Mapping

from ..fol import (
    And,
    Atom,
    Exists,
    ForAll,
    Formula,
    Implies,
    Not,
    Or,
    Xor,
    constants,
    subformulas,
)

Phrases = Mapping[str, tuple[str, str]]  # predicate -> (positive, negative)


def verb_phrase(f: Formula, phrases: Phrases) -> str:
    if isinstance(f, Atom):
        return phrases[f.predicate][0]
    if isinstance(f, Not):
        if isinstance(f.arg, Atom):
            return phrases[f.arg.predicate][1]
        if isinstance(f.arg, Not):
            return verb_phrase(f.arg.arg, phrases)
        return f"does not satisfy that it {verb_phrase(f.arg, phrases)}"
    if isinstance(f, And):
        return f"{verb_phrase(f.left, phrases)} and {verb_phrase(f.right, phrases)}"
    if isinstance(f, Or):
        return f"either {verb_phrase(f.left, phrases)} or {verb_phrase(f.right, phrases)} (or both)"
    if isinstance(f, Xor):
        return f"either {verb_phrase(f.left, phrases)} or {verb_phrase(f.right, phrases)}, but not both"
    if isinstance(f, Implies):
        return f"{verb_phrase(f.right, phrases)} if it {verb_phrase(f.left, phrases)}"
    raise TypeError(f"no verb phrase for {f!r}")


def _everyone(category: str) -> tuple[str, str]:
    # (bare quantifier, relative-clause head)
    if category == "human":
        return "Everyone", "Everyone who"
    return f"Every {category}", f"Every {category} that"


def _sentence(text: str) -> str:
    text = text.strip()
    return text[0].upper() + text[1:] + ("" if text.endswith(".") else ".")


def render_literal(f: Formula, phrases: Phrases) -> str:
    """``poet(Sawyer)`` -> "Sawyer is a poet" (no trailing period)."""
    a = f.arg if isinstance(f, Not) else f
    if not isinstance(a, Atom):
        raise TypeError(f"not a literal: {f!r}")
    return f"{a.term.name} {verb_phrase(f, phrases)}"


def render_rule(
    rule: Formula,
    phrases: Phrases,
    category: str = "human",
    universal: bool = True,
    subject: str | None = None,
) -> str:
    """Universal ("Everyone who ...") or subject-bound ("If Sawyer ...") text."""
    body = rule.body if isinstance(rule, (ForAll, Exists)) else rule
    if isinstance(rule, Exists):
        noun = "person" if category == "human" else category
        return _sentence(f"there is at least one {noun} that {verb_phrase(body, phrases)}")
    if universal:
        bare, head = _everyone(category)
        if isinstance(body, Implies):
            ante = verb_phrase(body.left, phrases)
            sep = ", " if "," in ante else " "
            return _sentence(f"{head} {ante}{sep}{verb_phrase(body.right, phrases)}")
        return _sentence(f"{bare} {verb_phrase(body, phrases)}")
    if subject is None:
        names = sorted(constants(rule))
        if not names:
            raise ValueError("specific rendering needs a subject")
        subject = names[0]
    if isinstance(body, Implies):
        return _sentence(
            f"if {subject} {verb_phrase(body.left, phrases)}, then {subject} "
            f"{verb_phrase(body.right, phrases)}"
        )
    return _sentence(f"{subject} {verb_phrase(body, phrases)}")


def render_formula(f: Formula, phrases: Phrases, category: str = "human") -> str:
    """Sentence for any premise: literal, quantified rule or ground rule."""
    if isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.arg, Atom)):
        return render_literal(f, phrases) + "."
    return render_rule(f, phrases, category, universal=isinstance(f, ForAll))


def commonsense_heuristic(rule: Formula) -> bool:
    """Offline stand-in for the plausibility judgment of a universal rule.

    Implications whose consequent is a plain conjunction of literals read as
    ordinary generalizations; a universal choice ("everyone is either a
    musician or a poet") does not.
    """
    body = rule.body if isinstance(rule, (ForAll, Exists)) else rule
    if not isinstance(body, Implies):
        return False
    return not any(isinstance(g, (Or, Xor, Implies)) for g in subformulas(body.right))


def _third_person(verb: str) -> str:
    if verb.endswith("y") and verb[-2:-1] not in "aeiou":
        return verb[:-1] + "ies"
    if verb.endswith(("s", "sh", "ch", "x", "z", "o")):
        return verb + "es"
    return verb + "s"


def default_phrases(predicate: str) -> tuple[str, str]:
    """Best-effort verb phrases for a predicate name without a lexicon entry."""
    words = predicate.split("_")
    head, rest = words[0], " ".join(words[1:])
    if head in ("is", "are"):
        return f"is {rest}", f"is not {rest}"
    if head in ("has", "have"):
        return f"has {rest}", f"does not have {rest}"
    if head == "can":
        return f"can {rest}", f"cannot {rest}"
    if len(words) == 1:
        return f"is {head}", f"is not {head}"
    return f"{_third_person(head)} {rest}", f"does not {head} {rest}"
