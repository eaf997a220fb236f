"""Three-valued entailment over the FOL fragment.

Premises are grounded over their finite constant domain, clausified and
handed to a small DPLL solver.  A goal is True when the premises refute its
negation, False when they refute the goal, and Uncertain otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .fol import (
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
    format_formula,
    ground,
    is_ground_literal,
    is_quantified,
    negate,
    to_nnf,
)

ENGINE_VERSION = "1.0"
DEFAULT_ATOM_BUDGET = 64


class EngineError(Exception):
    pass


class AtomBudgetExceeded(EngineError):
    pass


class InconsistentPremises(EngineError):
    pass


class TruthLabel(str, enum.Enum):
    TRUE = "True"
    FALSE = "False"
    UNCERTAIN = "Uncertain"

    @property
    def letter(self) -> str:
        return {"True": "A", "False": "B", "Uncertain": "C"}[self.value]

    @classmethod
    def from_letter(cls, letter: str) -> "TruthLabel":
        return {"A": cls.TRUE, "B": cls.FALSE, "C": cls.UNCERTAIN}[letter]

    @classmethod
    def of(cls, value: bool) -> "TruthLabel":
        return cls.TRUE if value else cls.FALSE


@dataclass(frozen=True)
class PremiseSet:
    facts: tuple[Formula, ...] = ()
    rules: tuple[Formula, ...] = ()
    domain: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "facts", tuple(self.facts))
        object.__setattr__(self, "rules", tuple(self.rules))
        mentioned = set()
        for f in self.formulas:
            mentioned |= constants(f)
        object.__setattr__(self, "domain", frozenset(self.domain) | mentioned)

    @classmethod
    def of(cls, formulas: Iterable[Formula], domain: Iterable[str] = ()) -> "PremiseSet":
        """Split ``formulas`` into ground literals (facts) and everything else."""
        facts, rules = [], []
        for f in formulas:
            (facts if is_ground_literal(f) else rules).append(f)
        return cls(tuple(facts), tuple(rules), frozenset(domain))

    @property
    def formulas(self) -> tuple[Formula, ...]:
        return self.facts + self.rules


@dataclass(frozen=True)
class EntailmentVerdict:
    label: TruthLabel
    # a model of premises + negated goal; absent when the goal is entailed
    witness: Mapping[Atom, bool] | None = None
    # a model of premises + goal; absent when the negation is entailed
    goal_model: Mapping[Atom, bool] | None = None


@dataclass(frozen=True)
class ProofStep:
    step_facts: tuple[Formula, ...]
    step_rule: Formula
    conclusion: Formula

    def __post_init__(self):
        object.__setattr__(self, "step_facts", tuple(self.step_facts))


# ---------------------------------------------------------------- clausify


class _Clausifier:
    """Plaisted-Greenbaum clausification of ground formulas into int clauses.

    Atoms are numbered 1..n in first-seen order; auxiliary definitions get
    ids above n, so a model restricted to 1..n is a model of the input.
    """

    def __init__(self, formulas: Sequence[Formula]):
        self.index: dict[Atom, int] = {}
        self.nnf = [to_nnf(f) for f in formulas]
        for f in self.nnf:
            for a in sorted(_atom_keys(f), key=_atom_order):
                self.index.setdefault(a, len(self.index) + 1)
        self.next_var = len(self.index) + 1
        self.clauses: list[list[int]] = []
        for f in self.nnf:
            for part in _conjuncts(f):
                clause = _as_clause(part)
                if clause is not None:
                    self.clauses.append([self.lit(a, pos) for a, pos in clause])
                else:
                    self.clauses.append([self.name(part)])

    def lit(self, a: Atom, positive: bool) -> int:
        v = self.index[a]
        return v if positive else -v

    def name(self, f: Formula) -> int:
        if isinstance(f, Atom):
            return self.lit(f, True)
        if isinstance(f, Not):
            return self.lit(f.arg, False)
        v = self.next_var
        self.next_var += 1
        if isinstance(f, And):
            self.clauses.append([-v, self.name(f.left)])
            self.clauses.append([-v, self.name(f.right)])
        else:
            self.clauses.append([-v, self.name(f.left), self.name(f.right)])
        return v


def _atom_order(a: Atom) -> tuple[str, str]:
    return (a.term.name, a.predicate)


def _conjuncts(f: Formula) -> list[Formula]:
    out, stack = [], [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.append(g.right)
            stack.append(g.left)
        else:
            out.append(g)
    return out


def _as_clause(f: Formula) -> list[tuple[Atom, bool]] | None:
    lits, stack = [], [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Or):
            stack.append(g.right)
            stack.append(g.left)
        elif isinstance(g, Atom):
            lits.append((g, True))
        elif isinstance(g, Not) and isinstance(g.arg, Atom):
            lits.append((g.arg, False))
        else:
            return None
    return lits


# -------------------------------------------------------------------- DPLL


def _dpll(clauses: list[list[int]], assignment: dict[int, bool]) -> dict[int, bool] | None:
    """DPLL with unit propagation, pure-literal elimination and branching on
    the lowest-numbered unassigned variable."""
    while True:
        simplified = []
        unit = None
        for clause in clauses:
            rest = []
            satisfied = False
            for lit in clause:
                val = assignment.get(abs(lit))
                if val is None:
                    rest.append(lit)
                elif val == (lit > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if not rest:
                return None
            if len(rest) == 1 and unit is None:
                unit = rest[0]
            simplified.append(rest)
        clauses = simplified
        if not clauses:
            return assignment
        if unit is not None:
            assignment[abs(unit)] = unit > 0
            continue
        polarity: dict[int, int] = {}
        for clause in clauses:
            for lit in clause:
                v = abs(lit)
                sign = 1 if lit > 0 else 2
                polarity[v] = polarity.get(v, 0) | sign
        pure = [v for v, p in polarity.items() if p != 3]
        if pure:
            for v in pure:
                assignment[v] = polarity[v] == 1
            continue
        break

    branch = min(abs(lit) for clause in clauses for lit in clause)
    for value in (True, False):
        trial = dict(assignment)
        trial[branch] = value
        result = _dpll(clauses, trial)
        if result is not None:
            return result
    return None


def _check_quantifier_free(formulas: Sequence[Formula]) -> None:
    for f in formulas:
        if is_quantified(f):
            raise ValueError(f"formula is not quantifier-free: {format_formula(f)}")


def is_satisfiable(
    ground_formulas: Sequence[Formula], atom_budget: int = DEFAULT_ATOM_BUDGET
) -> tuple[bool, dict[Atom, bool] | None]:
    """Decide satisfiability of quantifier-free formulas.

    Returns ``(True, model)`` with a valuation of every atom that occurs, or
    ``(False, None)``.
    """
    _check_quantifier_free(ground_formulas)
    cl = _Clausifier(ground_formulas)
    if len(cl.index) > atom_budget:
        raise AtomBudgetExceeded(
            f"{len(cl.index)} distinct ground atoms exceeds the budget of {atom_budget}"
        )
    result = _dpll(cl.clauses, {})
    if result is None:
        return False, None
    return True, {a: result.get(v, False) for a, v in cl.index.items()}


# ---------------------------------------------------------------- labels


@lru_cache(maxsize=1 << 16)
def _ground_parts(f: Formula, domain: frozenset[str]) -> tuple[Formula, ...]:
    g = ground(f, domain) if is_quantified(f) else f
    return tuple(_conjuncts(g))


def _atom_keys(f: Formula) -> set[Atom]:
    out, stack = set(), [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.add(g)
        elif isinstance(g, Not):
            stack.append(g.arg)
        else:
            stack.append(g.left)
            stack.append(g.right)
    return out


def _components(parts: Sequence[Formula]) -> list[list[Formula]]:
    """Group ground formulas into classes that share no atoms."""
    parent: dict[Atom, Atom] = {}

    def find(a: Atom) -> Atom:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    part_atoms = []
    for p in parts:
        keys = _atom_keys(p)
        part_atoms.append(keys)
        for a in keys:
            parent.setdefault(a, a)
        first = next(iter(keys), None)
        for a in keys:
            ra, rf = find(a), find(first)
            if ra != rf:
                parent[ra] = rf
    groups: dict[Atom | None, list[Formula]] = {}
    for p, keys in zip(parts, part_atoms):
        root = find(next(iter(keys))) if keys else None
        groups.setdefault(root, []).append(p)
    return list(groups.values())


def decide_label(
    premises: PremiseSet | Iterable[Formula],
    goal: Formula,
    atom_budget: int = DEFAULT_ATOM_BUDGET,
) -> EntailmentVerdict:
    """Classify ``goal`` as True, False or Uncertain relative to ``premises``.

    Ground premise fragments that share no atom with the goal cannot affect
    its label, so they are only checked for satisfiability; the solver never
    sees more atoms than one connected component plus the goal.
    """
    if not isinstance(premises, PremiseSet):
        premises = PremiseSet.of(premises)
    domain = frozenset(premises.domain | constants(goal))
    if not domain:
        domain = frozenset({"_"})
    parts: list[Formula] = []
    for f in premises.formulas:
        parts.extend(_ground_parts(f, domain))
    goal_parts = _ground_parts(goal, domain)
    goal_g = goal_parts[0] if len(goal_parts) == 1 else _rebuild_and(goal_parts)
    goal_atoms = _atom_keys(goal_g)

    relevant: list[Formula] = []
    for comp in _components(parts):
        comp_atoms = set().union(*(_atom_keys(p) for p in comp))
        if comp_atoms & goal_atoms:
            relevant.extend(comp)
        else:
            sat, _ = is_satisfiable(comp, atom_budget)
            if not sat:
                raise InconsistentPremises("premise set is unsatisfiable")

    counter_sat, counter = is_satisfiable(relevant + [Not(goal_g)], atom_budget)
    goal_sat, model = is_satisfiable(relevant + [goal_g], atom_budget)
    if not counter_sat and not goal_sat:
        raise InconsistentPremises("premise set is unsatisfiable")
    if not counter_sat:
        return EntailmentVerdict(TruthLabel.TRUE, None, model)
    if not goal_sat:
        return EntailmentVerdict(TruthLabel.FALSE, counter, None)
    return EntailmentVerdict(TruthLabel.UNCERTAIN, counter, model)


def _rebuild_and(parts: Sequence[Formula]) -> Formula:
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def label_of(premises, goal: Formula, atom_budget: int = DEFAULT_ATOM_BUDGET) -> TruthLabel:
    return decide_label(premises, goal, atom_budget).label


def is_consistent(premises: PremiseSet | Iterable[Formula]) -> bool:
    if not isinstance(premises, PremiseSet):
        premises = PremiseSet.of(premises)
    domain = frozenset(premises.domain) or frozenset({"_"})
    parts: list[Formula] = []
    for f in premises.formulas:
        parts.extend(_ground_parts(f, domain))
    return all(is_satisfiable(comp)[0] for comp in _components(parts))


# ----------------------------------------------------------- proof checks


def validate_step(step: ProofStep, domain: Iterable[str] = ()) -> bool:
    """True iff the step's facts and rule entail its conclusion."""
    premises = PremiseSet.of(list(step.step_facts) + [step.step_rule], domain)
    try:
        return decide_label(premises, step.conclusion).label is TruthLabel.TRUE
    except (InconsistentPremises, AtomBudgetExceeded):
        return False


def _same_literal(a: Formula, b: Formula) -> bool:
    return _strip_double_negation(a) == _strip_double_negation(b)


def _strip_double_negation(f: Formula) -> Formula:
    while isinstance(f, Not) and isinstance(f.arg, Not):
        f = f.arg.arg
    return f


def validate_chain(
    steps: Sequence[ProofStep],
    premises: PremiseSet,
    goal: Formula,
    label: TruthLabel,
) -> bool:
    """Check a whole proof against its premises and the declared label of ``goal``."""
    try:
        actual = decide_label(premises, goal).label
    except (InconsistentPremises, AtomBudgetExceeded):
        return False
    if actual is not label:
        return False
    if not steps:
        return label is TruthLabel.UNCERTAIN
    if label is TruthLabel.UNCERTAIN:
        return False
    facts = set(premises.facts)
    rules = set(premises.rules)
    derived: set[Formula] = set()
    for step in steps:
        for fact in step.step_facts:
            if fact not in facts and fact not in derived:
                return False
        if step.step_rule not in rules:
            return False
        if not validate_step(step, premises.domain):
            return False
        derived.add(step.conclusion)
    final = steps[-1].conclusion
    expected = goal if label is TruthLabel.TRUE else negate(goal)
    return _same_literal(final, expected)


# -------------------------------------------------------------- prover9


def _p9(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"{f.predicate}({f.term.name})"
    if isinstance(f, Not):
        inner = _p9(f.arg)
        return f"-{inner}" if isinstance(f.arg, (Atom, Not)) else f"-({inner})"
    if isinstance(f, Xor):
        return f"-({_p9_operand(f.left)} <-> {_p9_operand(f.right)})"
    if isinstance(f, (ForAll, Exists)):
        word = "all" if isinstance(f, ForAll) else "exists"
        return f"{word} {f.var} ({_p9(f.body)})"
    symbol = {And: "&", Or: "|", Implies: "->"}[type(f)]
    return f"{_p9_operand(f.left)} {symbol} {_p9_operand(f.right)}"


def _p9_operand(f: Formula) -> str:
    text = _p9(f)
    if isinstance(f, (Atom, Not)) or text.startswith("-("):
        return text
    return f"({text})"


def export_prover9(premises: PremiseSet | Iterable[Formula], goal: Formula) -> str:
    """Render a Prover9 input file with one assumptions list and one goal."""
    if not isinstance(premises, PremiseSet):
        premises = PremiseSet.of(premises)
    lines = ["formulas(assumptions)."]
    lines += [f"  {_p9(f)}." for f in premises.formulas]
    lines += ["end_of_list.", "", "formulas(goals).", f"  {_p9(goal)}.", "end_of_list.", ""]
    return "\n".join(lines)
