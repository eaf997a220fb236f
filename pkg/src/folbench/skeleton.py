"""Top-down construction of logic skeletons and their distractions.

A skeleton starts from the goal with a sampled truth value and repeatedly
explains the current node with a rule template, choosing child labels from
the template's assignment table.  One child per level is explained further
and the others become asserted facts, so the tree is a chain of derivation
steps.  Predicates are placeholders (``F1``, ``F2``, ... for the chain and
``D1``, ... for distractions) until the realization stage binds them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .engine import (
    InconsistentPremises,
    PremiseSet,
    ProofStep,
    TruthLabel,
    decide_label,
    is_consistent,
    validate_step,
)
from .fol import (
    Atom,
    Const,
    Formula,
    Not,
    constants,
    format_formula,
    literal,
    map_atoms,
    parse_formula,
    rename_predicates,
)
from .templates import (
    BACKWARD,
    DISTRACTION_SHAPES,
    EXISTS_SHAPE,
    FORWARD,
    get_template,
    templates_for,
)

MODE_DEPTHS = {"easy": (1, 2), "medium": (3, 5), "hard": (6, 9)}
MODES = tuple(MODE_DEPTHS)

Binder = Callable[[Formula], Formula]


class GenerationError(Exception):
    pass


class GenerationExhausted(GenerationError):
    pass


class InjectionFailed(GenerationError):
    pass


class ConsistencyError(GenerationError):
    pass


@dataclass
class SkeletonConfig:
    depth_min: int | None = None
    depth_max: int | None = None
    n1_max: int = 3
    n2_max: int = 2
    backward_ratio: float = 0.4
    exists_ratio: float = 0.15
    resample_limit: int = 100

    def depth_range(self, mode: str) -> tuple[int, int]:
        if mode not in MODE_DEPTHS:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        lo, hi = MODE_DEPTHS[mode]
        dmin = lo if self.depth_min is None else self.depth_min
        dmax = hi if self.depth_max is None else self.depth_max
        if not lo <= dmin <= dmax <= hi:
            raise ValueError(f"depth range {dmin}..{dmax} is outside {mode} bounds {lo}..{hi}")
        return dmin, dmax


@dataclass(frozen=True)
class Expansion:
    parent: str
    template_id: str
    family: str
    children: tuple[str, ...]
    extras: tuple[str, ...]
    rule: Formula


@dataclass(frozen=True)
class SkeletonNode:
    fact: str
    label: TruthLabel
    expansion: Expansion | None = None

    @property
    def is_leaf(self) -> bool:
        return self.expansion is None


@dataclass(frozen=True)
class ReasoningTree:
    root_id: str
    nodes: dict[str, SkeletonNode]
    expansions: tuple[Expansion, ...]  # root first
    mode: str
    subject: str = "S"

    @property
    def root(self) -> SkeletonNode:
        return self.nodes[self.root_id]

    @property
    def depth(self) -> int:
        return len(self.expansions)

    @property
    def backward_steps(self) -> int:
        return sum(e.family == BACKWARD for e in self.expansions)

    def literal(self, node_id: str) -> Formula:
        node = self.nodes[node_id]
        return literal(Atom(node_id, Const(self.subject)), node.label is TruthLabel.TRUE)

    def goal_atom(self) -> Atom:
        return Atom(self.root_id, Const(self.subject))

    def leaf_facts(self) -> list[Formula]:
        return [self.literal(n.fact) for n in self.nodes.values() if n.is_leaf]

    def rules(self) -> list[Formula]:
        return [e.rule for e in self.expansions]

    def core_formulas(self) -> list[Formula]:
        return self.leaf_facts() + self.rules()

    def placeholders(self) -> list[str]:
        out = list(self.nodes)
        for e in self.expansions:
            out.extend(e.extras)
        return out


@dataclass(frozen=True)
class DistractionItem:
    kind: str  # "type1" or "type2"
    facts: tuple[Formula, ...]
    rules: tuple[Formula, ...]
    subject: str
    target: str | None = None
    shape: str | None = None

    @property
    def formulas(self) -> tuple[Formula, ...]:
        return self.facts + self.rules


@dataclass(frozen=True)
class DistractionSet:
    type1: tuple[DistractionItem, ...] = ()
    type2: tuple[DistractionItem, ...] = ()

    @property
    def counts(self) -> tuple[int, int]:
        return len(self.type1), len(self.type2)

    @property
    def items(self) -> tuple[DistractionItem, ...]:
        return self.type1 + self.type2

    def formulas(self) -> list[Formula]:
        return [f for item in self.items for f in item.formulas]

    def placeholders(self) -> list[str]:
        out: list[str] = []
        for item in self.type2:
            for f in item.formulas:
                for a in _atoms_sorted(f):
                    if a.predicate.startswith("D") and a.predicate not in out:
                        out.append(a.predicate)
        return out


def _atoms_sorted(f: Formula) -> list[Atom]:
    from .fol import subformulas

    seen: list[Atom] = []
    for g in subformulas(f):
        if isinstance(g, Atom) and g not in seen:
            seen.append(g)
    return seen


def _bind_subject(f: Formula, subject: str) -> Formula:
    if subject == "S":
        return f
    target = Const(subject)
    return map_atoms(f, lambda a: Atom(a.predicate, target) if a.term == Const("S") else a)


# ---------------------------------------------------------------- skeleton


class _Retry(Exception):
    pass


def build_skeleton(
    mode: str,
    rng_seed: int,
    config: SkeletonConfig | None = None,
    subject: str = "S",
) -> ReasoningTree:
    """Grow a goal-rooted chain for ``mode``; deterministic in ``rng_seed``."""
    config = config or SkeletonConfig()
    dmin, dmax = config.depth_range(mode)
    rng = random.Random(rng_seed)
    for _ in range(config.resample_limit):
        try:
            return _grow(mode, rng, rng.randint(dmin, dmax), config, subject)
        except _Retry:
            continue
    raise GenerationExhausted(f"no {mode} skeleton after {config.resample_limit} attempts")


def _grow(mode: str, rng: random.Random, depth: int, config: SkeletonConfig, subject: str):
    counter = iter(range(1, 10_000))

    def fresh() -> str:
        return f"F{next(counter)}"

    root = fresh()
    labels: dict[str, bool] = {root: rng.random() < 0.5}
    expansions: list[Expansion] = []
    current = root
    for level in range(depth):
        parent_label = labels[current]
        family = FORWARD
        if mode == "hard" and rng.random() < config.backward_ratio:
            family = BACKWARD
        candidates = templates_for(parent_label, family) or templates_for(parent_label, FORWARD)
        if not candidates:
            raise _Retry()
        template = rng.choice(candidates)
        row = rng.choice(template.rows(parent_label))
        children = tuple(fresh() for _ in template.children)
        extras = tuple(fresh() for _ in template.extras)
        mapping = {"P": current, **dict(zip(template.children, children)),
                   **dict(zip(template.extras, extras))}
        rule = _bind_subject(rename_predicates(template.shape, mapping), subject)
        for child, value in zip(children, row):
            labels[child] = value
        child_lits = [literal(Atom(c, Const(subject)), labels[c]) for c in children]
        parent_lit = literal(Atom(current, Const(subject)), parent_label)
        step = ProofStep(tuple(child_lits), rule, parent_lit)
        if not validate_step(step, {subject}):
            raise _Retry()
        expansions.append(Expansion(current, template.id, template.family, children, extras, rule))
        current = rng.choice(children)

    by_parent = {e.parent: e for e in expansions}
    nodes = {
        n: SkeletonNode(n, TruthLabel.of(v), by_parent.get(n)) for n, v in labels.items()
    }
    return ReasoningTree(root, nodes, tuple(expansions), mode, subject)


def emit_proof_chain(tree: ReasoningTree, bind: Binder | None = None) -> list[ProofStep]:
    """Proof steps ordered leaves-to-root; the last step concludes the goal."""
    bind = bind or (lambda f: f)
    steps = []
    for e in reversed(tree.expansions):
        step = ProofStep(
            tuple(bind(tree.literal(c)) for c in e.children),
            bind(e.rule),
            bind(tree.literal(e.parent)),
        )
        domain = set().union(*(constants(f) for f in (*step.step_facts, step.step_rule)))
        if not validate_step(step, domain or {tree.subject}):
            raise GenerationError(f"step for {e.parent} ({e.template_id}) does not validate")
        steps.append(step)
    return steps


# ------------------------------------------------------------- distractions


def _goal_label(formulas: Sequence[Formula], goal: Formula) -> TruthLabel | None:
    try:
        return decide_label(PremiseSet.of(formulas), goal).label
    except InconsistentPremises:
        return None


def inject_type1(
    tree: ReasoningTree,
    rng: random.Random,
    n1: int,
    subject_pool: Sequence[str],
    resample_limit: int = 100,
) -> list[DistractionItem]:
    """Facts and rules about other subjects that reuse chain predicates."""
    if n1 <= 0:
        return []
    pool = [s for s in subject_pool if s != tree.subject]
    if not pool:
        raise ValueError("type-1 distraction needs a subject other than the primary one")
    preds = tree.placeholders()
    base = tree.core_formulas()
    goal = tree.goal_atom()
    expected = _goal_label(base, goal)
    items: list[DistractionItem] = []
    for _ in range(n1):
        for _attempt in range(resample_limit):
            item = _type1_item(rng, preds, pool)
            trial = base + [f for it in items for f in it.formulas] + list(item.formulas)
            if any(f in base or f in [g for it in items for g in it.formulas] for f in item.formulas):
                continue
            if _goal_label(trial, goal) is expected:
                items.append(item)
                break
    return items


def _type1_item(rng: random.Random, preds: Sequence[str], pool: Sequence[str]) -> DistractionItem:
    who = rng.choice(pool)
    c = Const(who)
    if len(preds) < 2 or rng.random() < 0.6:
        fact = literal(Atom(rng.choice(preds), c), rng.random() < 0.75)
        return DistractionItem("type1", (fact,), (), who)
    a, b = (Atom(p, c) for p in rng.sample(list(preds), 2))
    shape = rng.choice(["imp", "xor", "neg_imp"])
    rule = {"imp": a >> b, "xor": a ^ b, "neg_imp": Not(a) >> b}[shape]
    return DistractionItem("type1", (), (rule,), who, shape=shape)


def inject_type2(
    tree: ReasoningTree,
    rng: random.Random,
    n2: int,
    context: Iterable[Formula] = (),
    exists_ratio: float = 0.15,
    resample_limit: int = 100,
) -> list[DistractionItem]:
    """Rules hooked onto core facts through antecedents left undetermined.

    ``context`` holds already-chosen distraction formulas (type 1) so that
    the checks run against the premise set the problem will actually have.
    """
    if n2 <= 0:
        return []
    base = tree.core_formulas() + list(context)
    goal = tree.goal_atom()
    expected_goal = _goal_label(base, goal)
    # targets: every node but the goal itself
    targets = [n for n in tree.nodes if n != tree.root_id] or [tree.root_id]
    items: list[DistractionItem] = []
    next_d = 1
    for _ in range(n2):
        for _attempt in range(resample_limit):
            target = rng.choice(targets)
            d1, d2 = f"D{next_d}", f"D{next_d + 1}"
            item = _type2_item(tree, rng, target, d1, d2, exists_ratio)
            trial = base + [f for it in items for f in it.formulas] + list(item.formulas)
            if _type2_ok(tree, trial, target, d2, goal, expected_goal):
                items.append(item)
                next_d += 2
                break
        else:
            raise InjectionFailed(f"no label-preserving type-2 distraction after {resample_limit} tries")
    return items


def _type2_item(tree, rng, target, d1, d2, exists_ratio) -> DistractionItem:
    positive = tree.nodes[target].label is TruthLabel.TRUE
    if rng.random() < exists_ratio:
        lit = f"{target}(x)" if positive else f"-{target}(x)"
        rule = parse_formula(EXISTS_SHAPE.format(L=lit))
        rule = rename_predicates(rule, {"D2": d2})
        return DistractionItem("type2", (), (rule,), tree.subject, target, "exists")
    shape_id, text = rng.choice(DISTRACTION_SHAPES)
    lit = f"{target}(S)" if positive else f"-{target}(S)"
    rule = rename_predicates(parse_formula(text.format(L=lit)), {"D1": d1, "D2": d2})
    rule = _bind_subject(rule, tree.subject)
    fact = Atom(d1, Const(tree.subject))
    return DistractionItem("type2", (fact,), (rule,), tree.subject, target, shape_id)


def _type2_ok(tree, trial, target, d2, goal, expected_goal) -> bool:
    if not is_consistent(trial):
        return False
    node = tree.nodes[target]
    if _goal_label(trial, Atom(target, Const(tree.subject))) is not node.label:
        return False
    if _goal_label(trial, goal) is not expected_goal:
        return False
    return _goal_label(trial, Atom(d2, Const(tree.subject))) is TruthLabel.UNCERTAIN


def sample_distractions(
    tree: ReasoningTree,
    rng: random.Random,
    config: SkeletonConfig,
    subject_pool: Sequence[str],
) -> DistractionSet:
    n1 = rng.randint(0, config.n1_max) if subject_pool else 0
    n2 = rng.randint(0, config.n2_max)
    type1 = inject_type1(tree, rng, n1, subject_pool, config.resample_limit)
    context = [f for item in type1 for f in item.formulas]
    type2 = inject_type2(tree, rng, n2, context, config.exists_ratio, config.resample_limit)
    return DistractionSet(tuple(type1), tuple(type2))


# ----------------------------------------------------------------- assembly


ROLE_CORE_FACT = "core-fact"
ROLE_CORE_RULE = "core-rule"
DISTRACTION_ROLES = ("type1-fact", "type1-rule", "type2-fact", "type2-rule")


@dataclass
class Assembly:
    premises: list[Formula]
    roles: list[str]
    goal: Formula
    label: TruthLabel
    negated_goal: bool = False
    premise_set: PremiseSet = field(init=False)

    def __post_init__(self):
        self.premise_set = PremiseSet.of(self.premises)


def assemble_premises(
    tree: ReasoningTree,
    distractions: DistractionSet,
    rng: random.Random,
    bind: Binder | None = None,
    negate_probability: float = 0.5,
) -> Assembly:
    """Shuffle core and distraction premises together and fix the goal.

    A False root is asked either as the positive statement (answer False)
    or, with ``negate_probability``, as its negation (answer True).
    """
    bind = bind or (lambda f: f)
    tagged: list[tuple[Formula, str]] = []
    tagged += [(f, ROLE_CORE_FACT) for f in tree.leaf_facts()]
    tagged += [(f, ROLE_CORE_RULE) for f in tree.rules()]
    for item in distractions.items:
        tagged += [(f, f"{item.kind}-fact") for f in item.facts]
        tagged += [(f, f"{item.kind}-rule") for f in item.rules]
    seen: set[Formula] = set()
    unique = []
    for f, role in tagged:
        g = bind(f)
        if g not in seen:
            seen.add(g)
            unique.append((g, role))
    rng.shuffle(unique)

    goal: Formula = bind(tree.goal_atom())
    label = tree.root.label
    negated = False
    if label is TruthLabel.FALSE and rng.random() < negate_probability:
        goal, label, negated = Not(goal), TruthLabel.TRUE, True

    premises = [f for f, _ in unique]
    roles = [r for _, r in unique]
    actual = _goal_label(premises, goal)
    if actual is None:
        raise ConsistencyError("assembled premises are unsatisfiable")
    if actual is not label:
        raise ConsistencyError(
            f"assembled label {actual.value} differs from intended {label.value} "
            f"for goal {format_formula(goal)}"
        )
    return Assembly(premises, roles, goal, label, negated)


__all__ = [
    "Assembly",
    "ConsistencyError",
    "DistractionItem",
    "DistractionSet",
    "Expansion",
    "GenerationError",
    "GenerationExhausted",
    "InjectionFailed",
    "MODES",
    "MODE_DEPTHS",
    "ReasoningTree",
    "SkeletonConfig",
    "SkeletonNode",
    "assemble_premises",
    "build_skeleton",
    "emit_proof_chain",
    "get_template",
    "inject_type1",
    "inject_type2",
    "sample_distractions",
]
