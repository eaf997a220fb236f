import random

import pytest
from hypothesis import given, settings, strategies as st

from folbench.engine import PremiseSet, TruthLabel, decide_label, is_consistent, validate_chain, validate_step
from folbench.fol import Atom, Const, constants, is_quantified, negate, predicates
from folbench.skeleton import (
    MODE_DEPTHS, ConsistencyError, SkeletonConfig, assemble_premises, build_skeleton,
    emit_proof_chain, inject_type1, inject_type2, sample_distractions,
)
from folbench.templates import BACKWARD

modes = st.sampled_from(tuple(MODE_DEPTHS))
seeds = st.integers(0, 2**32)


@settings(max_examples=60, deadline=None)
@given(modes, seeds)
def test_tree_shape(mode, seed):
    tree = build_skeleton(mode, seed)
    lo, hi = MODE_DEPTHS[mode]
    assert lo <= tree.depth <= hi
    if mode != "hard":
        assert tree.backward_steps == 0
    assert tree.expansions[0].parent == tree.root_id
    assert decide_label(tree.core_formulas(), tree.goal_atom()).label is tree.root.label


@settings(max_examples=60, deadline=None)
@given(modes, seeds)
def test_proof_chain_valid(mode, seed):
    tree = build_skeleton(mode, seed)
    steps = emit_proof_chain(tree)
    assert len(steps) == tree.depth
    assert all(validate_step(s) for s in steps)
    ps = PremiseSet.of(tree.core_formulas())
    assert validate_chain(steps, ps, tree.goal_atom(), tree.root.label)


def test_same_seed_same_tree():
    assert build_skeleton("hard", 5) == build_skeleton("hard", 5)


def test_depth_override():
    tree = build_skeleton("medium", 1, SkeletonConfig(depth_min=4, depth_max=4))
    assert tree.depth == 4
    with pytest.raises(ValueError):
        SkeletonConfig(depth_min=2, depth_max=7).depth_range("medium")


def test_backward_ratio_extremes():
    none = [build_skeleton("hard", s, SkeletonConfig(backward_ratio=0.0)).backward_steps for s in range(20)]
    assert sum(none) == 0
    trees = [build_skeleton("hard", s, SkeletonConfig(backward_ratio=1.0)) for s in range(20)]
    assert all(t.backward_steps > 0 for t in trees)
    assert all(t.expansions[0].family == BACKWARD for t in trees)


@settings(max_examples=40, deadline=None)
@given(modes, seeds)
def test_distractions_preserve_labels(mode, seed):
    tree = build_skeleton(mode, seed)
    rng = random.Random(seed)
    ds = sample_distractions(tree, rng, SkeletonConfig(), ["Nora", "Tim"])
    premises = tree.core_formulas() + ds.formulas()
    assert is_consistent(premises)
    for node_id, node in tree.nodes.items():
        assert decide_label(premises, tree.literal(node_id)).label is TruthLabel.TRUE
    for item in ds.type1:
        assert item.subject in {"Nora", "Tim"}
        assert all(constants(f) == {item.subject} for f in item.formulas)
    for item in ds.type2:
        assert item.target in tree.nodes


def test_type2_d2_left_open():
    tree = build_skeleton("medium", 3)
    items = inject_type2(tree, random.Random(0), 2)
    premises = tree.core_formulas() + [f for it in items for f in it.formulas]
    for it in items:
        for rule in it.rules:
            d2 = sorted(p for p in predicates(rule) if p.startswith("D"))[-1]
            assert decide_label(premises, Atom(d2, Const("S"))).label is TruthLabel.UNCERTAIN


def test_type1_requires_other_subject():
    tree = build_skeleton("easy", 0)
    with pytest.raises(ValueError):
        inject_type1(tree, random.Random(0), 2, ["S"])
    assert inject_type1(tree, random.Random(0), 0, []) == []


def test_assembly_roles_and_goal():
    tree = build_skeleton("medium", 9)
    rng = random.Random(9)
    ds = sample_distractions(tree, rng, SkeletonConfig(n1_max=3, n2_max=2), ["Nora"])
    asm = assemble_premises(tree, ds, rng)
    assert len(asm.premises) == len(asm.roles) == len(set(asm.premises))
    assert asm.roles.count("core-rule") == tree.depth
    assert decide_label(asm.premise_set, asm.goal).label is asm.label
    if asm.negated_goal:
        assert tree.root.label is TruthLabel.FALSE and asm.label is TruthLabel.TRUE


def test_assembly_never_negates_when_disabled():
    for seed in range(30):
        tree = build_skeleton("easy", seed)
        rng = random.Random(seed)
        asm = assemble_premises(tree, sample_distractions(tree, rng, SkeletonConfig(), []), rng,
                                negate_probability=0.0)
        assert asm.label is tree.root.label and not asm.negated_goal


def test_assembly_detects_conflicting_binding():
    tree = build_skeleton("medium", 2)
    rng = random.Random(2)
    ds = sample_distractions(tree, rng, SkeletonConfig(n1_max=0, n2_max=0), [])
    leaf = tree.leaf_facts()[0]
    # a binder that contradicts one core fact must be refused
    with pytest.raises(ConsistencyError):
        assemble_premises(tree, ds, rng, bind=lambda f: negate(f) if f == leaf else f)


def test_rules_quantifier_free_on_subject():
    tree = build_skeleton("hard", 4)
    for rule in tree.rules():
        assert not is_quantified(rule)
        assert constants(rule) == {"S"}
