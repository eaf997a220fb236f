import json
import random
from dataclasses import replace

import pytest

from folbench.dataset import (
    VARIANTS, ProblemInstance, ReplacementFailed, SchemaError, VerificationFailed,
    augment_step_decomposition, augment_uncertain_goal, check_instance, corrupt_remove_universal,
    read_dataset, read_jsonl, read_manifest, verify_instance, write_dataset, write_jsonl,
)
from folbench.engine import decide_label
from folbench.fol import ForAll, parse_formula
from oracle import brute_label


def test_json_round_trip(small_generated, tmp_path):
    path = tmp_path / "x.jsonl"
    write_jsonl(small_generated, path)
    back = read_jsonl(path)
    assert [i.to_json() for i in back] == [i.to_json() for i in small_generated]
    row = json.loads(path.read_text().splitlines()[0])
    assert set(row) >= {"id", "context", "context_fol", "question", "options", "answer", "proof", "metadata"}
    assert row["options"] == ["A) True", "B) False", "C) Uncertain"]
    assert isinstance(row["context_fol"][0], str) and isinstance(row["metadata"]["goal_fol"], str)


def test_golden_fixtures_verify(golden_path):
    insts = read_jsonl(golden_path)
    assert [i.answer for i in insts] == ["A", "A", "A"]
    assert [len(i.proof) for i in insts] == [1, 3, 5]
    for inst in insts:
        assert check_instance(inst) == []


def test_schema_errors_carry_line(tmp_path, golden_path):
    path = tmp_path / "bad.jsonl"
    good = golden_path.read_text().splitlines()[0]
    path.write_text(good + "\n{not json}\n")
    with pytest.raises(SchemaError) as info:
        read_jsonl(path)
    assert info.value.line == 2
    path.write_text(json.dumps({"id": "x"}) + "\n")
    with pytest.raises(SchemaError):
        read_jsonl(path)
    path.write_text("")
    with pytest.raises(SchemaError):
        read_jsonl(path)


def test_check_catches_tampering(small_generated):
    inst = small_generated[0]
    wrong = {"A": "B", "B": "C", "C": "A"}[inst.answer]
    assert any("engine says" in p for p in check_instance(replace(inst, answer=wrong)))
    bad_text = replace(inst, context=["Nothing here."] + inst.context[1:])
    assert any("translation" in p for p in check_instance(bad_text))
    assert check_instance(bad_text, qc=False) == []
    with pytest.raises(VerificationFailed):
        verify_instance(replace(inst, answer=wrong))


def test_manifest_and_checksums(small_generated, tmp_path):
    manifest = write_dataset(small_generated, tmp_path, config={"seed": 11}, seeds={"seed": 11})
    assert manifest["counts"] == {"easy": 4, "medium": 4, "hard": 4}
    assert manifest == read_manifest(tmp_path)
    assert {p.name for p in tmp_path.iterdir()} == {"easy.jsonl", "medium.jsonl", "hard.jsonl", "manifest.json"}
    assert len(read_dataset(tmp_path)) == 12
    shard = tmp_path / "easy.jsonl"
    shard.write_text(shard.read_text().replace("A) True", "A) Yes", 1))
    with pytest.raises(SchemaError, match="checksum"):
        read_dataset(tmp_path)
    assert len(read_dataset(tmp_path, check=False)) == 12


def test_step_decomposition(small_generated):
    for inst in small_generated:
        parts = augment_step_decomposition(inst)
        assert len(parts) == len(inst.proof)
        for k, part in enumerate(parts, start=1):
            assert part.id == f"{inst.id}-s{k}" and len(part.proof) == k
            assert part.answer in "AB"
            assert brute_label(part.context_fol, part.goal_fol) == part.answer
            assert check_instance(part, depth=False) == []


def test_uncertain_augmentation(small_generated):
    rng = random.Random(0)
    for inst in small_generated:
        u = augment_uncertain_goal(inst, rng)
        assert u.answer == "C" and u.proof == [] and u.id.endswith("-u")
        assert brute_label(u.context_fol, u.goal_fol) == "C"
    bare = replace(small_generated[0], metadata={**small_generated[0].metadata, "spare_statements": []})
    with pytest.raises(ReplacementFailed):
        augment_uncertain_goal(bare, rng)


def test_corruption_monotone(small_generated):
    for inst in small_generated:
        c = corrupt_remove_universal(inst)
        assert not any(isinstance(f, ForAll) for f in c.context_fol)
        assert {c.answer, inst.answer} != {"A", "B"}
        assert c.metadata["original_answer"] == inst.answer
        assert c.metadata["removed_universal"] == sum(isinstance(f, ForAll) for f in inst.context_fol)
        assert check_instance(c, depth=False) == []


def test_variants_keep_labels(small_generated):
    for inst in small_generated:
        labels = {name: decide_label(fn(inst).premises, inst.goal_fol).label for name, fn in VARIANTS.items()}
        assert len(set(labels.values())) == 1
        nd = VARIANTS["no-distractions"](inst)
        assert set(nd.roles) <= {"core-fact", "core-rule"}


def test_from_json_rejects_bad_formula(small_generated):
    row = small_generated[0].to_json()
    row["context_fol"][0] = "wild(("
    with pytest.raises(Exception):
        ProblemInstance.from_json(row)
    assert parse_formula(small_generated[0].to_json()["metadata"]["goal_fol"]) == small_generated[0].goal_fol
