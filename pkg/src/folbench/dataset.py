"""Benchmark instances, their transforms, and JSONL persistence."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .engine import (
    ENGINE_VERSION,
    InconsistentPremises,
    PremiseSet,
    ProofStep,
    TruthLabel,
    decide_label,
    validate_chain,
)
from .fol import (
    ForAll,
    Formula,
    FolError,
    Not,
    format_formula,
    literal_atom,
    parse_formula,
    predicates,
)
from .nl.realize import qc_translation
from .skeleton import MODE_DEPTHS, ROLE_CORE_FACT, ROLE_CORE_RULE

OPTIONS = ("A) True", "B) False", "C) Uncertain")
QUESTION_PREFIX = (
    "Based on the above information, is the following statement true, false, or uncertain?"
)
MANIFEST = "manifest.json"
TIERS = tuple(MODE_DEPTHS)


class SchemaError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<input>'}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.path = path


class VerificationFailed(Exception):
    pass


class ReplacementFailed(Exception):
    pass


def question_for(goal_text: str) -> str:
    return f"{QUESTION_PREFIX} {goal_text}"


@dataclass(frozen=True)
class ProofRecord:
    step: ProofStep
    facts_nl: tuple[str, ...]
    rule_nl: str
    conclusion_nl: str

    def to_json(self) -> dict:
        return {
            "facts_fol": [format_formula(f) for f in self.step.step_facts],
            "rule_fol": format_formula(self.step.step_rule),
            "conclusion_fol": format_formula(self.step.conclusion),
            "facts_nl": list(self.facts_nl),
            "rule_nl": self.rule_nl,
            "conclusion_nl": self.conclusion_nl,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ProofRecord":
        step = ProofStep(
            tuple(parse_formula(s) for s in d["facts_fol"]),
            parse_formula(d["rule_fol"]),
            parse_formula(d["conclusion_fol"]),
        )
        return cls(step, tuple(d["facts_nl"]), d["rule_nl"], d["conclusion_nl"])


@dataclass
class ProblemInstance:
    id: str
    context: list[str]
    context_fol: list[Formula]
    question: str
    goal_fol: Formula
    answer: str
    proof: list[ProofRecord] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    options: tuple[str, ...] = OPTIONS

    @property
    def label(self) -> TruthLabel:
        return TruthLabel.from_letter(self.answer)

    @property
    def premises(self) -> PremiseSet:
        return PremiseSet.of(self.context_fol)

    @property
    def goal_text(self) -> str:
        return self.question[len(QUESTION_PREFIX):].strip()

    @property
    def difficulty(self) -> str | None:
        return self.metadata.get("difficulty")

    @property
    def roles(self) -> list[str]:
        return list(self.metadata.get("roles") or [ROLE_CORE_FACT] * len(self.context))

    def to_json(self) -> dict:
        meta = dict(self.metadata)
        meta["goal_fol"] = format_formula(self.goal_fol)
        return {
            "id": self.id,
            "context": list(self.context),
            "context_fol": [format_formula(f) for f in self.context_fol],
            "question": self.question,
            "options": list(self.options),
            "answer": self.answer,
            "proof": [p.to_json() for p in self.proof],
            "metadata": meta,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ProblemInstance":
        meta = dict(d["metadata"])
        goal = parse_formula(meta.pop("goal_fol"))
        return cls(
            id=d["id"],
            context=list(d["context"]),
            context_fol=[parse_formula(s) for s in d["context_fol"]],
            question=d["question"],
            goal_fol=goal,
            answer=d["answer"],
            proof=[ProofRecord.from_json(p) for p in d["proof"]],
            metadata=meta,
            options=tuple(d["options"]),
        )


_REQUIRED = ("id", "context", "context_fol", "question", "options", "answer", "proof", "metadata")


def _check_schema(d: Any) -> None:
    if not isinstance(d, dict):
        raise ValueError("instance is not a JSON object")
    missing = [k for k in _REQUIRED if k not in d]
    if missing:
        raise ValueError(f"missing keys {missing}")
    if d["answer"] not in ("A", "B", "C"):
        raise ValueError(f"answer must be A, B or C, got {d['answer']!r}")
    if len(d["options"]) != 3:
        raise ValueError("options must have three entries")
    if "goal_fol" not in d["metadata"]:
        raise ValueError("metadata.goal_fol is missing")
    if not isinstance(d["context"], list) or not isinstance(d["context_fol"], list):
        raise ValueError("context and context_fol must be arrays")


# ---------------------------------------------------------------- checks


def _engine_label(context_fol: Sequence[Formula], goal: Formula) -> TruthLabel | None:
    try:
        return decide_label(PremiseSet.of(context_fol), goal).label
    except InconsistentPremises:
        return None


def check_instance(inst: ProblemInstance, qc: bool = True, depth: bool = True) -> list[str]:
    """Problems found with an instance; empty when it is sound."""
    problems = []
    if len(inst.context) != len(inst.context_fol):
        problems.append("context and context_fol differ in length")
    actual = _engine_label(inst.context_fol, inst.goal_fol)
    if actual is None:
        problems.append("premises are unsatisfiable")
    elif actual.letter != inst.answer:
        problems.append(f"stored answer {inst.answer} but the engine says {actual.letter}")
    if not inst.metadata.get("proof_invalidated"):
        steps = [p.step for p in inst.proof]
        if not validate_chain(steps, inst.premises, inst.goal_fol, inst.label):
            problems.append("proof chain does not validate")
    if qc:
        for i, (text, f) in enumerate(zip(inst.context, inst.context_fol)):
            if not qc_translation(f, text):
                problems.append(f"premise {i} fails the translation check: {text!r}")
        if not qc_translation(inst.goal_fol, inst.goal_text):
            problems.append("question fails the translation check")
    tier = inst.difficulty
    if depth and inst.metadata.get("source", "generated") == "generated" and tier in MODE_DEPTHS:
        lo, hi = MODE_DEPTHS[tier]
        n = inst.metadata.get("num_steps", len(inst.proof))
        if not lo <= n <= hi:
            problems.append(f"{n} steps is outside the {tier} range {lo}-{hi}")
    return problems


def verify_instance(inst: ProblemInstance, **kw) -> None:
    problems = check_instance(inst, **kw)
    if problems:
        raise VerificationFailed(f"{inst.id}: " + "; ".join(problems))


# -------------------------------------------------------------- assembly


def assemble_instance(
    instance_id: str,
    premises: Sequence[Formula],
    roles: Sequence[str],
    goal: Formula,
    label: TruthLabel,
    steps: Sequence[ProofStep],
    text: Callable[[Formula], str],
    metadata: dict[str, Any],
    verify: bool = True,
) -> ProblemInstance:
    """Attach text to verified formulas and run the whole-instance check.

    ``text`` maps a realized formula to its sentence.
    """
    proof = [
        ProofRecord(s, tuple(text(f) for f in s.step_facts), text(s.step_rule), text(s.conclusion))
        for s in steps
    ]
    statements: dict[str, str] = {}
    for s in steps:
        a = literal_atom(s.conclusion)
        for lit in (a, Not(a)):
            statements[format_formula(lit)] = text(lit)
    meta = dict(metadata)
    meta["roles"] = list(roles)
    meta["num_steps"] = len(steps)
    meta["statements"] = statements
    meta.setdefault("engine_version", ENGINE_VERSION)
    inst = ProblemInstance(
        id=instance_id,
        context=[text(f) for f in premises],
        context_fol=list(premises),
        question=question_for(text(goal)),
        goal_fol=goal,
        answer=label.letter,
        proof=proof,
        metadata=meta,
    )
    if verify:
        verify_instance(inst)
    return inst


# ------------------------------------------------------------ transforms


def _statement(inst: ProblemInstance, f: Formula) -> str:
    key = format_formula(f)
    statements = inst.metadata.get("statements", {})
    if key not in statements:
        raise KeyError(f"{inst.id}: no sentence stored for {key}")
    return statements[key]


def augment_step_decomposition(inst: ProblemInstance) -> list[ProblemInstance]:
    """One instance per proof prefix, asking about that step's conclusion.

    The goal is the positive atom of the conclusion, so negative conclusions
    become False questions.
    """
    out = []
    for k, record in enumerate(inst.proof, start=1):
        concl = record.step.conclusion
        atom = literal_atom(concl)
        label = TruthLabel.of(not isinstance(concl, Not))
        meta = dict(inst.metadata)
        meta.update(source="step", parent=inst.id, num_steps=k, step=k)
        new = replace(
            inst,
            id=f"{inst.id}-s{k}",
            question=question_for(_statement(inst, atom)),
            goal_fol=atom,
            answer=label.letter,
            proof=list(inst.proof[:k]),
            metadata=meta,
        )
        verify_instance(new, depth=False)
        out.append(new)
    return out


def augment_uncertain_goal(inst: ProblemInstance, rng: random.Random, tries: int = 20) -> ProblemInstance:
    """Replace the goal with a fact about a predicate no premise mentions."""
    used = set().union(*(predicates(f) for f in inst.context_fol)) if inst.context_fol else set()
    spares = list(inst.metadata.get("spare_statements", []))
    for _ in range(min(tries, max(1, len(spares)))):
        if not spares:
            break
        pick = spares.pop(rng.randrange(len(spares)))
        goal = parse_formula(pick["fol"])
        if predicates(goal) & used:
            continue
        if _engine_label(inst.context_fol, goal) is not TruthLabel.UNCERTAIN:
            continue
        meta = dict(inst.metadata)
        meta.update(source="uncertain", parent=inst.id, num_steps=0)
        new = replace(
            inst,
            id=f"{inst.id}-u",
            question=question_for(pick["nl"]),
            goal_fol=goal,
            answer=TruthLabel.UNCERTAIN.letter,
            proof=[],
            metadata=meta,
        )
        verify_instance(new, depth=False)
        return new
    raise ReplacementFailed(f"{inst.id}: no fresh predicate available")


def corrupt_remove_universal(inst: ProblemInstance) -> ProblemInstance:
    """Drop every universal premise and let the engine relabel."""
    keep = [i for i, f in enumerate(inst.context_fol) if not isinstance(f, ForAll)]
    context_fol = [inst.context_fol[i] for i in keep]
    roles = inst.roles
    label = _engine_label(context_fol, inst.goal_fol)
    if label is None:
        raise VerificationFailed(f"{inst.id}: premises became unsatisfiable")
    meta = dict(inst.metadata)
    meta.update(
        corrupted=True,
        removed_universal=len(inst.context_fol) - len(keep),
        original_answer=inst.answer,
        roles=[roles[i] for i in keep],
    )
    new = replace(
        inst,
        context=[inst.context[i] for i in keep],
        context_fol=context_fol,
        answer=label.letter,
        metadata=meta,
    )
    if not validate_chain([p.step for p in new.proof], new.premises, new.goal_fol, label):
        new.proof = []
        new.metadata["proof_invalidated"] = True
    return new


def _subset(inst: ProblemInstance, order: Sequence[int], tag: str) -> ProblemInstance:
    roles = inst.roles
    meta = dict(inst.metadata)
    meta["roles"] = [roles[i] for i in order]
    meta["variant"] = tag
    new = replace(
        inst,
        context=[inst.context[i] for i in order],
        context_fol=[inst.context_fol[i] for i in order],
        metadata=meta,
    )
    verify_instance(new, depth=False)
    return new


def variant_no_distractions(inst: ProblemInstance) -> ProblemInstance:
    core = (ROLE_CORE_FACT, ROLE_CORE_RULE)
    order = [i for i, r in enumerate(inst.roles) if r in core]
    return _subset(inst, order, "no-distractions")


def variant_ordered(inst: ProblemInstance) -> ProblemInstance:
    """Premises in proof order: each step's facts, then its rule; the rest after."""
    index = {f: i for i, f in enumerate(inst.context_fol)}
    order: list[int] = []
    for record in inst.proof:
        for f in (*record.step.step_facts, record.step.step_rule):
            i = index.get(f)
            if i is not None and i not in order:
                order.append(i)
    order += [i for i in range(len(inst.context_fol)) if i not in order]
    tag = "ordered" if inst.metadata.get("variant") is None else f"{inst.metadata['variant']}+ordered"
    return _subset(inst, order, tag)


VARIANTS: dict[str, Callable[[ProblemInstance], ProblemInstance]] = {
    "default": lambda inst: inst,
    "no-distractions": variant_no_distractions,
    "no-distractions+ordered": lambda inst: variant_ordered(variant_no_distractions(inst)),
}


# ------------------------------------------------------------------- I/O


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def config_hash(config: dict | None) -> str:
    blob = json.dumps(config or {}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def dumps_instance(inst: ProblemInstance) -> str:
    return json.dumps(inst.to_json(), ensure_ascii=False, sort_keys=False)


def write_jsonl(instances: Iterable[ProblemInstance], path: str | Path) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(dumps_instance(inst) + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> list[ProblemInstance]:
    path = Path(path)
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                _check_schema(d)
                out.append(ProblemInstance.from_json(d))
            except (ValueError, KeyError, TypeError, FolError) as exc:
                raise SchemaError(str(exc), lineno, str(path)) from exc
    if not out:
        raise SchemaError("no instances", 0, str(path))
    return out


def write_dataset(
    instances: Sequence[ProblemInstance],
    outdir: str | Path,
    config: dict | None = None,
    seeds: dict | None = None,
    shard_of: Callable[[ProblemInstance], str] | None = None,
    extra: dict | None = None,
) -> dict:
    """Write one JSONL shard per tier plus ``manifest.json``; returns the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    shard_of = shard_of or (lambda inst: inst.difficulty or "all")
    shards: dict[str, list[ProblemInstance]] = {}
    for inst in instances:
        shards.setdefault(shard_of(inst), []).append(inst)
    order = [t for t in TIERS if t in shards] + sorted(k for k in shards if k not in TIERS)
    manifest: dict[str, Any] = {
        "counts": {},
        "shards": {},
        "seeds": seeds or {},
        "config": config or {},
        "config_hash": config_hash(config),
        "engine_version": ENGINE_VERSION,
    }
    for name in order:
        path = outdir / f"{name}.jsonl"
        manifest["counts"][name] = write_jsonl(shards[name], path)
        manifest["shards"][name] = {"file": path.name, "sha256": _sha256(path)}
    manifest["total"] = sum(manifest["counts"].values())
    if extra:
        manifest.update(extra)
    (outdir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_manifest(path: str | Path) -> dict:
    return json.loads((Path(path) / MANIFEST).read_text())


def read_dataset(path: str | Path, check: bool = True) -> list[ProblemInstance]:
    """Inverse of :func:`write_dataset`; a single JSONL file is also accepted."""
    path = Path(path)
    if path.is_file():
        return read_jsonl(path)
    manifest = read_manifest(path)
    out: list[ProblemInstance] = []
    for name, shard in manifest["shards"].items():
        file = path / shard["file"]
        if check and _sha256(file) != shard["sha256"]:
            raise SchemaError(f"checksum mismatch for shard {name}", None, str(file))
        items = read_jsonl(file)
        if check and len(items) != manifest["counts"][name]:
            raise SchemaError(f"shard {name} holds {len(items)} instances, manifest says "
                              f"{manifest['counts'][name]}", None, str(file))
        out.extend(items)
    return out
