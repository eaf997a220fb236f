"""Evaluation harness: prompts, built-in baseline models and accuracy reports."""

from __future__ import annotations

import json
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Protocol, Sequence

from .dataset import (
    OPTIONS,
    TIERS,
    VARIANTS,
    ProblemInstance,
    SchemaError,
    read_dataset,
)
from .engine import EngineError, decide_label
from .nl.backends import Backend, BackendError, first_json_object

STANDARD = "standard"
COT = "cot"
STRATEGIES = (STANDARD, COT)

SYSTEM_TEXT = {
    STANDARD: "Given a problem statement as contexts, the task is to answer a logical reasoning "
              "question. Your answer should be in JSON format with key: answer.",
    COT: "Given a problem statement as contexts, the task is to answer a logical reasoning "
         "question. Your answer should be in JSON format with keys: reasoning, answer.",
}
SEPARATOR = "------------------\nAnother Example\n------------------"
STRATEGY_TITLES = {STANDARD: "Standard Prompting", COT: "CoT Prompting"}


# ------------------------------------------------------------------ items


@dataclass(frozen=True)
class EvalItem:
    id: str
    tier: str | None
    context: tuple[str, ...]
    question: str
    answer: str
    options: tuple[str, ...] = OPTIONS
    reasoning: str = ""
    instance: ProblemInstance | None = None

    @classmethod
    def from_instance(cls, inst: ProblemInstance) -> "EvalItem":
        return cls(inst.id, inst.difficulty, tuple(inst.context), inst.question,
                   inst.answer, tuple(inst.options), reasoning_text(inst), inst)


_ANSWER_WORDS = {"true": "A", "false": "B", "uncertain": "C", "unknown": "C"}


def import_records(rows: Iterable[dict], tier: str | None = None) -> list[EvalItem]:
    """Adapter for foreign multiple-choice sets.

    Each row needs ``context`` (string or list), ``question`` and ``answer``
    (a letter or True/False/Uncertain/Unknown); ``id``, ``options`` and
    ``tier`` are optional.
    """
    out = []
    for n, row in enumerate(rows):
        ctx = row["context"]
        context = tuple(ctx) if isinstance(ctx, list) else (str(ctx),)
        raw = str(row["answer"]).strip()
        answer = raw[0].upper() if raw[:1].upper() in "ABC" and len(raw) <= 3 else _ANSWER_WORDS.get(raw.lower())
        if answer is None:
            raise SchemaError(f"cannot map answer {raw!r}", n + 1)
        options = tuple(row.get("options") or OPTIONS)
        out.append(EvalItem(str(row.get("id", n)), row.get("tier", tier), context,
                            row["question"], answer, options))
    return out


def load_items(path: str | Path) -> list[EvalItem]:
    """Items from a dataset in this package's schema, or via the import adapter."""
    try:
        return [EvalItem.from_instance(i) for i in read_dataset(path)]
    except SchemaError:
        path = Path(path)
        if not path.is_file():
            raise
        rows = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
        return import_records(rows)


# -------------------------------------------------------------- prompting


def reasoning_text(inst: ProblemInstance) -> str:
    """CoT narration of a proof: each step's facts, rule and conclusion in turn."""
    parts = []
    for record in inst.proof:
        parts.extend(_period(t) for t in record.facts_nl)
        parts.append(_period(record.rule_nl))
        parts.append(_period(record.conclusion_nl))
    verdict = {"A": "true", "B": "false", "C": "uncertain"}[inst.answer]
    # statements open with the subject's name, so no re-casing is needed
    goal = inst.goal_text.rstrip(".")
    if inst.answer == "C" and not inst.proof:
        parts.append("The premises say nothing that settles the statement.")
    parts.append(f"Therefore, it is {verdict} that {goal}. The correct option is: {inst.answer}.")
    return " ".join(parts)


def _period(text: str) -> str:
    text = text.strip()
    return text if text.endswith(".") else text + "."


@dataclass(frozen=True)
class PromptStrategy:
    kind: str = STANDARD
    shots: int = 2
    exemplars: tuple[EvalItem, ...] = ()

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if not self.exemplars:
            object.__setattr__(self, "exemplars", tuple(default_exemplars(self.shots)))
        if len(self.exemplars) != self.shots:
            raise ValueError(f"{self.shots}-shot strategy needs {self.shots} exemplars")

    @property
    def name(self) -> str:
        return f"{self.kind}-{self.shots}shot"

    def reply(self, item: EvalItem) -> str:
        body: dict[str, str] = {}
        if self.kind == COT:
            body["reasoning"] = item.reasoning
        body["answer"] = item.answer
        return json.dumps(body, indent=2, ensure_ascii=False)


@lru_cache(maxsize=None)
def _exemplar_pool() -> tuple[EvalItem, ...]:
    text = resources.files("folbench").joinpath("data", "exemplars.json").read_text(encoding="utf-8")
    return tuple(
        EvalItem(e["id"], e.get("tier"), tuple(e["context"]), e["question"], e["answer"],
                 OPTIONS, e["reasoning"])
        for e in json.loads(text)
    )


def default_exemplars(shots: int) -> list[EvalItem]:
    pool = _exemplar_pool()
    if shots > len(pool):
        raise ValueError(f"only {len(pool)} bundled exemplars")
    return list(pool[:shots])


def _block(item: EvalItem) -> str:
    return (
        f"Context:\n{' '.join(item.context)}\n\n"
        f"Question: {item.question}\n\n"
        f"Options:\n" + "\n".join(item.options) + "\n\n"
        "The correct option is:"
    )


def build_prompt(item: EvalItem, strategy: PromptStrategy) -> list[dict[str, str]]:
    blocks = [f"{_block(ex)} {strategy.reply(ex)}" for ex in strategy.exemplars]
    blocks.append(_block(item))
    return [
        {"role": "system", "content": SYSTEM_TEXT[strategy.kind]},
        {"role": "user", "content": f"\n{SEPARATOR}\n".join(blocks)},
    ]


_LETTER_RE = re.compile(r"\(?([ABC])\)?(?:[\s.:)]|$)")


def parse_reply(raw: str, strategy: PromptStrategy | str | None = None) -> str | None:
    """The answer letter from the first JSON object in ``raw``, or None."""
    obj = first_json_object(raw or "")
    if obj is None or not isinstance(obj.get("answer"), str):
        return None
    m = _LETTER_RE.match(obj["answer"].strip())
    return m.group(1) if m else None


# ----------------------------------------------------------------- models


class Model(Protocol):
    name: str

    def reply(self, item: EvalItem, messages: list[dict[str, str]], strategy: PromptStrategy) -> str: ...


class OracleModel:
    """Answers with the entailment engine; the 100% baseline."""

    name = "oracle"

    def reply(self, item, messages, strategy):
        if item.instance is None:
            raise BackendError(f"{item.id}: oracle needs symbolic premises")
        inst = item.instance
        try:
            label = decide_label(inst.premises, inst.goal_fol).label
        except EngineError as exc:
            raise BackendError(str(exc)) from exc
        body: dict[str, str] = {}
        if strategy.kind == COT:
            body["reasoning"] = item.reasoning
        body["answer"] = label.letter
        return json.dumps(body)


class RandomModel:
    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def reply(self, item, messages, strategy):
        return json.dumps({"answer": random.Random(f"{self.seed}:{item.id}").choice("ABC")})


class ChatModel:
    def __init__(self, backend: Backend, name: str | None = None, temperature: float = 0.0):
        self.backend = backend
        self.name = name or getattr(backend, "model", backend.name)
        self.temperature = temperature

    def reply(self, item, messages, strategy):
        return self.backend.complete("eval", messages, self.temperature, {"id": item.id})


# ---------------------------------------------------------------- running


@dataclass(frozen=True)
class EvalRecord:
    id: str
    tier: str | None
    raw: str
    parsed: str | None
    gold: str
    correct: bool
    latency: float = 0.0
    error: str | None = None


def _accuracy(records: Sequence[EvalRecord]) -> float | None:
    if not records:
        return None
    return round(100.0 * sum(r.correct for r in records) / len(records), 2)


@dataclass
class ModelRun:
    model: str
    strategy: PromptStrategy
    dataset: str
    records: list[EvalRecord] = field(default_factory=list)

    @property
    def unparseable_count(self) -> int:
        return sum(r.parsed is None for r in self.records)

    @property
    def parsed_count(self) -> int:
        return sum(r.parsed is not None for r in self.records)

    def accuracy(self, tier: str | None = None) -> float | None:
        rs = self.records if tier is None else [r for r in self.records if r.tier == tier]
        return _accuracy(rs)

    def report(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "strategy": self.strategy.name,
            "dataset": self.dataset,
            "per_tier": {t: self.accuracy(t) for t in TIERS},
            "overall": self.accuracy(),
            "unparseable_count": self.unparseable_count,
        }

    def report_json(self) -> str:
        return json.dumps(self.report(), indent=2, sort_keys=True) + "\n"


def _evaluate_one(item: EvalItem, model: Model, strategy: PromptStrategy) -> EvalRecord:
    messages = build_prompt(item, strategy)
    start = time.perf_counter()
    try:
        raw = model.reply(item, messages, strategy)
        error = None
    except BackendError as exc:
        raw, error = "", str(exc)
    latency = time.perf_counter() - start
    parsed = parse_reply(raw, strategy)
    return EvalRecord(item.id, item.tier, raw, parsed, item.answer, parsed == item.answer, latency, error)


def run_eval(
    items: Sequence[EvalItem | ProblemInstance],
    model: Model,
    strategy: PromptStrategy | None = None,
    dataset: str = "dataset",
    workers: int = 1,
) -> ModelRun:
    strategy = strategy or PromptStrategy()
    items = [EvalItem.from_instance(i) if isinstance(i, ProblemInstance) else i for i in items]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda it: _evaluate_one(it, model, strategy), items))
    else:
        records = [_evaluate_one(it, model, strategy) for it in items]
    records.sort(key=lambda r: r.id)
    return ModelRun(model.name, strategy, dataset, records)


ABLATION_ROWS = (
    ("default", True, True),
    ("no-distractions", False, True),
    ("no-distractions+ordered", False, False),
)


def run_ablation(
    instances: Sequence[ProblemInstance],
    model: Model,
    strategy: PromptStrategy | None = None,
    dataset: str = "dataset",
    workers: int = 1,
) -> list[tuple[str, bool, bool, ModelRun]]:
    """Default, no-distraction, and no-distraction + proof-ordered runs."""
    out = []
    for variant, distractions, shuffled in ABLATION_ROWS:
        transformed = [VARIANTS[variant](inst) for inst in instances]
        run = run_eval(transformed, model, strategy, f"{dataset}:{variant}", workers)
        out.append((variant, distractions, shuffled, run))
    return out


# ----------------------------------------------------------------- tables


def _cell(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def format_results_table(reports: Sequence[dict]) -> str:
    """Models as rows, tiers as columns, one block per prompting strategy."""
    width = max([len("Model")] + [len(r["model"]) for r in reports])
    header = f"{'Model':<{width}}  " + "  ".join(f"{t.capitalize():>7}" for t in TIERS)
    lines = [header, "-" * len(header)]
    for kind in STRATEGIES:
        block = [r for r in reports if r["strategy"].startswith(kind)]
        if not block:
            continue
        lines.append(STRATEGY_TITLES[kind])
        for r in block:
            cells = "  ".join(f"{_cell(r['per_tier'].get(t)):>7}" for t in TIERS)
            lines.append(f"{r['model']:<{width}}  {cells}")
    return "\n".join(lines) + "\n"


def format_ablation_table(rows: Sequence[tuple[str, bool, bool, ModelRun]]) -> str:
    mark = {True: "✓", False: "✗"}
    header = "Distractions  Shuffled  " + "  ".join(f"{t.capitalize():>7}" for t in TIERS)
    lines = [header, "-" * len(header)]
    for _, distractions, shuffled, run in rows:
        cells = "  ".join(f"{_cell(run.accuracy(t)):>7}" for t in TIERS)
        lines.append(f"{mark[distractions]:^12}  {mark[shuffled]:^8}  {cells}")
    return "\n".join(lines) + "\n"


def write_records(run: ModelRun, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in run.records:
            fh.write(json.dumps(r.__dict__, ensure_ascii=False) + "\n")
