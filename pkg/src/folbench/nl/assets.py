"""Bundled pools (names, keywords, predicates) and prompt templates."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class NameEntry:
    name: str
    category: str


@dataclass(frozen=True)
class PredicateEntry:
    name: str
    positive: str
    negative: str


def _read(name: str) -> str:
    return resources.files("folbench.nl").joinpath("data", name).read_text(encoding="utf-8")


def load_names(path: str | Path | None = None) -> list[NameEntry]:
    """Name pool from JSON (list of {name, category}) or ``name,category`` lines."""
    text = Path(path).read_text(encoding="utf-8") if path else _read("names.json")
    stripped = text.lstrip()
    if stripped.startswith("["):
        return [NameEntry(r["name"], r.get("category", "human")) for r in json.loads(text)]
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, category = line.partition(",")
        out.append(NameEntry(name.strip(), category.strip() or "human"))
    return out


def load_keywords(path: str | Path | None = None) -> list[str]:
    text = Path(path).read_text(encoding="utf-8") if path else _read("keywords.txt")
    return [w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#")]


@lru_cache(maxsize=None)
def predicate_pool() -> list[PredicateEntry]:
    out = []
    for line in _read("predicates.txt").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, pos, neg = (part.strip() for part in line.split("|"))
        out.append(PredicateEntry(name, pos, neg))
    return out


@lru_cache(maxsize=None)
def load_prompt(name: str) -> tuple[dict[str, str], ...]:
    """Parse a ``### role`` delimited prompt asset into chat messages."""
    messages: list[dict[str, str]] = []
    role, lines = None, []
    for line in _read(f"{name}_prompt.txt").splitlines():
        head = line[4:].strip() if line.startswith("### ") else None
        if head in ROLES:
            if role:
                messages.append({"role": role, "content": "\n".join(lines).strip()})
            role, lines = head, []
        else:
            lines.append(line)
    if role:
        messages.append({"role": role, "content": "\n".join(lines).strip()})
    return tuple(messages)


def fill_prompt(name: str, slots: Mapping[str, str]) -> list[dict[str, str]]:
    """Prompt messages with ``[SLOT]`` markers in the final user turn replaced."""
    messages = [dict(m) for m in load_prompt(name)]
    text = messages[-1]["content"]
    for key, value in slots.items():
        text = text.replace(f"[{key}]", value)
    messages[-1]["content"] = text
    return messages


STORY_OPENINGS = (
    "{name} was a {category} whose life had always been shaped by {keyword}.",
    "Everyone in the neighborhood knew {name}, a {category} with a story about {keyword}.",
    "From an early age, {name} the {category} was drawn to anything that spoke of {keyword}.",
)
STORY_MIDDLES = (
    "Over the years {name} met friends and rivals, and each of them left a mark, "
    "but the idea of {keyword} kept returning in small and surprising ways.",
    "Long days of practice and a few lucky chances taught {name} that {keyword} "
    "was less a gift than a habit built one choice at a time.",
    "When hard times came, {name} leaned on {keyword} and found that the people "
    "and animals nearby leaned back.",
)
STORY_CLOSINGS = (
    "Today {name} is remembered as a {category} who turned {keyword} into a way of living.",
    "The story of {name} is still told whenever someone needs a reminder of {keyword}.",
    "For {name}, {keyword} was never the goal, only the road that led home.",
)
