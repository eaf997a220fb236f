"""Turning a verified skeleton into text.

The order follows the generation pipeline: a background story for the
subject, then predicate instantiation and translation of every rule
(each rule gets a universal and a specific version and a plausibility
judgment picks one), then fact translation with the earlier translations
given as references.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from ..fol import (
    PREDICATE_RE,
    Atom,
    Const,
    Exists,
    ForAll,
    Formula,
    Not,
    constants,
    format_formula,
    format_unicode,
    generalize,
    instantiate,
    map_atoms,
    predicates,
    rename_predicates,
)
from .assets import fill_prompt, predicate_pool
from .backends import Backend, BackendError, SchemaError, request_json
from .render import default_phrases

STORY_TEMPERATURE = 0.7
TRANSLATE_TEMPERATURE = 0.2
MAX_STORY_WORDS = 150

UNIVERSAL = "universal"
SPECIFIC = "specific"
EXISTENTIAL = "existential"

_PLACEHOLDER_RE = re.compile(r"[A-Z][0-9]+\Z")


class QcError(Exception):
    pass


class ForbiddenPredicate(Exception):
    pass


def is_placeholder(predicate: str) -> bool:
    return bool(_PLACEHOLDER_RE.match(predicate))


def _placeholder_key(p: str) -> tuple[str, int]:
    return p[0], int(p[1:])


# -------------------------------------------------------------------- story


@dataclass(frozen=True)
class StoryContext:
    subject: str
    keyword: str
    category: str
    story: str


def generate_story(
    name: str,
    keyword: str,
    backend: Backend,
    category: str | None = None,
    retries: int = 3,
) -> StoryContext:
    """Background story; ``category`` is the name pool's category, if known.

    A reply naming another category is retried; if it persists the pool
    category wins.  Overlong stories are cut at the word limit.
    """
    messages = fill_prompt("story", {"KEYWORD": keyword, "NAME": name})
    ctx = {"name": name, "keyword": keyword, "category": category}
    fallback = None
    for _ in range(retries):
        reply = request_json(backend, "story", messages, STORY_TEMPERATURE, ctx,
                             keys=("category", "story"), retries=retries)
        story = str(reply["story"]).strip()
        got = str(reply["category"]).strip().lower()
        if not story:
            continue
        words = story.split()
        if len(words) > MAX_STORY_WORDS:
            story = " ".join(words[:MAX_STORY_WORDS])
        if category is None or got == category:
            return StoryContext(name, keyword, got or "human", story)
        fallback = story
    if fallback is None:
        raise SchemaError(f"no usable story for {name}/{keyword}")
    return StoryContext(name, keyword, category or "human", fallback)


# ------------------------------------------------------------------ lexicon


@dataclass(frozen=True)
class LexiconEntry:
    predicate: str
    phrase: str
    negative_phrase: str
    forbidden_twins: tuple[str, ...] = ()


@dataclass
class Lexicon:
    """Per-instance predicate table; placeholders map to realized predicates."""

    entries: dict[str, LexiconEntry] = field(default_factory=dict)
    binding: dict[str, str] = field(default_factory=dict)
    references: list[tuple[Formula, str]] = field(default_factory=list)

    def forbidden(self) -> list[str]:
        out = list(self.entries)
        for e in self.entries.values():
            out.extend(t for t in e.forbidden_twins if t not in out)
        return out

    def add(self, placeholder: str, entry: LexiconEntry) -> None:
        if entry.predicate in self.forbidden():
            raise ForbiddenPredicate(entry.predicate)
        if any(e.phrase == entry.phrase for e in self.entries.values()):
            raise ForbiddenPredicate(f"phrase {entry.phrase!r} already used")
        self.entries[entry.predicate] = entry
        self.binding[placeholder] = entry.predicate

    def phrases(self, preds: Iterable[str] | None = None) -> dict[str, tuple[str, str]]:
        keys = self.entries if preds is None else preds
        return {p: (self.entries[p].phrase, self.entries[p].negative_phrase) for p in keys}

    def bind(self, f: Formula) -> Formula:
        return rename_predicates(f, self.binding)


def _entry_for(predicate: str) -> LexiconEntry:
    for e in predicate_pool():
        if e.name == predicate:
            return LexiconEntry(predicate, e.positive, e.negative)
    pos, neg = default_phrases(predicate)
    return LexiconEntry(predicate, pos, neg)


def normalize_predicate(value: object) -> str:
    text = str(value).strip().lower()
    return re.sub(r"[\s\-]+", "_", text)


# ----------------------------------------------------------------------- qc

_SUFFIXES = ("ing", "ed", "es", "s", "ly")


def stem(word: str) -> str:
    word = word.lower()
    for suffix in _SUFFIXES:
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            word = word[: -len(suffix)]
            break
    if word.endswith("e") and len(word) > 3:
        word = word[:-1]
    if word.endswith("y"):
        word = word[:-1] + "i"
    return word


def qc_translation(symbolic: Formula, text: str) -> bool:
    """Every constant name and every predicate token occurs in ``text``.

    Matching is case-insensitive on lightly stemmed words, so
    ``dance_skills`` is found in both "has good dance skills" and
    "skilled at dancing".
    """
    words = {stem(w) for w in re.findall(r"[a-z]+", text.lower())}
    for name in constants(symbolic):
        if stem(name) not in words:
            return False
    for pred in predicates(symbolic):
        if not all(stem(t) in words for t in pred.split("_") if t):
            return False
    return True


# ------------------------------------------------------------------- rules


@dataclass(frozen=True)
class RuleRendering:
    rule: Formula  # quantified form (universal, or existential as generated)
    subject: str
    universal_text: str
    specific_text: str
    chosen: str = SPECIFIC
    commonsense_ok: bool = False

    @property
    def formula(self) -> Formula:
        if self.chosen == SPECIFIC and isinstance(self.rule, ForAll):
            return instantiate(self.rule, self.subject)
        return self.rule

    @property
    def text(self) -> str:
        return self.specific_text if self.chosen == SPECIFIC else self.universal_text


def _reference_block(lexicon: Lexicon, preds: Iterable[str]) -> str:
    preds = sorted(preds)
    lines = [", ".join(preds) if preds else "none"]
    for f, text in lexicon.references:
        if predicates(f) & set(preds):
            lines.append(f"{format_unicode(f)}: {text}")
    return "\n".join(lines)


def instantiate_predicates(
    rule: Formula,
    story: StoryContext,
    lexicon: Lexicon,
    backend: Backend,
    key: str = "",
    retries: int = 2,
) -> tuple[Formula, list[LexiconEntry], RuleRendering]:
    """Bind the rule's open placeholders and translate it.

    ``rule`` is ground on one subject (or existential).  Placeholders the
    lexicon already knows are substituted first and offered as references;
    the rest are requested from the backend.  New entries are added to
    ``lexicon``.
    """
    partial = lexicon.bind(rule)
    open_slots = sorted((p for p in predicates(partial) if is_placeholder(p)), key=_placeholder_key)
    if isinstance(partial, Exists):
        subject = story.subject
        expression = partial
    else:
        names = sorted(constants(partial))
        if len(names) != 1:
            raise ValueError(f"rule must mention exactly one subject: {format_formula(rule)}")
        subject = names[0]
        expression = generalize(partial, subject, "x")
    known = [p for p in predicates(partial) if not is_placeholder(p)]
    forbidden = lexicon.forbidden()
    keys = [*open_slots, "universal_rule", "specific_rule"]
    messages = fill_prompt("translate", {
        "STORY": story.story,
        "REFERENCE": _reference_block(lexicon, known),
        "FORBIDDEN": repr(forbidden),
        "EXPRESSION": format_unicode(expression),
        "KEYS": repr(keys),
        "CATEGORY": f"{story.category}. The specific rule is about {subject}",
    })
    ctx = {
        "key": key,
        "expression": format_formula(expression),
        "placeholders": open_slots,
        "forbidden": forbidden,
        "phrases": lexicon.phrases(known),
        "subject": subject,
        "category": story.category,
    }
    problem = "no reply"
    for _ in range(retries):
        reply = request_json(backend, "instantiate", messages, TRANSLATE_TEMPERATURE, ctx, keys=keys)
        chosen = {p: normalize_predicate(reply[p]) for p in open_slots}
        values = list(chosen.values())
        bad = [v for v in values if not PREDICATE_RE.match(v) or v in forbidden or is_placeholder(v)]
        if bad or len(set(values)) != len(values):
            problem = f"forbidden or invalid predicates {bad or values}"
            continue
        entries = [_entry_for(v) for v in values]
        used = {e.phrase for e in lexicon.entries.values()}
        if len({e.phrase for e in entries}) != len(entries) or any(e.phrase in used for e in entries):
            problem = "duplicate phrase"
            continue
        universal = rename_predicates(expression, chosen)
        specific = universal if isinstance(universal, Exists) else instantiate(universal, subject)
        utext = str(reply["universal_rule"]).strip()
        stext = str(reply["specific_rule"]).strip()
        if not qc_translation(universal, utext) or not qc_translation(specific, stext):
            problem = "translation failed the entity check"
            continue
        for slot, entry in zip(open_slots, entries):
            lexicon.add(slot, entry)
        chosen_kind = EXISTENTIAL if isinstance(universal, Exists) else SPECIFIC
        rendering = RuleRendering(universal, subject, utext, stext, chosen_kind)
        return rendering.formula, entries, rendering
    if problem == "translation failed the entity check":
        raise QcError(f"{format_formula(rule)}: {problem}")
    raise ForbiddenPredicate(f"{format_formula(rule)}: {problem}")


def _as_bool(value: object) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("true", "yes", "1")


def select_rule_version(rendering: RuleRendering, backend: Backend, category: str = "human") -> RuleRendering:
    """Keep the universal version only if the backend finds it plausible."""
    if rendering.chosen == EXISTENTIAL:
        return rendering
    messages = fill_prompt("judge", {"RULE": rendering.universal_text, "CATEGORY": category})
    ctx = {"expression": format_formula(rendering.rule), "text": rendering.universal_text}
    try:
        reply = request_json(backend, "judge", messages, TRANSLATE_TEMPERATURE, ctx, keys=("commonsense",))
        ok = _as_bool(reply["commonsense"])
    except BackendError:
        ok = False
    return replace(rendering, commonsense_ok=ok, chosen=UNIVERSAL if ok else SPECIFIC)


# ------------------------------------------------------------------- facts


def translate_fact(fact: Formula, lexicon: Lexicon, backend: Backend, retries: int = 3) -> str:
    atom = fact.arg if isinstance(fact, Not) else fact
    if not isinstance(atom, Atom):
        raise ValueError(f"not a ground literal: {format_formula(fact)}")
    if atom.predicate not in lexicon.entries:
        raise KeyError(f"predicate {atom.predicate} is not in the lexicon")
    refs = "\n".join(f"{format_unicode(f)}: {t}" for f, t in lexicon.references[-6:]) or "none"
    messages = fill_prompt("fact", {"REFERENCE": refs, "FACT": format_unicode(fact)})
    ctx = {"fact": format_formula(fact), "phrases": lexicon.phrases([atom.predicate])}
    for _ in range(retries):
        reply = request_json(backend, "fact", messages, TRANSLATE_TEMPERATURE, ctx, keys=("text",))
        text = str(reply["text"]).strip()
        negated = bool(re.search(r"\bnot\b|n't\b", text.lower()))
        if qc_translation(fact, text) and negated == isinstance(fact, Not):
            return text
    raise QcError(f"fact {format_formula(fact)} failed quality control")


# ---------------------------------------------------------------- instance


@dataclass
class Realization:
    """Everything needed to turn skeleton formulas into final premises."""

    story: StoryContext
    lexicon: Lexicon
    backend: Backend
    renderings: dict[Formula, RuleRendering] = field(default_factory=dict)
    texts: dict[Formula, str] = field(default_factory=dict)
    spares: list[LexiconEntry] = field(default_factory=list)
    skeleton_subject: str = "S"

    @property
    def subject(self) -> str:
        return self.story.subject

    def _plain(self, f: Formula) -> Formula:
        f = self.lexicon.bind(f)
        if self.skeleton_subject == self.subject:
            return f
        src, dst = Const(self.skeleton_subject), Const(self.subject)
        return map_atoms(f, lambda a: Atom(a.predicate, dst) if a.term == src else a)

    def bind(self, f: Formula) -> Formula:
        """Skeleton formula -> realized formula (rules in their chosen form)."""
        if f in self.renderings:
            return self.renderings[f].formula
        return self._plain(f)

    def text(self, realized: Formula) -> str:
        if realized not in self.texts:
            self.texts[realized] = translate_fact(realized, self.lexicon, self.backend)
        return self.texts[realized]

    def spare_atoms(self) -> list[Formula]:
        return [Atom(e.predicate, Const(self.subject)) for e in self.spares]

    def phrase_table(self) -> dict[str, list[str]]:
        entries = {**self.lexicon.entries, **{e.predicate: e for e in self.spares}}
        return {p: [e.phrase, e.negative_phrase] for p, e in sorted(entries.items())}


def realize(
    rules: Iterable[tuple[Formula, str]],
    story: StoryContext,
    backend: Backend,
    key: str = "",
    skeleton_subject: str = "S",
    spare_count: int = 3,
) -> Realization:
    """Instantiate and translate skeleton rules.

    ``rules`` pairs each skeleton rule with its kind (``core``, ``type1`` or
    ``type2``).  Rules about distraction subjects always keep the specific
    version; the others go through :func:`select_rule_version`.
    """
    lexicon = Lexicon()
    out = Realization(story, lexicon, backend, skeleton_subject=skeleton_subject)
    for rule, kind in rules:
        named = out._plain(rule)
        _, _, rendering = instantiate_predicates(named, story, lexicon, backend, key)
        if kind != "type1":
            rendering = select_rule_version(rendering, backend, story.category)
        out.renderings[rule] = rendering
        out.texts[rendering.formula] = rendering.text
        lexicon.references.append((rendering.formula, rendering.text))
    free = [e for e in predicate_pool() if e.name not in lexicon.forbidden()
            and all(e.positive != x.phrase for x in lexicon.entries.values())]
    random.Random(f"spares:{key}").shuffle(free)
    out.spares = [LexiconEntry(e.name, e.positive, e.negative) for e in free[:spare_count]]
    for e in out.spares:
        lexicon.entries.setdefault(e.predicate, e)
    return out
