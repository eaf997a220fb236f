"""End-to-end instance generation: story, skeleton, translation, assembly, verification."""

from __future__ import annotations

import logging
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

from . import GENERATOR_VERSION
from .dataset import ProblemInstance, VerificationFailed, assemble_instance
from .fol import format_formula
from .nl.assets import NameEntry, load_keywords, load_names
from .nl.backends import Backend
from .nl.realize import UNIVERSAL, ForbiddenPredicate, QcError, generate_story, realize
from .skeleton import (
    MODES,
    GenerationError,
    GenerationExhausted,
    SkeletonConfig,
    assemble_premises,
    build_skeleton,
    emit_proof_chain,
    sample_distractions,
)

log = logging.getLogger(__name__)

# failures that discard one attempt and retry with a derived seed
RECOVERABLE = (GenerationError, VerificationFailed, QcError, ForbiddenPredicate)


@dataclass
class GenerationConfig:
    seed: int = 0
    count: int = 500  # per tier
    modes: tuple[str, ...] = MODES
    skeleton: SkeletonConfig = field(default_factory=SkeletonConfig)
    max_attempts: int = 20
    spare_count: int = 3
    names_path: str | None = None
    keywords_path: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modes"] = list(self.modes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationConfig":
        d = dict(d)
        skel = SkeletonConfig(**d.pop("skeleton", {}))
        if "modes" in d:
            d["modes"] = tuple(d["modes"])
        return cls(skeleton=skel, **d)


@dataclass
class GenerationStats:
    produced: Counter = field(default_factory=Counter)
    attempts: Counter = field(default_factory=Counter)
    rejections: Counter = field(default_factory=Counter)

    def merge(self, other: "GenerationStats") -> None:
        self.produced.update(other.produced)
        self.attempts.update(other.attempts)
        self.rejections.update(other.rejections)

    def to_dict(self) -> dict:
        return {
            "produced": dict(sorted(self.produced.items())),
            "attempts": dict(sorted(self.attempts.items())),
            "rejections": dict(sorted(self.rejections.items())),
        }


def instance_seed(seed: int, mode: str, index: int) -> int:
    return random.Random(f"{seed}:{mode}:{index}").getrandbits(64)


def instance_id(mode: str, index: int) -> str:
    return f"{mode}-{index:05d}"


def _attempt(
    mode: str,
    iid: str,
    seed: int,
    config: GenerationConfig,
    backend: Backend,
    names: Sequence[NameEntry],
    keywords: Sequence[str],
) -> ProblemInstance:
    rng = random.Random(seed)
    primary = rng.choice(list(names))
    keyword = rng.choice(list(keywords))
    peers = [n.name for n in names if n.category == primary.category and n.name != primary.name]
    others = rng.sample(peers, min(2, len(peers)))

    tree = build_skeleton(mode, rng.getrandbits(64), config.skeleton)
    distractions = sample_distractions(tree, rng, config.skeleton, others)
    story = generate_story(primary.name, keyword, backend, primary.category)
    rules = [(r, "core") for r in tree.rules()]
    rules += [(r, item.kind) for item in distractions.items for r in item.rules]
    real = realize(rules, story, backend, key=str(seed), skeleton_subject=tree.subject,
                   spare_count=config.spare_count)

    assembly = assemble_premises(tree, distractions, rng, bind=real.bind)
    steps = emit_proof_chain(tree, real.bind)
    n1, n2 = distractions.counts
    versions = Counter(r.chosen for r in real.renderings.values())
    meta = {
        "difficulty": mode,
        "n1": n1,
        "n2": n2,
        "seed": seed,
        "subject": primary.name,
        "category": story.category,
        "keyword": keyword,
        "story": story.story,
        "generator_version": GENERATOR_VERSION,
        "source": "generated",
        "templates": [e.template_id for e in tree.expansions],
        "backward_steps": tree.backward_steps,
        "negated_goal": assembly.negated_goal,
        "universal_rules": versions.get(UNIVERSAL, 0),
        "lexicon": real.phrase_table(),
        "spare_statements": [
            {"fol": format_formula(a), "nl": real.text(a)} for a in real.spare_atoms()
        ],
    }
    return assemble_instance(
        iid, assembly.premises, assembly.roles, assembly.goal, assembly.label, steps, real.text, meta
    )


def generate_instance(
    mode: str,
    index: int,
    config: GenerationConfig,
    backend: Backend,
    names: Sequence[NameEntry] | None = None,
    keywords: Sequence[str] | None = None,
) -> tuple[ProblemInstance, GenerationStats]:
    """One verified instance; rejected attempts are retried with derived seeds."""
    names = names or load_names(config.names_path)
    keywords = keywords or load_keywords(config.keywords_path)
    stats = GenerationStats()
    base = instance_seed(config.seed, mode, index)
    iid = instance_id(mode, index)
    for attempt in range(config.max_attempts):
        seed = base if attempt == 0 else random.Random(f"{base}:{attempt}").getrandbits(64)
        stats.attempts[mode] += 1
        try:
            inst = _attempt(mode, iid, seed, config, backend, names, keywords)
        except RECOVERABLE as exc:
            stats.rejections[type(exc).__name__] += 1
            log.debug("%s attempt %d rejected: %s", iid, attempt, exc)
            continue
        inst.metadata["attempt"] = attempt
        stats.produced[mode] += 1
        return inst, stats
    raise GenerationExhausted(f"{iid}: no verified instance after {config.max_attempts} attempts")


def generate_dataset(
    config: GenerationConfig,
    backend: Backend,
    workers: int = 1,
) -> tuple[list[ProblemInstance], GenerationStats]:
    names = load_names(config.names_path)
    keywords = load_keywords(config.keywords_path)
    jobs = [(mode, i) for mode in config.modes for i in range(config.count)]

    def run(job):
        return generate_instance(job[0], job[1], config, backend, names, keywords)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    stats = GenerationStats()
    for _, s in results:
        stats.merge(s)
    return [inst for inst, _ in results], stats
