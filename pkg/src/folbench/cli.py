"""Command-line entry point: ``folbench <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from pathlib import Path
from typing import Any, Sequence

from .dataset import (
    SchemaError,
    augment_step_decomposition,
    augment_uncertain_goal,
    check_instance,
    corrupt_remove_universal,
    ProofRecord,
    ReplacementFailed,
    question_for,
    read_dataset,
    write_dataset,
)
from .engine import export_prover9
from .evaluate import (
    ChatModel,
    OracleModel,
    PromptStrategy,
    RandomModel,
    format_ablation_table,
    format_results_table,
    load_items,
    run_ablation,
    run_eval,
    write_records,
)
from .fol import Atom, Exists, ForAll, Not, instantiate, parse_formula
from .nl.backends import BackendConfigError, BackendError, make_backend
from .nl.realize import Lexicon, LexiconEntry, StoryContext, instantiate_predicates, translate_fact
from .pipeline import GenerationConfig, generate_dataset
from .skeleton import MODES, GenerationError, SkeletonConfig

log = logging.getLogger("folbench")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_BACKEND = 0, 1, 2, 3
CONFIG_SNAPSHOT = "config.json"


class ConfigError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object with per-command sections")
    return data


def _settings(args: argparse.Namespace, section: str, defaults: dict) -> dict:
    """defaults <- config file (global, then section) <- explicit flags."""
    cfg = _load_config(args.config)
    out = dict(defaults)
    for part in (cfg.get("global", {}), cfg.get(section, {})):
        unknown = set(part) - set(defaults)
        if unknown and part is cfg.get(section):
            raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")
        out.update({k: v for k, v in part.items() if k in defaults})
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _snapshot(outdir: Path, section: str, settings: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / CONFIG_SNAPSHOT).write_text(json.dumps({section: settings}, indent=2, sort_keys=True) + "\n")


def _backend(settings: dict):
    desc = settings.get("backend") or {}
    if not settings.get("offline") and not desc.get("model"):
        raise ConfigError("no backend model configured; pass --model-name/--endpoint or --offline")
    kind = "offline" if settings.get("offline") else "chat"
    return make_backend({**desc, "kind": kind}, offline=kind == "offline", seed=settings["seed"])


def _backend_spec(args) -> dict | None:
    desc = {k: getattr(args, k) for k in ("model_name", "endpoint", "api_key_env") if getattr(args, k, None)}
    if not desc:
        return None
    if "model_name" in desc:
        desc["model"] = desc.pop("model_name")
    return desc


# ------------------------------------------------------------- generate


GENERATE_DEFAULTS: dict[str, Any] = {
    "mode": "all",
    "count": 500,
    "seed": 0,
    "out": "data",
    "offline": False,
    "workers": os.cpu_count() or 1,
    "depth_min": None,
    "depth_max": None,
    "n1_max": 3,
    "n2_max": 2,
    "backward_ratio": 0.4,
    "exists_ratio": 0.15,
    "resample_limit": 100,
    "max_attempts": 20,
    "names": None,
    "keywords": None,
    "backend": None,
}


def cmd_generate(args) -> int:
    args.backend = _backend_spec(args)
    s = _settings(args, "generate", GENERATE_DEFAULTS)
    modes = MODES if s["mode"] == "all" else (s["mode"],)
    if any(m not in MODES for m in modes):
        raise ConfigError(f"unknown mode {s['mode']!r}")
    skel = SkeletonConfig(s["depth_min"], s["depth_max"], s["n1_max"], s["n2_max"],
                          s["backward_ratio"], s["exists_ratio"], s["resample_limit"])
    for m in modes:
        try:
            skel.depth_range(m)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    config = GenerationConfig(seed=s["seed"], count=s["count"], modes=tuple(modes), skeleton=skel,
                              max_attempts=s["max_attempts"], names_path=s["names"],
                              keywords_path=s["keywords"])
    backend = _backend(s)
    instances, stats = generate_dataset(config, backend, workers=int(s["workers"]))
    out = Path(s["out"])
    manifest = write_dataset(instances, out, config=s, seeds={"seed": s["seed"]},
                             extra={"rejections": stats.to_dict()})
    _snapshot(out, "generate", s)
    for tier, n in manifest["counts"].items():
        print(f"{tier}: {n} instances")
    print(f"attempts: {sum(stats.attempts.values())}, rejections: {dict(stats.rejections) or 'none'}")
    return EXIT_OK


# ------------------------------------------------------------------ verify


def cmd_verify(args) -> int:
    try:
        instances = read_dataset(args.path)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    failures = []
    for inst in instances:
        problems = check_instance(inst, qc=not args.no_qc)
        if problems:
            failures.append((inst.id, problems))
    print(f"{len(instances) - len(failures)} passed, {len(failures)} failed")
    if failures:
        iid, problems = failures[0]
        print(f"first failure: {iid}: {'; '.join(problems)}")
        return EXIT_VERIFY
    return EXIT_OK


# --------------------------------------------------------------- translate


def _retranslate(inst, backend):
    meta = inst.metadata
    if "lexicon" not in meta:
        raise SchemaError(f"{inst.id}: no lexicon in metadata")
    lexicon = Lexicon()
    for pred, (pos, neg) in meta["lexicon"].items():
        lexicon.entries[pred] = LexiconEntry(pred, pos, neg)
    subject = meta["subject"]
    story = StoryContext(subject, meta.get("keyword", ""), meta.get("category", "human"), meta.get("story", ""))
    cache: dict = {}

    def text(f):
        if f in cache:
            return cache[f]
        if isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.arg, Atom)):
            t = translate_fact(f, lexicon, backend)
        elif isinstance(f, ForAll):
            t = instantiate_predicates(instantiate(f, subject), story, lexicon, backend, inst.id)[2].universal_text
        elif isinstance(f, Exists):
            t = instantiate_predicates(f, story, lexicon, backend, inst.id)[2].universal_text
        else:
            t = instantiate_predicates(f, story, lexicon, backend, inst.id)[2].specific_text
        cache[f] = t
        lexicon.references.append((f, t))
        return t

    inst.context = [text(f) for f in inst.context_fol]
    inst.proof = [ProofRecord(p.step, tuple(text(f) for f in p.step.step_facts), text(p.step.step_rule),
                              text(p.step.conclusion)) for p in inst.proof]
    meta["statements"] = {k: text(parse_formula(k)) for k in meta.get("statements", {})}
    meta["spare_statements"] = [{"fol": s["fol"], "nl": text(parse_formula(s["fol"]))}
                                for s in meta.get("spare_statements", [])]
    inst.question = question_for(text(inst.goal_fol))
    return inst


def cmd_translate(args) -> int:
    s = {"seed": args.seed or 0, "offline": args.offline, "backend": _backend_spec(args)}
    backend = _backend(s)
    instances = [_retranslate(i, backend) for i in read_dataset(args.path)]
    write_dataset(instances, args.out, config=s)
    _snapshot(Path(args.out), "translate", s)
    print(f"translated {len(instances)} instances")
    return EXIT_OK


# ----------------------------------------------------------- transforms


def cmd_augment(args) -> int:
    rng = random.Random(args.seed or 0)
    out = []
    skipped = 0
    for inst in read_dataset(args.path):
        if args.kind in ("steps", "both") and inst.proof:
            out.extend(augment_step_decomposition(inst))
        if args.kind in ("uncertain", "both"):
            try:
                out.append(augment_uncertain_goal(inst, rng))
            except ReplacementFailed:
                skipped += 1
    write_dataset(out, args.out, config=vars_of(args))
    _snapshot(Path(args.out), "augment", vars_of(args))
    print(f"wrote {len(out)} augmented instances ({skipped} without a fresh predicate)")
    return EXIT_OK


def cmd_corrupt(args) -> int:
    instances = read_dataset(args.path)
    rng = random.Random(args.seed or 0)
    chosen = sorted(rng.sample(range(len(instances)), min(args.count, len(instances))))
    corrupted = [corrupt_remove_universal(instances[i]) for i in chosen]
    moved = sum(c.answer == "C" and c.metadata["original_answer"] != "C" for c in corrupted)
    flips = sum({c.answer, c.metadata["original_answer"]} == {"A", "B"} for c in corrupted)
    write_dataset(corrupted, args.out, config=vars_of(args))
    _snapshot(Path(args.out), "corrupt", vars_of(args))
    print(f"corrupted {len(corrupted)} instances; {moved} moved to Uncertain "
          f"({100.0 * moved / max(1, len(corrupted)):.2f}%); {flips} true/false flips")
    return EXIT_VERIFY if flips else EXIT_OK


def cmd_export(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    instances = read_dataset(args.path)
    for inst in instances:
        (outdir / f"{inst.id}.p9").write_text(export_prover9(inst.premises, inst.goal_fol))
    print(f"exported {len(instances)} files to {outdir}")
    return EXIT_OK


# -------------------------------------------------------------------- eval


EVAL_DEFAULTS: dict[str, Any] = {
    "model": "oracle",
    "strategy": "standard",
    "shots": 2,
    "seed": 0,
    "workers": 1,
    "out": None,
    "ablation": False,
    "backend": None,
}


def cmd_eval(args) -> int:
    args.backend = _backend_spec(args)
    s = _settings(args, "eval", EVAL_DEFAULTS)
    if s["model"] == "oracle":
        model = OracleModel()
    elif s["model"] == "random":
        model = RandomModel(s["seed"])
    elif s["model"] == "chat":
        model = ChatModel(_backend({**s, "offline": False}))
    else:
        raise ConfigError(f"unknown model {s['model']!r}")
    strategy = PromptStrategy(s["strategy"], int(s["shots"]))
    name = Path(args.path).name
    out = Path(s["out"]) if s["out"] else None
    if s["ablation"]:
        rows = run_ablation(read_dataset(args.path), model, strategy, name, int(s["workers"]))
        print(format_ablation_table(rows), end="")
        if out:
            _snapshot(out, "eval", s)
            (out / "ablation.json").write_text(
                json.dumps([r.report() for *_, r in rows], indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    run = run_eval(load_items(args.path), model, strategy, name, int(s["workers"]))
    print(format_results_table([run.report()]), end="")
    print(f"overall {run.accuracy():.2f}; unparseable {run.unparseable_count}")
    if out:
        _snapshot(out, "eval", s)
        (out / "report.json").write_text(run.report_json())
        write_records(run, out / "records.jsonl")
    return EXIT_OK


def vars_of(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",) and not callable(v)}


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config with per-command sections")
    common.add_argument("--seed", type=int)
    common.add_argument("--log-level", default="WARNING")
    backend = argparse.ArgumentParser(add_help=False)
    backend.add_argument("--offline", action="store_true", default=None,
                         help="use the deterministic offline backend")
    backend.add_argument("--model-name", help="chat-completion model id")
    backend.add_argument("--endpoint", help="base URL of an OpenAI-compatible API")
    backend.add_argument("--api-key-env", help="environment variable holding the API key")

    p = argparse.ArgumentParser(prog="folbench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common, backend], help="generate a verified dataset")
    g.add_argument("--mode", choices=[*MODES, "all"])
    g.add_argument("--count", type=int, help="instances per tier")
    g.add_argument("--out")
    g.add_argument("--workers", type=int)
    g.add_argument("--depth-min", type=int)
    g.add_argument("--depth-max", type=int)
    g.add_argument("--n1-max", type=int)
    g.add_argument("--n2-max", type=int)
    g.add_argument("--backward-ratio", type=float)
    g.add_argument("--exists-ratio", type=float)
    g.add_argument("--resample-limit", type=int)
    g.add_argument("--max-attempts", type=int)
    g.add_argument("--names", help="name pool (JSON or name,category lines)")
    g.add_argument("--keywords", help="newline-delimited keyword pool")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("translate", parents=[common, backend], help="re-render text for a dataset")
    t.add_argument("path")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_translate)

    v = sub.add_parser("verify", parents=[common], help="re-check every instance")
    v.add_argument("path")
    v.add_argument("--no-qc", action="store_true", help="skip the translation check")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("augment", parents=[common], help="step-decomposition / uncertain-goal augmentation")
    a.add_argument("path")
    a.add_argument("--out", required=True)
    a.add_argument("--kind", choices=["steps", "uncertain", "both"], default="both")
    a.set_defaults(func=cmd_augment)

    c = sub.add_parser("corrupt", parents=[common], help="remove universal rules from sampled instances")
    c.add_argument("path")
    c.add_argument("--out", required=True)
    c.add_argument("--count", type=int, default=60)
    c.set_defaults(func=cmd_corrupt)

    x = sub.add_parser("export", parents=[common], help="write one Prover9 file per instance")
    x.add_argument("path")
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_export)

    e = sub.add_parser("eval", parents=[common, backend], help="evaluate a model on a dataset")
    e.add_argument("path")
    e.add_argument("--model", choices=["oracle", "random", "chat"])
    e.add_argument("--strategy", choices=["standard", "cot"])
    e.add_argument("--shots", type=int)
    e.add_argument("--workers", type=int)
    e.add_argument("--out")
    e.add_argument("--ablation", action="store_true", default=None)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, BackendConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (SchemaError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
