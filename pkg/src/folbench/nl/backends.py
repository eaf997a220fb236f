"""Language-model backends.

Every backend answers ``complete(task, messages, temperature, context)``
with the assistant's reply text, which must contain a JSON object.  The
chat client only looks at ``messages``; the offline backend only looks at
``task`` and ``context``, so it can give the same kind of answer without a
model.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Any, Protocol, Sequence

import httpx

from ..fol import Formula, parse_formula, rename_predicates
from . import assets
from .render import commonsense_heuristic, render_literal, render_rule

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "FOLBENCH_API_KEY"
DEFAULT_ENDPOINT_ENV = "FOLBENCH_ENDPOINT"

Messages = Sequence[dict[str, str]]


class BackendError(Exception):
    pass


class BackendConfigError(BackendError):
    """Missing endpoint or credentials; raised before any request is made."""


class SchemaError(BackendError):
    """A reply parsed as JSON but lacks required keys."""


class Backend(Protocol):
    name: str

    def complete(self, task: str, messages: Messages, temperature: float, context: dict) -> str: ...


def first_json_object(text: str) -> dict | None:
    """The first JSON object embedded in ``text``, or None."""
    decoder = json.JSONDecoder()
    start = text.find("{")
    while start != -1:
        try:
            obj, _ = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            start = text.find("{", start + 1)
            continue
        if isinstance(obj, dict):
            return obj
        start = text.find("{", start + 1)
    return None


def request_json(
    backend: Backend,
    task: str,
    messages: Messages,
    temperature: float,
    context: dict,
    keys: Sequence[str] = (),
    retries: int = 3,
) -> dict:
    """Call the backend until it returns a JSON object with ``keys``."""
    missing: list[str] = []
    for attempt in range(retries):
        raw = backend.complete(task, messages, temperature, context)
        obj = first_json_object(raw or "")
        if obj is None:
            log.debug("%s: malformed reply on attempt %d", task, attempt + 1)
            continue
        missing = [k for k in keys if k not in obj]
        if not missing:
            return obj
    if missing:
        raise SchemaError(f"{task}: reply is missing keys {missing}")
    raise BackendError(f"{task}: no JSON object after {retries} attempts")


# ------------------------------------------------------------------ offline


class OfflineBackend:
    """Deterministic template realizer with the same reply contract."""

    name = "offline"

    def __init__(self, seed: int = 0, pool: Sequence[assets.PredicateEntry] | None = None):
        self.seed = seed
        self.pool = list(pool) if pool is not None else assets.predicate_pool()
        self._by_name = {e.name: e for e in self.pool}

    def _rng(self, *parts: Any) -> random.Random:
        return random.Random(":".join(str(p) for p in (self.seed, *parts)))

    def complete(self, task: str, messages: Messages, temperature: float, context: dict) -> str:
        handler = getattr(self, f"_task_{task}", None)
        if handler is None:
            raise BackendError(f"offline backend has no task {task!r}")
        return json.dumps(handler(context))

    def _task_story(self, ctx: dict) -> dict:
        name, keyword = ctx["name"], ctx["keyword"]
        category = ctx.get("category") or "human"
        rng = self._rng("story", name, keyword)
        noun = "person" if category == "human" else category
        parts = (assets.STORY_OPENINGS, assets.STORY_MIDDLES, assets.STORY_CLOSINGS)
        story = " ".join(rng.choice(p).format(name=name, keyword=keyword, category=noun) for p in parts)
        return {"category": category, "story": story}

    def _task_instantiate(self, ctx: dict) -> dict:
        forbidden = set(ctx.get("forbidden", ()))
        rng = self._rng("instantiate", ctx.get("key", ""), ctx["expression"])
        free = [e for e in self.pool if e.name not in forbidden]
        rng.shuffle(free)
        placeholders = list(ctx.get("placeholders", ()))
        if len(free) < len(placeholders):
            raise BackendError("predicate pool exhausted")
        chosen = {p: free[i].name for i, p in enumerate(placeholders)}
        phrases = dict(ctx.get("phrases", {}))
        for p, pred in chosen.items():
            e = self._by_name[pred]
            phrases[pred] = (e.positive, e.negative)
        rule = parse_formula(ctx["expression"])
        bound = rename_predicates(rule, chosen)
        subject = ctx["subject"]
        category = ctx.get("category", "human")
        reply: dict[str, Any] = dict(chosen)
        reply["universal_rule"] = render_rule(bound, phrases, category, universal=True, subject=subject)
        reply["specific_rule"] = render_rule(bound, phrases, category, universal=False, subject=subject)
        return reply

    def _task_judge(self, ctx: dict) -> dict:
        return {"commonsense": commonsense_heuristic(parse_formula(ctx["expression"]))}

    def _task_fact(self, ctx: dict) -> dict:
        fact: Formula = parse_formula(ctx["fact"])
        return {"text": render_literal(fact, ctx["phrases"]) + "."}


# --------------------------------------------------------------------- chat


class TokenBucket:
    def __init__(self, rate: float, capacity: float | None = None):
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self._tokens = self.capacity
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.rate <= 0:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            time.sleep(wait)


@dataclass
class RetryPolicy:
    attempts: int = 3
    backoff: float = 1.0
    max_backoff: float = 20.0


class ChatCompletionClient:
    """OpenAI-compatible ``/chat/completions`` client."""

    name = "chat"

    def __init__(
        self,
        model: str,
        endpoint: str | None = None,
        api_key: str | None = None,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 60.0,
        retry: RetryPolicy | None = None,
        rate_per_second: float = 0.0,
        max_in_flight: int = 8,
        transport: httpx.BaseTransport | None = None,
    ):
        endpoint = endpoint or os.environ.get(DEFAULT_ENDPOINT_ENV)
        if not endpoint:
            raise BackendConfigError("no endpoint configured")
        api_key = api_key or os.environ.get(api_key_env)
        if not api_key:
            raise BackendConfigError(f"API key variable {api_key_env} is not set")
        self.model = model
        self.endpoint = endpoint.rstrip("/")
        self.retry = retry or RetryPolicy()
        self._bucket = TokenBucket(rate_per_second)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(
            timeout=timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {api_key}"},
        )

    def close(self) -> None:
        self._client.close()

    def complete(self, task: str, messages: Messages, temperature: float, context: dict) -> str:
        body = {"model": self.model, "messages": list(messages), "temperature": temperature}
        delay = self.retry.backoff
        last: Exception | None = None
        for attempt in range(self.retry.attempts):
            self._bucket.acquire()
            with self._slots:
                try:
                    resp = self._client.post(f"{self.endpoint}/chat/completions", json=body)
                except httpx.HTTPError as exc:
                    last = exc
                else:
                    if resp.status_code == 200:
                        try:
                            return resp.json()["choices"][0]["message"]["content"] or ""
                        except (ValueError, KeyError, IndexError, TypeError) as exc:
                            raise BackendError(f"unexpected response body: {exc}") from exc
                    if resp.status_code not in (408, 409, 429) and resp.status_code < 500:
                        raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                    last = BackendError(f"HTTP {resp.status_code}")
            if attempt + 1 < self.retry.attempts:
                time.sleep(min(delay, self.retry.max_backoff))
                delay *= 2
        raise BackendError(f"{task}: request failed after {self.retry.attempts} attempts: {last}")


def make_backend(desc: dict | None, offline: bool = False, seed: int = 0) -> Backend:
    """Build a backend from a config section like ``{"model": ..., "endpoint": ...}``."""
    desc = dict(desc or {})
    if offline or desc.get("kind", "offline") == "offline":
        return OfflineBackend(seed=seed)
    return ChatCompletionClient(
        model=desc["model"],
        endpoint=desc.get("endpoint"),
        api_key_env=desc.get("api_key_env", DEFAULT_API_KEY_ENV),
        timeout=float(desc.get("timeout", 60.0)),
        retry=RetryPolicy(int(desc.get("retries", 3))),
        rate_per_second=float(desc.get("rate_per_second", 0.0)),
        max_in_flight=int(desc.get("max_in_flight", 8)),
    )
