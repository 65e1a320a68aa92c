"""Completion backends behind one small interface.

ScriptedGenerator replays canned completions keyed by the SHA-256 of the
prompt, which makes whole pipeline runs reproducible without any model.
HttpGenerator talks to a chat-completions-style endpoint. RecordingGenerator
wraps a deterministic candidate source and writes out the consumed
completions as a scripted fixture.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import requests

GEN_TOKEN_ENV = "ASPLOOP_GEN_TOKEN"


class GeneratorError(Exception):
    pass


class GeneratorTransportError(GeneratorError):
    """Network-level failure; the caller may retry."""


class FixtureExhausted(GeneratorError):
    pass


@dataclass(frozen=True)
class RawCompletion:
    text: str
    token_count: int = 0


class Generator(Protocol):
    name: str

    def complete(self, prompt: str, n: int, temperature: float) -> list[RawCompletion]: ...


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ScriptedGenerator:
    """Replay completions from a JSONL fixture.

    Each line holds {"prompt_sha256", "completions", "token_counts"}; lines
    sharing a hash extend one queue in file order. Successive calls for the
    same prompt consume successive slices of its queue, so a re-generation
    pass naturally receives fresh completions.
    """

    name = "scripted"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._queues: dict[str, list[RawCompletion]] = {}
        self._cursors: dict[str, int] = {}
        with open(self.path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise GeneratorError(f"{self.path}:{lineno}: bad fixture line: {exc}") from exc
                completions = row["completions"]
                counts = row.get("token_counts") or [0] * len(completions)
                if len(counts) != len(completions):
                    raise GeneratorError(
                        f"{self.path}:{lineno}: token_counts length differs from completions"
                    )
                queue = self._queues.setdefault(row["prompt_sha256"], [])
                queue.extend(
                    RawCompletion(text, int(count))
                    for text, count in zip(completions, counts)
                )

    def complete(self, prompt: str, n: int, temperature: float) -> list[RawCompletion]:
        digest = prompt_sha256(prompt)
        queue = self._queues.get(digest)
        if queue is None:
            raise FixtureExhausted(
                f"scripted backend has no completions for prompt hash {digest[:16]}"
            )
        cursor = self._cursors.get(digest, 0)
        if cursor + n > len(queue):
            raise FixtureExhausted(
                f"scripted backend exhausted for prompt hash {digest[:16]}: "
                f"{len(queue) - cursor} completions left, {n} requested"
            )
        self._cursors[digest] = cursor + n
        return queue[cursor : cursor + n]


class HttpGenerator:
    """Chat-completions client. Sends {model, messages, n, temperature} and
    reads choices[i].message.content. The endpoint reports one aggregate
    usage.completion_tokens figure; it is split evenly over the choices with
    the remainder on the first so the per-candidate totals stay exact.
    """

    name = "http"

    def __init__(self, url: str, model: str, timeout: float = 60.0, session=None):
        self.url = url
        self.model = model
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, prompt: str, n: int, temperature: float) -> list[RawCompletion]:
        headers = {}
        token = os.environ.get(GEN_TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "n": n,
            "temperature": temperature,
        }
        try:
            response = self._session.post(
                self.url, json=body, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise GeneratorTransportError(f"http backend: {exc}") from exc
        if response.status_code >= 500:
            raise GeneratorTransportError(f"http backend: status {response.status_code}")
        if response.status_code != 200:
            raise GeneratorError(f"http backend: status {response.status_code}")
        try:
            payload = response.json()
            choices = payload["choices"]
            texts = [choice["message"]["content"] for choice in choices]
        except (ValueError, KeyError, TypeError) as exc:
            raise GeneratorError(f"http backend: malformed response: {exc}") from exc
        total = 0
        usage = payload.get("usage")
        if isinstance(usage, dict):
            total = int(usage.get("completion_tokens") or 0)
        counts = _split_evenly(total, len(texts))
        return [RawCompletion(text, count) for text, count in zip(texts, counts)]


def _split_evenly(total: int, parts: int) -> list[int]:
    if parts == 0:
        return []
    base, remainder = divmod(total, parts)
    return [base + remainder] + [base] * (parts - 1)


CandidateFn = Callable[[str], list[tuple[str, int]]]


class RecordingGenerator:
    """Serve completions from a pure prompt -> candidates function while
    recording what each prompt consumed, for export as a scripted fixture.

    The source function must be deterministic and history-free so that
    recordings taken under different run configurations stay prefixes of
    one another and can be merged.
    """

    name = "recording"

    def __init__(self, candidate_fn: CandidateFn):
        self._fn = candidate_fn
        self._cursors: dict[str, int] = {}
        self._served: dict[str, list[tuple[str, int]]] = {}

    def complete(self, prompt: str, n: int, temperature: float) -> list[RawCompletion]:
        digest = prompt_sha256(prompt)
        pool = self._fn(prompt)
        cursor = self._cursors.get(digest, 0)
        if cursor + n > len(pool):
            raise FixtureExhausted(
                f"recording source exhausted for prompt hash {digest[:16]}: "
                f"{len(pool) - cursor} candidates left, {n} requested"
            )
        slice_ = pool[cursor : cursor + n]
        self._cursors[digest] = cursor + n
        served = self._served.setdefault(digest, [])
        served.extend(slice_)
        return [RawCompletion(text, count) for text, count in slice_]

    def recorded(self) -> dict[str, list[tuple[str, int]]]:
        return {digest: list(items) for digest, items in self._served.items()}


def merge_recordings(recordings: list[dict[str, list[tuple[str, int]]]]) -> dict:
    """Union per-hash queues, keeping the longest; shorter recordings must
    be prefixes of the kept one or the runs were not replaying the same
    candidate streams.
    """
    merged: dict[str, list[tuple[str, int]]] = {}
    for recording in recordings:
        for digest, items in recording.items():
            current = merged.get(digest)
            if current is None or len(items) > len(current):
                longer, shorter = items, current or []
            else:
                longer, shorter = current, items
            if longer[: len(shorter)] != shorter:
                raise ValueError(f"recordings diverge for prompt hash {digest[:16]}")
            merged[digest] = longer
    return merged


def write_fixture(recording: dict[str, list[tuple[str, int]]], path: str | Path) -> int:
    path = Path(path)
    rows = 0
    with open(path, "w", encoding="utf-8") as handle:
        for digest in sorted(recording):
            items = recording[digest]
            row = {
                "prompt_sha256": digest,
                "completions": [text for text, _ in items],
                "token_counts": [count for _, count in items],
            }
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
            rows += 1
    return rows
