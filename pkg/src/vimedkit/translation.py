"""Translation backends and batch orchestration with checkpoint/resume.

Backends are interchangeable: a deterministic lexicon-substitution mock for
tests and offline runs, and an HTTP client speaking the JSON wire format
``{"texts": [...]} -> {"translations": [...]}`` with positional alignment.
Batch jobs checkpoint completions to an append-only JSON-lines file so an
interrupted run resumes without re-translating finished items.
"""

from __future__ import annotations

import json
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import httpx

AUTH_TOKEN_ENV = "VIMEDKIT_NMT_TOKEN"

_TOKEN_SPLIT = re.compile(r"(\s+)")


class TranslationError(RuntimeError):
    """A backend failed permanently for a batch of texts."""


class LexiconError(ValueError):
    """A lexicon file violates the single-token-per-side contract."""


def load_lexicon(path: str | Path) -> dict[str, str]:
    """Load a TSV token lexicon (``source<TAB>target``, one entry per line).

    Both sides must be single whitespace tokens; multi-token entries would
    break token-wise substitution and are rejected.
    """
    lexicon: dict[str, str] = {}
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(f"{path}:{lineno}: expected 2 columns")
            source, target = parts
            if len(source.split()) != 1 or len(target.split()) != 1:
                raise LexiconError(
                    f"{path}:{lineno}: lexicon entries must be single tokens"
                )
            lexicon[source] = target
    return lexicon


def mock_translate(lexicon: dict[str, str], text: str) -> str:
    """Token-wise substitution on whitespace tokens.

    Tokens absent from the lexicon pass through unchanged, and inter-token
    whitespace is preserved exactly, so an empty lexicon is the identity and
    a bijective lexicon round-trips.
    """
    parts = _TOKEN_SPLIT.split(text)
    return "".join(
        lexicon.get(part, part) if i % 2 == 0 else part
        for i, part in enumerate(parts)
    )


class MockLexiconBackend:
    """Deterministic stand-in for an NMT service; never fails."""

    kind = "mock_lexicon"

    def __init__(self, lexicon: dict[str, str] | None = None):
        self.lexicon = dict(lexicon or {})

    def translate(self, texts: Sequence[str]) -> list[str]:
        return [mock_translate(self.lexicon, text) for text in texts]


class HttpTranslatorBackend:
    """Client for an HTTP NMT service speaking the JSON texts/translations protocol.

    Failures are retried with exponential backoff and jitter up to the retry
    budget; ``retries=N`` means N retries after the first failure (N+1 total
    attempts). The auth token is read from ``VIMEDKIT_NMT_TOKEN`` unless
    passed explicitly.
    """

    kind = "http_service"

    def __init__(
        self,
        endpoint: str,
        *,
        timeout: float = 30.0,
        retries: int = 3,
        backoff_base: float = 0.5,
        auth_token: str | None = None,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff_base = backoff_base
        self.auth_token = (
            auth_token if auth_token is not None else os.environ.get(AUTH_TOKEN_ENV)
        )
        self._client = httpx.Client(timeout=timeout)

    def close(self):
        self._client.close()

    def translate(self, texts: Sequence[str]) -> list[str]:
        headers = {}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        attempts = self.retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt > 0:
                delay = self.backoff_base * (2 ** (attempt - 1))
                time.sleep(delay * (0.5 + random.random()))
            try:
                response = self._client.post(
                    self.endpoint, json={"texts": list(texts)}, headers=headers
                )
                response.raise_for_status()
                translations = response.json()["translations"]
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                continue
            if len(translations) != len(texts):
                last_error = TranslationError(
                    f"service returned {len(translations)} translations "
                    f"for {len(texts)} texts"
                )
                continue
            return [str(t) for t in translations]
        raise TranslationError(
            f"translation failed after {attempts} attempts: {last_error}"
        ) from last_error


@dataclass
class TranslationJob:
    """Ordered batch of (id, source text) items plus completion state."""

    items: list[tuple[str, str]]
    completed: dict[str, str] = field(default_factory=dict)
    failed: dict[str, str] = field(default_factory=dict)
    checkpoint_path: Path | None = None

    def __post_init__(self):
        ids = [item_id for item_id, _ in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("job item ids must be unique")
        if self.checkpoint_path is not None:
            self.checkpoint_path = Path(self.checkpoint_path)

    @property
    def pending(self) -> list[tuple[str, str]]:
        return [item for item in self.items if item[0] not in self.completed]

    @property
    def finished(self) -> bool:
        return len(self.completed) == len(self.items)

    def results(self) -> list[tuple[str, str]]:
        """Completed (id, translation) pairs in job item order."""
        return [
            (item_id, self.completed[item_id])
            for item_id, _ in self.items
            if item_id in self.completed
        ]


def load_checkpoint(path: str | Path) -> dict[str, str]:
    """Load completed (id, translation) pairs, discarding a torn final line."""
    path = Path(path)
    completed: dict[str, str] = {}
    if not path.exists():
        return completed
    with open(path, encoding="utf-8") as handle:
        lines = handle.readlines()
    for index, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            completed[str(obj["id"])] = str(obj["translation"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            if index == len(lines) - 1:
                break  # partial trailing line from a crash
            raise ValueError(f"{path}:{index + 1}: corrupt checkpoint line") from exc
    return completed


class _CheckpointWriter:
    """Serialized append-only writer, flushed every ``interval`` completions."""

    def __init__(self, path: Path | None, interval: int):
        self.path = path
        self.interval = max(1, interval)
        self._pending: list[tuple[str, str]] = []
        self._lock = threading.Lock()
        self._handle: IO[str] | None = None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = open(path, "a", encoding="utf-8")

    def record(self, pairs: Iterable[tuple[str, str]]):
        if self._handle is None:
            return
        with self._lock:
            self._pending.extend(pairs)
            if len(self._pending) >= self.interval:
                self._flush_locked()

    def _flush_locked(self):
        for item_id, translation in self._pending:
            self._handle.write(
                json.dumps(
                    {"id": item_id, "translation": translation}, ensure_ascii=False
                )
                + "\n"
            )
        self._pending.clear()
        self._handle.flush()

    def close(self):
        if self._handle is None:
            return
        with self._lock:
            self._flush_locked()
            self._handle.close()
            self._handle = None


def translate_batch(
    backend,
    job: TranslationJob,
    *,
    batch_size: int = 32,
    parallelism: int = 1,
    checkpoint_interval: int = 100,
) -> TranslationJob:
    """Translate all pending items, merging completions deterministically.

    Items already present in the checkpoint are never re-sent to the backend.
    In-flight batches are bounded by ``parallelism``; completions may arrive
    out of order but results are always reported in job item order. A batch
    that fails after the backend's retry budget marks its items failed and
    leaves the job partially complete. Pending checkpoint lines are flushed
    even when the run is interrupted mid-flight.
    """
    if not job.items:
        raise ValueError("job has no items")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if job.checkpoint_path is not None:
        for item_id, translation in load_checkpoint(job.checkpoint_path).items():
            job.completed[item_id] = translation
    job.failed.clear()
    pending = job.pending
    batches = [
        pending[i : i + batch_size] for i in range(0, len(pending), batch_size)
    ]
    writer = _CheckpointWriter(job.checkpoint_path, checkpoint_interval)

    def run_batch(batch: list[tuple[str, str]]) -> list[tuple[str, str]]:
        texts = [text for _, text in batch]
        translations = backend.translate(texts)
        return [(item_id, out) for (item_id, _), out in zip(batch, translations)]

    try:
        if parallelism <= 1:
            for batch in batches:
                try:
                    pairs = run_batch(batch)
                except TranslationError as exc:
                    for item_id, _ in batch:
                        job.failed[item_id] = str(exc)
                    continue
                job.completed.update(pairs)
                writer.record(pairs)
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                futures = {pool.submit(run_batch, batch): batch for batch in batches}
                for future in as_completed(futures):
                    batch = futures[future]
                    try:
                        pairs = future.result()
                    except TranslationError as exc:
                        for item_id, _ in batch:
                            job.failed[item_id] = str(exc)
                        continue
                    job.completed.update(pairs)
                    writer.record(pairs)
    finally:
        writer.close()
    return job
