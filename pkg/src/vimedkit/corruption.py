"""Span-masking pretraining examples: replace random token spans with sentinels.

The masked-token budget is ``round(rate * length)`` clamped to
``[0, length - 1]``, split into spans of mean length ``mean_span_length``.
Spans never touch: every sentinel in the corrupted input is separated from
its neighbours by at least one kept token, so the example round-trips
exactly through :func:`reconstruct`.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

DEFAULT_SENTINEL = "<extra_id_{i}>"

# Uniform rejection sampling of span starts degenerates at high mask
# density; past this many attempts placement falls back to direct
# gap-composition sampling, which always succeeds.
_REJECTION_ATTEMPTS = 64


class SentinelCollisionError(ValueError):
    """An input token already matches the sentinel pattern."""


class SentinelMismatchError(ValueError):
    """Input and target disagree about which sentinels exist."""


@dataclass(frozen=True)
class CorruptionConfig:
    corruption_rate: float = 0.15
    mean_span_length: float = 3.0
    sentinel_prefix: str = DEFAULT_SENTINEL
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ValueError("corruption_rate must be in [0, 1]")
        if self.mean_span_length < 1.0:
            raise ValueError("mean_span_length must be >= 1")
        if "{i}" not in self.sentinel_prefix:
            raise ValueError("sentinel_prefix must contain the {i} placeholder")

    def sentinel(self, index: int) -> str:
        return self.sentinel_prefix.format(i=index)

    def sentinel_regex(self) -> re.Pattern[str]:
        head, tail = self.sentinel_prefix.split("{i}", 1)
        return re.compile(re.escape(head) + r"(\d+)" + re.escape(tail) + r"\Z")


@dataclass
class SpanCorruptionExample:
    input_tokens: list[str]
    target_tokens: list[str]
    original_length: int


def _example_rng(tokens: Sequence[str], cfg: CorruptionConfig) -> random.Random:
    """Seeded per-example RNG: a pure function of (tokens, cfg.seed)."""
    digest = hashlib.blake2b(digest_size=8)
    digest.update(cfg.seed.to_bytes(8, "little", signed=True))
    for token in tokens:
        raw = token.encode("utf-8")
        digest.update(len(raw).to_bytes(4, "little"))
        digest.update(raw)
    return random.Random(int.from_bytes(digest.digest(), "little"))


def _span_lengths(rng: random.Random, masked: int, count: int) -> list[int]:
    """Random composition of ``masked`` into ``count`` parts of >= 1 token."""
    if count == 1:
        return [masked]
    cuts = sorted(rng.sample(range(1, masked), count - 1))
    bounds = [0, *cuts, masked]
    return [bounds[i + 1] - bounds[i] for i in range(count)]


def _place_by_rejection(
    rng: random.Random, length: int, lengths: list[int]
) -> list[tuple[int, int]] | None:
    """Sample span start positions uniformly; None when no attempt is valid."""
    count = len(lengths)
    for _ in range(_REJECTION_ATTEMPTS):
        starts = sorted(rng.sample(range(length), count))
        spans = []
        previous_end = -2
        valid = True
        for start, span_len in zip(starts, lengths):
            if start <= previous_end + 1 or start + span_len > length:
                valid = False
                break
            spans.append((start, start + span_len))
            previous_end = start + span_len - 1
        if valid:
            return spans
    return None


def _place_by_composition(
    rng: random.Random, length: int, lengths: list[int]
) -> list[tuple[int, int]]:
    """Distribute the free-token budget into gaps around the spans."""
    count = len(lengths)
    slack = length - sum(lengths) - (count - 1)
    draws = sorted(rng.randint(0, slack) for _ in range(count))
    gaps = [draws[0]]
    gaps += [1 + draws[i] - draws[i - 1] for i in range(1, count)]
    spans = []
    cursor = 0
    for gap, span_len in zip(gaps, lengths):
        cursor += gap
        spans.append((cursor, cursor + span_len))
        cursor += span_len
    return spans


def corrupt(tokens: Sequence[str], cfg: CorruptionConfig) -> SpanCorruptionExample:
    """Build one span-corruption example from a token sequence.

    The corrupted input carries indexed sentinels in strictly increasing
    order; the target is the concatenation of the same sentinels with the
    masked spans, closed by one terminal sentinel. Deterministic under
    (tokens, cfg).
    """
    tokens = list(tokens)
    if not tokens:
        raise ValueError("token sequence must be non-empty")
    pattern = cfg.sentinel_regex()
    for token in tokens:
        if pattern.match(token):
            raise SentinelCollisionError(
                f"input token {token!r} matches the sentinel pattern"
            )
    length = len(tokens)
    masked = min(max(round(cfg.corruption_rate * length), 0), length - 1)
    if masked == 0:
        return SpanCorruptionExample(
            input_tokens=list(tokens),
            target_tokens=[cfg.sentinel(0)],
            original_length=length,
        )
    rng = _example_rng(tokens, cfg)
    span_count = max(1, round(masked / cfg.mean_span_length))
    span_count = min(span_count, masked, length - masked + 1)
    lengths = _span_lengths(rng, masked, span_count)
    spans = _place_by_rejection(rng, length, lengths)
    if spans is None:
        spans = _place_by_composition(rng, length, lengths)

    input_tokens: list[str] = []
    target_tokens: list[str] = []
    cursor = 0
    for index, (start, end) in enumerate(spans):
        input_tokens.extend(tokens[cursor:start])
        input_tokens.append(cfg.sentinel(index))
        target_tokens.append(cfg.sentinel(index))
        target_tokens.extend(tokens[start:end])
        cursor = end
    input_tokens.extend(tokens[cursor:])
    target_tokens.append(cfg.sentinel(len(spans)))
    return SpanCorruptionExample(
        input_tokens=input_tokens,
        target_tokens=target_tokens,
        original_length=length,
    )


def _parse_sentinel(token: str, pattern: re.Pattern[str]) -> int | None:
    match = pattern.match(token)
    return int(match.group(1)) if match else None


def reconstruct(
    input_tokens: Sequence[str],
    target_tokens: Sequence[str],
    sentinel_prefix: str = DEFAULT_SENTINEL,
) -> list[str]:
    """Splice target spans back at their sentinel positions.

    Raises :class:`SentinelMismatchError` when input and target disagree
    about sentinel identity, order, or span contents.
    """
    pattern = CorruptionConfig(sentinel_prefix=sentinel_prefix).sentinel_regex()
    spans: dict[int, list[str]] = {}
    order: list[int] = []
    current: int | None = None
    for token in target_tokens:
        index = _parse_sentinel(token, pattern)
        if index is None:
            if current is None:
                raise SentinelMismatchError("target span precedes any sentinel")
            spans[current].append(token)
        else:
            if index in spans:
                raise SentinelMismatchError(f"duplicate sentinel {index} in target")
            spans[index] = []
            order.append(index)
            current = index
    if not order:
        raise SentinelMismatchError("target carries no terminal sentinel")
    terminal = order[-1]
    if spans[terminal]:
        raise SentinelMismatchError("terminal sentinel must end the target")
    if order != list(range(len(order))):
        raise SentinelMismatchError(f"target sentinel order {order} is not 0..n")
    for index in order[:-1]:
        if not spans[index]:
            raise SentinelMismatchError(f"sentinel {index} has an empty span")

    expected = list(range(terminal))
    seen: list[int] = []
    output: list[str] = []
    for token in input_tokens:
        index = _parse_sentinel(token, pattern)
        if index is None:
            output.append(token)
        else:
            seen.append(index)
            if index not in spans or index == terminal:
                raise SentinelMismatchError(f"input sentinel {index} not in target")
            output.extend(spans[index])
    if seen != expected:
        raise SentinelMismatchError(
            f"input sentinels {seen} do not match target sentinels {expected}"
        )
    return output


def write_examples_jsonl(
    examples: Iterable[SpanCorruptionExample],
    out_prefix: str | Path,
    shard_size: int | None = None,
) -> list[Path]:
    """Write examples as JSONL shards with input/target/original_length fields."""
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)

    def dump(example: SpanCorruptionExample) -> str:
        return json.dumps(
            {
                "input": " ".join(example.input_tokens),
                "target": " ".join(example.target_tokens),
                "original_length": example.original_length,
            },
            ensure_ascii=False,
        )

    if not shard_size:
        path = out_prefix.with_suffix(".jsonl")
        with open(path, "w", encoding="utf-8") as handle:
            for example in examples:
                handle.write(dump(example) + "\n")
        return [path]
    paths: list[Path] = []
    handle = None
    count = 0
    try:
        for example in examples:
            if handle is None or count >= shard_size:
                if handle is not None:
                    handle.close()
                path = out_prefix.parent / f"{out_prefix.name}-{len(paths):05d}.jsonl"
                handle = open(path, "w", encoding="utf-8")
                paths.append(path)
                count = 0
            handle.write(dump(example) + "\n")
            count += 1
    finally:
        if handle is not None:
            handle.close()
    return paths
