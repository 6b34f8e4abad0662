"""Length filtering, exact deduplication, and seeded subsetting of abstracts.

All three operations are stream transforms that never mutate records:
survivors are the input objects themselves. Counters accumulate in a shared
:class:`FilterStats` so the stages compose without materializing the stream.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

from .ingest import Abstract
from .textnorm import collapse_whitespace

DEFAULT_MAX_TOKENS = 512


@dataclass
class FilterConfig:
    max_tokens: int = DEFAULT_MAX_TOKENS
    dedup: bool = True
    subset_size: int | None = None
    subset_seed: int = 0

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.subset_size is not None and self.subset_size < 0:
            raise ValueError("subset_size must be >= 0")


@dataclass
class FilterStats:
    records_in: int = 0
    kept: int = 0
    dropped_overlength: int = 0
    duplicates: int = 0
    subset_selected: int = 0
    subset_shortfall: bool = False
    seeds: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def body_key(body: str) -> str:
    """Dedup key: hash of the NFC-normalized, whitespace-collapsed body."""
    return hashlib.sha256(collapse_whitespace(body).encode("utf-8")).hexdigest()


def filter_by_length(
    abstracts: Iterable[Abstract],
    max_tokens: int = DEFAULT_MAX_TOKENS,
    stats: FilterStats | None = None,
) -> Iterator[Abstract]:
    """Keep records with token_count <= max_tokens, preserving order."""
    if stats is None:
        stats = FilterStats()
    for record in abstracts:
        stats.records_in += 1
        if record.token_count <= max_tokens:
            stats.kept += 1
            yield record
        else:
            stats.dropped_overlength += 1


def dedup(
    abstracts: Iterable[Abstract], stats: FilterStats | None = None
) -> Iterator[Abstract]:
    """Drop repeated bodies; the first occurrence wins, order is preserved."""
    if stats is None:
        stats = FilterStats()
    seen: set[str] = set()
    for record in abstracts:
        key = body_key(record.body)
        if key in seen:
            stats.duplicates += 1
            continue
        seen.add(key)
        yield record


def take_subset(
    abstracts: Iterable[Abstract],
    size: int,
    seed: int,
    stats: FilterStats | None = None,
) -> list[Abstract]:
    """Uniform sample without replacement via seeded reservoir sampling.

    The result is returned in input order and is identical for identical
    (seed, input). Asking for more records than exist returns everything and
    flags the shortfall instead of failing.
    """
    if size < 0:
        raise ValueError("subset size must be >= 0")
    if stats is None:
        stats = FilterStats()
    rng = random.Random(seed)
    reservoir: list[tuple[int, Abstract]] = []
    n = 0
    for index, record in enumerate(abstracts):
        n += 1
        if len(reservoir) < size:
            reservoir.append((index, record))
        else:
            if size == 0:
                continue
            j = rng.randint(0, index)
            if j < size:
                reservoir[j] = (index, record)
    if size > n:
        stats.subset_shortfall = True
    reservoir.sort(key=lambda pair: pair[0])
    selected = [record for _, record in reservoir]
    stats.subset_selected = len(selected)
    stats.seeds["subset_seed"] = seed
    return selected


def apply_filters(
    abstracts: Iterable[Abstract], cfg: FilterConfig, stats: FilterStats | None = None
) -> tuple[list[Abstract], FilterStats]:
    """Run length filter, optional dedup, and optional subsetting in order."""
    if stats is None:
        stats = FilterStats()
    stream: Iterable[Abstract] = filter_by_length(abstracts, cfg.max_tokens, stats)
    if cfg.dedup:
        stream = dedup(stream, stats)
    if cfg.subset_size is not None:
        result = take_subset(stream, cfg.subset_size, cfg.subset_seed, stats)
    else:
        result = list(stream)
    return result, stats
