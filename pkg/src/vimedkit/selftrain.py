"""Self-training corpus construction: synthesize bitext and mix with gold.

Monolingual abstracts are translated by a backend into provenance-tagged
synthetic pairs, then concatenated with gold bitext and shuffled under a
recorded seed. Mixing is plain concatenation + shuffle; no up/down-sampling.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

from .ingest import Abstract
from .translation import TranslationJob, translate_batch

ORIGINS = ("gold", "synthetic")

BITEXT_COLUMNS = ("source", "target", "origin", "domain")


@dataclass(frozen=True)
class BitextPair:
    source: str
    target: str
    origin: str
    domain: str

    def __post_init__(self):
        if not self.source or not self.target:
            raise ValueError("source and target must be non-empty")
        if self.origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}, got {self.origin!r}")


@dataclass
class MixManifest:
    gold_count: int
    synthetic_count: int
    total_count: int
    shuffle_seed: int
    cross_origin_source_overlap: int = 0
    output_shards: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.total_count != self.gold_count + self.synthetic_count:
            raise ValueError("total_count must equal gold_count + synthetic_count")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SynthesisResult:
    pairs: list[BitextPair]
    failed_count: int
    failed_ids: list[str] = field(default_factory=list)


def synthesize_bitext(
    mono: Iterable[Abstract],
    backend,
    *,
    domain: str = "medical",
    checkpoint_path: str | Path | None = None,
    batch_size: int = 32,
    parallelism: int = 1,
) -> SynthesisResult:
    """Translate monolingual abstracts into synthetic bitext pairs.

    One pair per abstract: source is the abstract body, target the backend
    translation, origin ``synthetic``. Items the backend fails on are
    excluded from the output and counted.
    """
    records = list(mono)
    if not records:
        return SynthesisResult(pairs=[], failed_count=0)
    job = TranslationJob(
        items=[(record.pmid, record.body) for record in records],
        checkpoint_path=Path(checkpoint_path) if checkpoint_path else None,
    )
    translate_batch(
        backend, job, batch_size=batch_size, parallelism=parallelism
    )
    pairs = [
        BitextPair(
            source=record.body,
            target=job.completed[record.pmid],
            origin="synthetic",
            domain=domain,
        )
        for record in records
        if record.pmid in job.completed
    ]
    failed_ids = sorted(job.failed)
    return SynthesisResult(
        pairs=pairs, failed_count=len(failed_ids), failed_ids=failed_ids
    )


def mix_corpora(
    gold: Sequence[BitextPair],
    synthetic: Sequence[BitextPair],
    seed: int,
) -> tuple[list[BitextPair], MixManifest]:
    """Seeded uniform shuffle of the multiset union of gold and synthetic.

    Identical inputs and seed yield an identical output order. Sources that
    appear on both sides are reported in the manifest but never removed.
    """
    gold_sources = {pair.source for pair in gold}
    overlap = sum(1 for pair in synthetic if pair.source in gold_sources)
    mixed = list(gold) + list(synthetic)
    random.Random(seed).shuffle(mixed)
    manifest = MixManifest(
        gold_count=len(gold),
        synthetic_count=len(synthetic),
        total_count=len(mixed),
        shuffle_seed=seed,
        cross_origin_source_overlap=overlap,
    )
    return mixed, manifest


def _check_tsv_safe(value: str, what: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise ValueError(f"{what} contains a tab or newline; not TSV-safe")
    return value


def write_bitext_tsv(pairs: Iterable[BitextPair], out: IO[str]) -> int:
    """Write pairs as ``source<TAB>target<TAB>origin<TAB>domain`` lines."""
    written = 0
    for pair in pairs:
        row = (
            _check_tsv_safe(pair.source, "source"),
            _check_tsv_safe(pair.target, "target"),
            pair.origin,
            pair.domain,
        )
        out.write("\t".join(row) + "\n")
        written += 1
    return written


def write_bitext_shards(
    pairs: Sequence[BitextPair],
    out_prefix: str | Path,
    shard_size: int | None = None,
) -> list[Path]:
    """Write pairs into one or more TSV shard files of ``shard_size`` records."""
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    if not shard_size or shard_size >= len(pairs):
        path = out_prefix.with_suffix(".tsv")
        with open(path, "w", encoding="utf-8") as handle:
            write_bitext_tsv(pairs, handle)
        return [path]
    paths = []
    for shard_index, start in enumerate(range(0, len(pairs), shard_size)):
        path = out_prefix.parent / f"{out_prefix.name}-{shard_index:05d}.tsv"
        with open(path, "w", encoding="utf-8") as handle:
            write_bitext_tsv(pairs[start : start + shard_size], handle)
        paths.append(path)
    return paths


def read_bitext_tsv(
    path: str | Path,
    *,
    default_origin: str = "gold",
    default_domain: str = "general",
) -> Iterator[BitextPair]:
    """Read 4-column bitext TSV; 2-column files get the default origin/domain."""
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                source, target = parts
                origin, domain = default_origin, default_domain
            elif len(parts) == 4:
                source, target, origin, domain = parts
            else:
                raise ValueError(f"{path}:{lineno}: expected 2 or 4 columns")
            try:
                yield BitextPair(
                    source=source, target=target, origin=origin, domain=domain
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc


def write_manifest(manifest: MixManifest, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest.as_dict(), handle, ensure_ascii=False, indent=2)
        handle.write("\n")
