"""NLI dataset handling: load, machine-translate, refine, and export.

Examples move through the states source -> machine -> refined; labels, uids,
and splits are never touched by any operation here. Abbreviation rules apply
longest-match-first on whitespace-token boundaries, so nested patterns
resolve deterministically.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .translation import TranslationJob, translate_batch

LABELS = ("entailment", "contradiction", "neutral")
SPLITS = ("train", "dev", "test")
STATES = ("source", "machine", "refined")
RULE_ACTIONS = ("keep_english", "expand_vietnamese", "replace_vietnamese_abbrev")

TSV_HEADER = ("uid", "premise", "hypothesis", "label", "state")

_SEP_SPLIT = re.compile(r"(\s+)")

# Filenames probed per split when loading a dataset directory.
_SPLIT_FILENAMES = {
    "train": ("mli_train_v1.jsonl", "train.jsonl", "train.tsv"),
    "dev": ("mli_dev_v1.jsonl", "dev.jsonl", "dev.tsv"),
    "test": ("mli_test_v1.jsonl", "test.jsonl", "test.tsv"),
}


class NliLoadError(ValueError):
    """A record violates the NLI interchange schema."""


class MixedStateError(ValueError):
    """Export refused: examples are in mixed states without the allow flag."""


@dataclass
class NliExample:
    uid: str
    premise: str
    hypothesis: str
    label: str
    split: str
    state: str = "source"
    applied_rules: list[str] = field(default_factory=list)
    annotator: str | None = None
    # English originals, retained through translation so the refinement
    # workflow can show annotators the source text.
    source_premise: str | None = None
    source_hypothesis: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise NliLoadError(
                f"record {self.uid}: unknown label {self.label!r}"
            )
        if self.split not in SPLITS:
            raise NliLoadError(f"record {self.uid}: unknown split {self.split!r}")
        if self.state not in STATES:
            raise NliLoadError(f"record {self.uid}: unknown state {self.state!r}")


@dataclass(frozen=True)
class AbbrevRule:
    rule_id: str
    pattern: str
    action: str
    replacement: str = ""
    case_sensitive: bool = True
    notes: str = ""

    def __post_init__(self):
        if self.action not in RULE_ACTIONS:
            raise ValueError(
                f"rule {self.rule_id}: unknown action {self.action!r}"
            )
        if self.action == "keep_english" and self.replacement:
            raise ValueError(
                f"rule {self.rule_id}: keep_english must have empty replacement"
            )
        if self.action != "keep_english" and not self.replacement:
            raise ValueError(
                f"rule {self.rule_id}: action {self.action} requires a replacement"
            )
        if not self.pattern.split():
            raise ValueError(f"rule {self.rule_id}: empty pattern")

    @property
    def pattern_tokens(self) -> tuple[str, ...]:
        return tuple(self.pattern.split())


def load_abbrev_lexicon(path: str | Path) -> list[AbbrevRule]:
    """Load TSV rules: rule_id, pattern, action, replacement, notes."""
    rules: list[AbbrevRule] = []
    seen_patterns: set[str] = set()
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns")
            rule_id, pattern, action, replacement, notes = parts
            if pattern in seen_patterns:
                raise ValueError(f"{path}:{lineno}: duplicate pattern {pattern!r}")
            seen_patterns.add(pattern)
            try:
                rules.append(
                    AbbrevRule(
                        rule_id=rule_id,
                        pattern=pattern,
                        action=action,
                        replacement=replacement,
                        notes=notes,
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return rules


def lexicon_conflicts(rules: Sequence[AbbrevRule]) -> list[str]:
    """Flag replacements that contain another rule's pattern.

    Such lexicons would re-trigger on their own output and break the
    idempotence of rule application; callers should surface these.
    """
    conflicts = []
    for rule in rules:
        if not rule.replacement:
            continue
        replacement_tokens = tuple(rule.replacement.split())
        for other in rules:
            needle = other.pattern_tokens
            for i in range(len(replacement_tokens) - len(needle) + 1):
                if replacement_tokens[i : i + len(needle)] == needle:
                    conflicts.append(
                        f"rule {rule.rule_id}: replacement contains pattern "
                        f"of rule {other.rule_id}"
                    )
                    break
    return conflicts


def _tokens_match(
    window: Sequence[str], pattern: tuple[str, ...], case_sensitive: bool
) -> bool:
    if case_sensitive:
        return tuple(window) == pattern
    return tuple(t.casefold() for t in window) == tuple(
        p.casefold() for p in pattern
    )


def apply_abbrev_rules(
    sentence: str, lexicon: Sequence[AbbrevRule]
) -> tuple[str, list[str]]:
    """Apply rules longest-match-first, left-to-right, without overlap.

    Matching is on whitespace-token boundaries; surrounding whitespace is
    preserved. ``keep_english`` rules record a hit without changing the text.
    Returns the rewritten sentence and the ids of rules that fired, in order
    of first application.
    """
    if not lexicon:
        return sentence, []
    ordered = sorted(
        lexicon, key=lambda rule: (-len(rule.pattern_tokens), rule.rule_id)
    )
    parts = _SEP_SPLIT.split(sentence)
    token_slots = [i for i in range(0, len(parts), 2) if parts[i]]
    word_tokens = [parts[i] for i in token_slots]
    applied: list[str] = []
    position = 0
    while position < len(word_tokens):
        matched = False
        for rule in ordered:
            size = len(rule.pattern_tokens)
            window = word_tokens[position : position + size]
            if len(window) < size:
                continue
            if _tokens_match(window, rule.pattern_tokens, rule.case_sensitive):
                if rule.rule_id not in applied:
                    applied.append(rule.rule_id)
                if rule.action != "keep_english":
                    first_slot = token_slots[position]
                    last_slot = token_slots[position + size - 1]
                    parts[first_slot] = rule.replacement
                    for slot in range(first_slot + 1, last_slot + 1):
                        parts[slot] = ""
                position += size
                matched = True
                break
        if not matched:
            position += 1
    return "".join(parts), applied


def load_mednli(path: str | Path) -> tuple[list[NliExample], dict[str, int]]:
    """Load an NLI dataset from a split file or a directory of split files.

    Accepts the JSON-lines interchange shape (sentence1, sentence2,
    gold_label, optional pairID) and this toolkit's own TSV. Every record is
    loaded with state=source. Returns the examples plus per-split counts.
    """
    path = Path(path)
    examples: list[NliExample] = []
    stats = {split: 0 for split in SPLITS}
    if path.is_dir():
        found_any = False
        for split in SPLITS:
            for name in _SPLIT_FILENAMES[split]:
                candidate = path / name
                if candidate.exists():
                    found_any = True
                    for example in _load_split_file(candidate, split):
                        examples.append(example)
                        stats[split] += 1
                    break
        if not found_any:
            raise NliLoadError(f"{path}: no recognizable split files found")
    else:
        split = _infer_split(path)
        for example in _load_split_file(path, split):
            examples.append(example)
            stats[split] += 1
    return examples, stats


def _infer_split(path: Path) -> str:
    name = path.name.lower()
    for split in SPLITS:
        if split in name:
            return split
    raise NliLoadError(
        f"{path}: cannot infer split from filename; expected train/dev/test"
    )


def _load_split_file(path: Path, split: str) -> Iterator[NliExample]:
    if path.suffix == ".tsv":
        yield from _load_tsv(path, split)
    else:
        yield from _load_jsonl(path, split)


def _load_jsonl(path: Path, split: str) -> Iterator[NliExample]:
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise NliLoadError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "sentence1" in obj:
                field_map = {
                    "premise": "sentence1",
                    "hypothesis": "sentence2",
                    "label": "gold_label",
                }
                uid = str(obj.get("pairID") or obj.get("uid") or f"{split}-{lineno}")
            else:
                field_map = {
                    "premise": "premise",
                    "hypothesis": "hypothesis",
                    "label": "label",
                }
                uid = str(obj.get("uid") or f"{split}-{lineno}")
            record = {}
            for target, source in field_map.items():
                if source not in obj:
                    raise NliLoadError(
                        f"{path}:{lineno}: record {uid}: missing field {source!r}"
                    )
                record[target] = obj[source]
            yield NliExample(uid=uid, split=split, **record)


def _load_tsv(path: Path, split: str) -> Iterator[NliExample]:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").split("\t")
        if tuple(header) != TSV_HEADER:
            raise NliLoadError(
                f"{path}: expected TSV header {'/'.join(TSV_HEADER)}"
            )
        for lineno, line in enumerate(handle, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != len(TSV_HEADER):
                raise NliLoadError(
                    f"{path}:{lineno}: expected {len(TSV_HEADER)} columns"
                )
            uid, premise, hypothesis, label, _state = parts
            yield NliExample(
                uid=uid,
                premise=premise,
                hypothesis=hypothesis,
                label=label,
                split=split,
            )


def translate_nli(
    examples: Sequence[NliExample],
    backend,
    *,
    batch_size: int = 32,
    parallelism: int = 1,
    checkpoint_path: str | Path | None = None,
) -> tuple[list[NliExample], list[str]]:
    """Translate premises and hypotheses; labels, uids, splits unchanged.

    Returns machine-state examples plus the uids of any examples the backend
    failed on (those are excluded from the output).
    """
    for example in examples:
        if example.state != "source":
            raise ValueError(f"record {example.uid}: expected state=source")
    if not examples:
        return [], []
    items = []
    for example in examples:
        items.append((f"{example.uid}::premise", example.premise))
        items.append((f"{example.uid}::hypothesis", example.hypothesis))
    job = TranslationJob(
        items=items,
        checkpoint_path=Path(checkpoint_path) if checkpoint_path else None,
    )
    translate_batch(backend, job, batch_size=batch_size, parallelism=parallelism)
    translated: list[NliExample] = []
    failed_uids: list[str] = []
    for example in examples:
        premise_id = f"{example.uid}::premise"
        hypothesis_id = f"{example.uid}::hypothesis"
        if premise_id not in job.completed or hypothesis_id not in job.completed:
            failed_uids.append(example.uid)
            continue
        translated.append(
            replace(
                example,
                premise=job.completed[premise_id],
                hypothesis=job.completed[hypothesis_id],
                state="machine",
                source_premise=example.premise,
                source_hypothesis=example.hypothesis,
            )
        )
    return translated, failed_uids


def refine_examples(
    examples: Sequence[NliExample], lexicon: Sequence[AbbrevRule]
) -> list[NliExample]:
    """Apply the abbreviation lexicon to machine examples (automated pass).

    This is the rule-suggestion path; judgment calls (spelling, mistranslation)
    go through the human refinement service instead.
    """
    refined = []
    for example in examples:
        if example.state != "machine":
            raise ValueError(f"record {example.uid}: expected state=machine")
        premise, premise_rules = apply_abbrev_rules(example.premise, lexicon)
        hypothesis, hypothesis_rules = apply_abbrev_rules(
            example.hypothesis, lexicon
        )
        applied = list(dict.fromkeys(premise_rules + hypothesis_rules))
        refined.append(
            replace(
                example,
                premise=premise,
                hypothesis=hypothesis,
                state="refined",
                applied_rules=applied,
            )
        )
    return refined


def write_nli_jsonl(examples: Iterable[NliExample], path: str | Path) -> int:
    """Internal inter-stage format: full example records including state."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    written = 0
    with open(path, "w", encoding="utf-8") as handle:
        for example in examples:
            obj = {
                "uid": example.uid,
                "premise": example.premise,
                "hypothesis": example.hypothesis,
                "label": example.label,
                "split": example.split,
                "state": example.state,
                "applied_rules": example.applied_rules,
            }
            if example.annotator is not None:
                obj["annotator"] = example.annotator
            if example.source_premise is not None:
                obj["source_premise"] = example.source_premise
            if example.source_hypothesis is not None:
                obj["source_hypothesis"] = example.source_hypothesis
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")
            written += 1
    return written


def read_nli_jsonl(path: str | Path) -> list[NliExample]:
    """Read the inter-stage format back, preserving state."""
    path = Path(path)
    examples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise NliLoadError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                examples.append(
                    NliExample(
                        uid=str(obj["uid"]),
                        premise=obj["premise"],
                        hypothesis=obj["hypothesis"],
                        label=obj["label"],
                        split=obj["split"],
                        state=obj.get("state", "source"),
                        applied_rules=list(obj.get("applied_rules", [])),
                        annotator=obj.get("annotator"),
                        source_premise=obj.get("source_premise"),
                        source_hypothesis=obj.get("source_hypothesis"),
                    )
                )
            except KeyError as exc:
                raise NliLoadError(
                    f"{path}:{lineno}: missing field {exc.args[0]!r}"
                ) from exc
    return examples


def label_histogram(examples: Iterable[NliExample]) -> dict[str, int]:
    histogram = {label: 0 for label in LABELS}
    for example in examples:
        histogram[example.label] += 1
    return histogram


def export_vimednli(
    examples: Sequence[NliExample],
    out_dir: str | Path,
    formats: Sequence[str] = ("jsonl", "tsv"),
    allow_mixed: bool = False,
) -> dict:
    """Write per-split benchmark files plus a manifest.

    All examples must be machine- or refined-state; a mix of the two is
    refused unless ``allow_mixed`` is set. The manifest reports counts by
    split and state and the label histogram per split.
    """
    states = {example.state for example in examples}
    if "source" in states:
        raise MixedStateError("cannot export source-state examples")
    if len(states) > 1 and not allow_mixed:
        raise MixedStateError(
            f"examples in mixed states {sorted(states)}; pass allow_mixed to override"
        )
    for fmt in formats:
        if fmt not in ("jsonl", "tsv"):
            raise ValueError(f"unknown export format {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_split: dict[str, list[NliExample]] = {split: [] for split in SPLITS}
    for example in examples:
        by_split[example.split].append(example)
    files: list[str] = []
    for split in SPLITS:
        rows = by_split[split]
        if not rows:
            continue
        if "jsonl" in formats:
            path = out_dir / f"vimednli_{split}.jsonl"
            with open(path, "w", encoding="utf-8") as handle:
                for example in rows:
                    handle.write(
                        json.dumps(
                            {
                                "uid": example.uid,
                                "premise": example.premise,
                                "hypothesis": example.hypothesis,
                                "label": example.label,
                                "state": example.state,
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )
            files.append(path.name)
        if "tsv" in formats:
            path = out_dir / f"vimednli_{split}.tsv"
            with open(path, "w", encoding="utf-8") as handle:
                handle.write("\t".join(TSV_HEADER) + "\n")
                for example in rows:
                    row = (
                        example.uid,
                        example.premise,
                        example.hypothesis,
                        example.label,
                        example.state,
                    )
                    for value in row:
                        if "\t" in value or "\n" in value:
                            raise ValueError(
                                f"record {example.uid}: value not TSV-safe"
                            )
                    handle.write("\t".join(row) + "\n")
            files.append(path.name)
    manifest = {
        "splits": {split: len(by_split[split]) for split in SPLITS},
        "states": {
            state: sum(1 for e in examples if e.state == state)
            for state in sorted(states)
        },
        "labels": {
            split: label_histogram(by_split[split]) for split in SPLITS
        },
        "total": len(examples),
        "files": files,
    }
    return manifest
