"""Streaming parser for MEDLINE/PubMed baseline XML.

Citation records are read with an event-pull parser so peak memory stays flat
regardless of file size. One :class:`Abstract` is emitted per citation that
carries non-empty abstract text; everything else is accounted for in
:class:`IngestStats`.
"""

from __future__ import annotations

import gzip
import json
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .textnorm import collapse_whitespace, token_count

GZIP_MAGIC = b"\x1f\x8b"

ABSTRACT_JSONL_FIELDS = ("pmid", "title", "body", "token_count")


class MalformedXmlError(ValueError):
    """Input is not well-formed XML; message carries the parse position."""


@dataclass(frozen=True)
class Abstract:
    """One citation reduced to the text unit the pipeline translates.

    ``body`` is NFC-normalized with whitespace runs collapsed, and
    ``token_count`` is the whitespace-token count of ``body``.
    """

    pmid: str
    title: str
    body: str
    token_count: int
    source_file: str = ""


@dataclass
class IngestStats:
    records_seen: int = 0
    records_emitted: int = 0
    records_skipped_no_abstract: int = 0
    records_malformed: int = 0

    def reconciles(self) -> bool:
        return self.records_seen == (
            self.records_emitted
            + self.records_skipped_no_abstract
            + self.records_malformed
        )

    def as_dict(self) -> dict:
        return asdict(self)


def open_source(path: str | Path) -> IO[bytes]:
    """Open a MEDLINE XML file, transparently decompressing gzip.

    Compression is detected from the magic bytes, not the file extension.
    A corrupt gzip body surfaces as an error when the stream is read.
    """
    path = Path(path)
    with open(path, "rb") as probe:
        magic = probe.read(2)
    if magic == GZIP_MAGIC:
        return gzip.open(path, "rb")
    return open(path, "rb")


def _element_text(elem: ET.Element | None) -> str:
    if elem is None:
        return ""
    return collapse_whitespace("".join(elem.itertext()))


def parse_medline_stream(
    stream: IO[bytes],
    stats: IngestStats | None = None,
    source_file: str = "",
) -> Iterator[Abstract]:
    """Yield one Abstract per citation that has non-empty abstract text.

    Multiple AbstractText segments are concatenated in document order with a
    single space; section labels are dropped. Citations without a PMID count
    as malformed, citations without abstract text as skipped. ``stats`` is
    updated in place while the stream is consumed, so callers can process
    records without materializing them.
    """
    if stats is None:
        stats = IngestStats()
    root: ET.Element | None = None
    try:
        for event, elem in ET.iterparse(stream, events=("start", "end")):
            if event == "start":
                if root is None:
                    root = elem
                continue
            if elem.tag != "MedlineCitation":
                continue
            stats.records_seen += 1
            pmid = _element_text(elem.find("PMID"))
            title = _element_text(elem.find("Article/ArticleTitle"))
            segments = [
                _element_text(seg)
                for seg in elem.findall("Article/Abstract/AbstractText")
            ]
            body = collapse_whitespace(" ".join(seg for seg in segments if seg))
            if not pmid:
                stats.records_malformed += 1
            elif not body:
                stats.records_skipped_no_abstract += 1
            else:
                stats.records_emitted += 1
                yield Abstract(
                    pmid=pmid,
                    title=title,
                    body=body,
                    token_count=token_count(body),
                    source_file=source_file,
                )
            if root is not None:
                # Drop processed subtrees so memory stays independent of
                # file size; the expat stack keeps open elements alive.
                root.clear()
    except ET.ParseError as exc:
        line, column = exc.position
        raise MalformedXmlError(
            f"malformed XML at line {line}, column {column}: {exc}"
        ) from exc


def parse_medline_file(
    path: str | Path, stats: IngestStats | None = None
) -> Iterator[Abstract]:
    """Parse one ``.xml`` or ``.xml.gz`` baseline file."""
    path = Path(path)
    with open_source(path) as stream:
        yield from parse_medline_stream(stream, stats, source_file=path.name)


def write_abstracts_jsonl(abstracts: Iterable[Abstract], out: IO[str]) -> int:
    """Write abstracts as JSON lines (pmid, title, body, token_count)."""
    written = 0
    for record in abstracts:
        obj = {
            "pmid": record.pmid,
            "title": record.title,
            "body": record.body,
            "token_count": record.token_count,
        }
        out.write(json.dumps(obj, ensure_ascii=False) + "\n")
        written += 1
    return written


def read_abstracts_jsonl(path: str | Path) -> Iterator[Abstract]:
    """Read abstracts back from the JSON-lines interchange format."""
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            missing = [f for f in ABSTRACT_JSONL_FIELDS if f not in obj]
            if missing:
                raise ValueError(
                    f"{path}:{lineno}: missing fields {', '.join(missing)}"
                )
            yield Abstract(
                pmid=str(obj["pmid"]),
                title=obj["title"],
                body=obj["body"],
                token_count=int(obj["token_count"]),
                source_file=path.name,
            )
