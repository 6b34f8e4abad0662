from __future__ import annotations

import pytest

from vimedkit.ingest import Abstract
from vimedkit.textnorm import token_count
from vimedkit.translation import TranslationError


def citation_xml(
    pmid: str | None,
    title: str = "T",
    abstract_texts: tuple[str, ...] | None = ("a b c",),
) -> str:
    pmid_xml = f"<PMID>{pmid}</PMID>" if pmid is not None else ""
    if abstract_texts is None:
        abstract_xml = ""
    else:
        segments = "".join(
            f"<AbstractText>{text}</AbstractText>" for text in abstract_texts
        )
        abstract_xml = f"<Abstract>{segments}</Abstract>"
    return (
        "<MedlineCitation>"
        f"{pmid_xml}"
        f"<Article><ArticleTitle>{title}</ArticleTitle>{abstract_xml}</Article>"
        "</MedlineCitation>"
    )


def citation_set(*citations: str) -> bytes:
    return ("<MedlineCitationSet>" + "".join(citations) + "</MedlineCitationSet>").encode(
        "utf-8"
    )


def make_abstract(pmid: str, body: str, title: str = "T") -> Abstract:
    return Abstract(
        pmid=pmid, title=title, body=body, token_count=token_count(body)
    )


class StubInterrupt(Exception):
    """Simulated crash injected by the counting stub backend."""


class CountingBackend:
    """Backend that counts item translations and can fail or crash on cue.

    ``fail_texts`` raise TranslationError (permanent failure after retries);
    ``interrupt_after`` raises StubInterrupt once that many items have been
    translated, simulating a killed process.
    """

    def __init__(
        self,
        transform=str.upper,
        fail_texts: set[str] | None = None,
        interrupt_after: int | None = None,
    ):
        self.transform = transform
        self.fail_texts = fail_texts or set()
        self.interrupt_after = interrupt_after
        self.items_translated = 0
        self.batch_calls = 0

    def translate(self, texts):
        self.batch_calls += 1
        out = []
        for text in texts:
            if (
                self.interrupt_after is not None
                and self.items_translated >= self.interrupt_after
            ):
                raise StubInterrupt(f"killed after {self.items_translated} items")
            if text in self.fail_texts:
                raise TranslationError(f"injected failure for {text!r}")
            out.append(self.transform(text))
            self.items_translated += 1
        return out


@pytest.fixture
def counting_backend():
    return CountingBackend()
