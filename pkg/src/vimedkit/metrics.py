"""Evaluation metrics: corpus BLEU, ROUGE-L, macro-F1, accuracy.

BLEU is the unsmoothed corpus-level definition: geometric mean of modified
n-gram precisions (n = 1..4) over corpus-aggregated counts, times the brevity
penalty. A zero higher-order precision therefore zeroes the score; published
BLEU tools differ here, so the variant is frozen in this docstring for
comparability. Tokenization for the MT metrics is the pipeline-wide
NFC + whitespace rule.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .textnorm import tokens

logger = logging.getLogger(__name__)

METRICS = ("bleu", "rouge_l", "macro_f1", "accuracy")


@dataclass(frozen=True)
class MetricReport:
    dataset: str
    domain: str
    metric: str
    value: float
    support: int

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.support < 1:
            raise ValueError("support must be >= 1")
        upper = 100.0 if self.metric == "bleu" else 1.0
        if not 0.0 <= self.value <= upper:
            raise ValueError(
                f"{self.metric} value {self.value} outside [0, {upper}]"
            )

    def as_dict(self) -> dict:
        return asdict(self)


class RougeScore(NamedTuple):
    precision: float
    recall: float
    f1: float


def _ngram_counts(seq: Sequence[str], n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def corpus_bleu(
    hypotheses: Sequence[str], references: Sequence[str], max_n: int = 4
) -> float:
    """Corpus BLEU in [0, 100] over aligned hypothesis/reference segments."""
    if len(hypotheses) != len(references):
        raise ValueError(
            f"length mismatch: {len(hypotheses)} hypotheses, "
            f"{len(references)} references"
        )
    if not hypotheses:
        raise ValueError("empty corpus")
    matches = [0] * max_n
    guesses = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp_text, ref_text in zip(hypotheses, references):
        hyp = tokens(hyp_text)
        ref = tokens(ref_text)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngram_counts(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref, n)
            guesses[n - 1] += sum(hyp_counts.values())
            matches[n - 1] += sum((hyp_counts & ref_counts).values())
    if hyp_len == 0:
        return 0.0
    log_precision_sum = 0.0
    for n in range(max_n):
        if guesses[n] == 0 or matches[n] == 0:
            return 0.0
        log_precision_sum += math.log(matches[n] / guesses[n])
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision_sum / max_n)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b):
            if token_a == token_b:
                current.append(previous[j] + 1)
            else:
                current.append(max(previous[j + 1], current[j]))
        previous = current
    return previous[-1]


def rouge_l(hypothesis: str, reference: str) -> RougeScore:
    """LCS-based ROUGE-L (precision, recall, F1 with beta = 1).

    An empty side is defined as all-zero scores and flagged via logging
    rather than raised.
    """
    hyp = tokens(hypothesis)
    ref = tokens(reference)
    if not hyp or not ref:
        logger.warning("rouge_l: empty %s side, scoring zero",
                       "hypothesis" if not hyp else "reference")
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(hyp, ref)
    precision = lcs / len(hyp)
    recall = lcs / len(ref)
    if precision + recall == 0.0:
        return RougeScore(0.0, 0.0, 0.0)
    f1 = 2.0 * precision * recall / (precision + recall)
    return RougeScore(precision, recall, f1)


def macro_f1(
    predictions: Sequence[str],
    golds: Sequence[str],
    label_set: Iterable[str],
    include_absent: bool = True,
) -> float:
    """Unweighted mean of per-class F1 over the label set.

    Classes absent from both predictions and golds contribute F1 = 0 by
    default; pass ``include_absent=False`` to average only over classes that
    occur.
    """
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds must have equal length")
    if not predictions:
        raise ValueError("empty input")
    labels = list(dict.fromkeys(label_set))
    known = set(labels)
    for value in list(predictions) + list(golds):
        if value not in known:
            raise ValueError(f"unknown label {value!r}")
    scores = []
    for label in labels:
        tp = sum(1 for p, g in zip(predictions, golds) if p == label and g == label)
        fp = sum(1 for p, g in zip(predictions, golds) if p == label and g != label)
        fn = sum(1 for p, g in zip(predictions, golds) if p != label and g == label)
        if not include_absent and tp + fp + fn == 0:
            continue
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        scores.append(f1)
    if not scores:
        raise ValueError("no classes to average over")
    return sum(scores) / len(scores)


def accuracy(predictions: Sequence[str], golds: Sequence[str]) -> float:
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds must have equal length")
    if not predictions:
        raise ValueError("empty input")
    return sum(1 for p, g in zip(predictions, golds) if p == g) / len(predictions)


def eval_multidomain(
    pairs: Sequence[tuple[str, str, str]], dataset: str = ""
) -> list[MetricReport]:
    """Corpus BLEU per distinct domain plus an ``all`` aggregate report."""
    if not pairs:
        raise ValueError("empty corpus")
    by_domain: dict[str, list[tuple[str, str]]] = {}
    for hypothesis, reference, domain in pairs:
        by_domain.setdefault(domain, []).append((hypothesis, reference))
    reports = []
    for domain in sorted(by_domain):
        group = by_domain[domain]
        reports.append(
            MetricReport(
                dataset=dataset,
                domain=domain,
                metric="bleu",
                value=corpus_bleu([h for h, _ in group], [r for _, r in group]),
                support=len(group),
            )
        )
    reports.append(
        MetricReport(
            dataset=dataset,
            domain="all",
            metric="bleu",
            value=corpus_bleu(
                [h for h, _, _ in pairs], [r for _, r, _ in pairs]
            ),
            support=len(pairs),
        )
    )
    return reports


def format_report_table(reports: Sequence[MetricReport]) -> str:
    """Aligned plain-text table of metric reports."""
    header = ("Dataset", "Domain", "Metric", "Score", "Support")
    rows = [header]
    for report in reports:
        digits = 2 if report.metric == "bleu" else 4
        rows.append(
            (
                report.dataset or "-",
                report.domain or "-",
                report.metric,
                f"{report.value:.{digits}f}",
                str(report.support),
            )
        )
    widths = [max(len(row[col]) for row in rows) for col in range(len(header))]
    lines = []
    for index, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[col]) for col, cell in enumerate(row)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * widths[col] for col in range(len(header))))
    return "\n".join(lines)


def write_reports_json(reports: Sequence[MetricReport], path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump([r.as_dict() for r in reports], handle, ensure_ascii=False, indent=2)
        handle.write("\n")


def read_reports_json(path: str | Path) -> list[MetricReport]:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    return [MetricReport(**entry) for entry in payload]
