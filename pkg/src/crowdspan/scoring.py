"""Strict span matching and micro-averaged precision/recall/F.

A hypothesis span counts only if some gold span has the identical
(start, end); overlap earns nothing. Corpus-level metrics pool TP/FP/FN
across all documents before computing ratios (micro-averaging). Labels are
ignored everywhere: equality is (doc_id, start, end).
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Optional

from .corpus import GoldCorpus, Span
from .errors import CrowdspanError

if TYPE_CHECKING:  # pragma: no cover
    from .aggregate import Submission


class ScoringError(CrowdspanError):
    pass


class MixedDocuments(ScoringError):
    """Spans from more than one document were passed to a per-document match."""


class DuplicateSubmission(ScoringError):
    """The same worker submitted the same document twice."""


class UnknownDocument(ScoringError):
    """A hypothesis references a document the corpus does not contain."""


@dataclass(frozen=True)
class MatchResult:
    """Partition of gold and hypothesis spans under exact-offset matching."""

    true_positives: frozenset[Span]
    false_positives: frozenset[Span]
    false_negatives: frozenset[Span]

    @property
    def counts(self) -> tuple[int, int, int]:
        return (
            len(self.true_positives),
            len(self.false_positives),
            len(self.false_negatives),
        )


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    def as_record(self) -> dict[str, float | int]:
        """Fixed-key flat record used by report files."""
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def _dedupe(spans: Iterable[Span]) -> dict[tuple[int, int], Span]:
    out: dict[tuple[int, int], Span] = {}
    for s in spans:
        out.setdefault(s.key, s)
    return out


def match_strict(gold: Iterable[Span], hypothesis: Iterable[Span]) -> MatchResult:
    """Exact-offset matching of one document's hypothesis against its gold.

    Duplicate identical spans on either side collapse to one before matching.
    """
    gold_by_key = _dedupe(gold)
    hyp_by_key = _dedupe(hypothesis)
    docs = {s.doc_id for s in gold_by_key.values()} | {
        s.doc_id for s in hyp_by_key.values()
    }
    if len(docs) > 1:
        raise MixedDocuments(f"spans reference several documents: {sorted(docs)}")
    tp = frozenset(s for k, s in gold_by_key.items() if k in hyp_by_key)
    fn = frozenset(s for k, s in gold_by_key.items() if k not in hyp_by_key)
    fp = frozenset(s for k, s in hyp_by_key.items() if k not in gold_by_key)
    return MatchResult(tp, fp, fn)


def score(tp: int, fp: int, fn: int) -> Metrics:
    """Precision, recall, and F from pooled counts.

    Any ratio whose denominator is zero comes out 0, so an empty submission
    scores 0 instead of erroring (the blocking rule relies on this).
    """
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(tp, fp, fn, precision, recall, f1)


def evaluate_corpus(
    gold: GoldCorpus, hypothesis: Mapping[str, Iterable[Span]]
) -> Metrics:
    """Micro-averaged metrics: pool counts over every corpus document.

    Documents absent from the hypothesis contribute their whole gold set as
    false negatives.
    """
    unknown = [d for d in hypothesis if d not in gold.documents]
    if unknown:
        raise UnknownDocument(f"hypothesis references unknown documents: {unknown}")
    tp = fp = fn = 0
    for doc_id in gold.documents:
        result = match_strict(
            gold.gold_spans(doc_id), hypothesis.get(doc_id, frozenset())
        )
        a, b, c = result.counts
        tp, fp, fn = tp + a, fp + b, fn + c
    return score(tp, fp, fn)


@dataclass(frozen=True)
class WorkerReport:
    """Per-worker F statistics over the documents that worker completed."""

    worker_id: str
    documents_completed: int
    mean_f: float
    stddev_f: float
    per_document_f: dict[str, float]


def worker_report(
    submissions: Iterable["Submission"],
    gold: GoldCorpus,
    worker_id: Optional[str] = None,
) -> WorkerReport:
    """Score one worker's submissions document by document.

    Mean and standard deviation are over per-document F values; the stddev is
    the population form (divide by n). An empty submission list yields a
    zeroed report.
    """
    per_doc: dict[str, float] = {}
    wid = worker_id
    for sub in submissions:
        if wid is None:
            wid = sub.worker_id
        elif sub.worker_id != wid:
            raise ValueError(
                f"submissions mix workers {wid!r} and {sub.worker_id!r}"
            )
        if sub.doc_id in per_doc:
            raise DuplicateSubmission(
                f"worker {wid} submitted document {sub.doc_id} twice"
            )
        if sub.doc_id not in gold.documents:
            raise UnknownDocument(f"submission references unknown document {sub.doc_id}")
        result = match_strict(gold.gold_spans(sub.doc_id), sub.spans)
        per_doc[sub.doc_id] = score(*result.counts).f1
    values = list(per_doc.values())
    return WorkerReport(
        worker_id=wid if wid is not None else "",
        documents_completed=len(values),
        mean_f=statistics.fmean(values) if values else 0.0,
        stddev_f=statistics.pstdev(values) if values else 0.0,
        per_document_f=per_doc,
    )


def worker_reports(
    submissions: Iterable["Submission"], gold: GoldCorpus
) -> list[WorkerReport]:
    """One report per worker, sorted by worker id."""
    by_worker: dict[str, list["Submission"]] = {}
    for sub in submissions:
        by_worker.setdefault(sub.worker_id, []).append(sub)
    return [
        worker_report(subs, gold, worker_id=wid)
        for wid, subs in sorted(by_worker.items())
    ]
