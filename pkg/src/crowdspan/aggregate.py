"""Merge redundant submissions by exact-span voting and threshold sweeps.

Each distinct (start, end) produced for a document gets one vote per worker;
spans with at least K votes survive aggregation. Sweeping K from 1 upward
trades recall (K=1 keeps the union) against precision (K=annotators keeps
only unanimous spans).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .corpus import DocumentGroup, GoldCorpus, Span
from .errors import CrowdspanError
from .scoring import Metrics, evaluate_corpus


class AggregateError(CrowdspanError):
    pass


class DuplicateWorker(AggregateError):
    """Two submissions for one document claim the same worker."""


@dataclass(frozen=True)
class Submission:
    """One worker's complete span set for one document, immutable once recorded."""

    worker_id: str
    doc_id: str
    spans: frozenset[Span]
    submitted_at: float
    context: DocumentGroup = DocumentGroup.REGULAR


@dataclass(frozen=True)
class VoteTally:
    """Per-document vote counts keyed by exact (start, end)."""

    doc_id: str
    votes: dict[tuple[int, int], int]
    annotator_count: int
    span_by_key: dict[tuple[int, int], Span] = field(repr=False, default_factory=dict)


@dataclass(frozen=True)
class SweepPoint:
    k: int
    metrics: Metrics


def tally_votes(submissions: Iterable[Submission]) -> VoteTally:
    """Count, per exact span, how many distinct workers produced it."""
    subs = list(submissions)
    if not subs:
        raise AggregateError("cannot tally zero submissions")
    doc_ids = {s.doc_id for s in subs}
    if len(doc_ids) > 1:
        raise AggregateError(f"submissions span several documents: {sorted(doc_ids)}")
    workers = [s.worker_id for s in subs]
    if len(set(workers)) != len(workers):
        dupes = sorted({w for w in workers if workers.count(w) > 1})
        raise DuplicateWorker(f"workers appear more than once: {dupes}")
    votes: dict[tuple[int, int], int] = {}
    span_by_key: dict[tuple[int, int], Span] = {}
    for sub in subs:
        for key in {span.key for span in sub.spans}:
            votes[key] = votes.get(key, 0) + 1
        for span in sub.spans:
            span_by_key.setdefault(span.key, span)
    return VoteTally(
        doc_id=doc_ids.pop(),
        votes=votes,
        annotator_count=len(subs),
        span_by_key=span_by_key,
    )


def apply_threshold(tally: VoteTally, k: int) -> frozenset[Span]:
    """Spans kept at threshold k: those with votes >= k."""
    if k < 1:
        raise ValueError(f"threshold must be >= 1, got {k}")
    return frozenset(
        tally.span_by_key[key] for key, count in tally.votes.items() if count >= k
    )


def group_by_document(
    submissions: Iterable[Submission],
    corpus: GoldCorpus,
    include_training: bool,
) -> tuple[dict[str, list[Submission]], GoldCorpus]:
    """Group submissions by document, optionally dropping the training pool.

    Training documents (by submission context or corpus partition) are
    excluded from pooled evaluation by default: every worker annotates them,
    so their annotator counts dwarf the rest of the corpus.
    """
    by_doc: dict[str, list[Submission]] = {}
    training_docs = set()
    for sub in submissions:
        by_doc.setdefault(sub.doc_id, []).append(sub)
        if sub.context is DocumentGroup.TRAINING:
            training_docs.add(sub.doc_id)
    if include_training:
        return by_doc, corpus
    training_docs.update(corpus.training_ids)
    by_doc = {d: subs for d, subs in by_doc.items() if d not in training_docs}
    eval_corpus = corpus.subset(d for d in corpus.documents if d not in training_docs)
    return by_doc, eval_corpus


def sweep_k(
    submissions: Iterable[Submission],
    gold: GoldCorpus,
    k_max: int,
    *,
    include_training: bool = False,
) -> list[SweepPoint]:
    """Aggregate at every threshold 1..k_max and score each against gold.

    Raising k can only shrink the kept set, so recall is non-increasing in k;
    that is asserted on every sweep. Precision usually rises with k but is
    not guaranteed to, and is not asserted.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    by_doc, eval_corpus = group_by_document(submissions, gold, include_training)
    tallies = {doc_id: tally_votes(subs) for doc_id, subs in by_doc.items()}
    points: list[SweepPoint] = []
    for k in range(1, k_max + 1):
        hypothesis = {
            doc_id: apply_threshold(tally, k) for doc_id, tally in tallies.items()
        }
        points.append(SweepPoint(k=k, metrics=evaluate_corpus(eval_corpus, hypothesis)))
    recalls = [p.metrics.recall for p in points]
    assert all(
        later <= earlier + 1e-12 for earlier, later in zip(recalls, recalls[1:])
    ), "recall must be non-increasing in k"
    return points


def best_sweep_point(points: Iterable[SweepPoint]) -> SweepPoint:
    """The point with maximum F; ties resolve to the smallest k."""
    best: Optional[SweepPoint] = None
    for p in points:
        if best is None or p.metrics.f1 > best.metrics.f1:
            best = p
    if best is None:
        raise ValueError("empty sweep")
    return best


def sweep_table(points: Iterable[SweepPoint]) -> list[dict[str, float | int]]:
    """Rows for the delimited sweep export: k plus the metrics record."""
    rows = []
    for p in points:
        row: dict[str, float | int] = {"k": p.k}
        row.update(p.metrics.as_record())
        rows.append(row)
    return rows
