"""PubTator corpus loading, serialization, and token arithmetic.

The on-disk format is line-oriented: a block per document separated by blank
lines, with a ``PMID|t|title`` line, a ``PMID|a|abstract`` line, then zero or
more tab-separated annotation lines ``PMID<TAB>start<TAB>end<TAB>mention[<TAB>type
[<TAB>concept]]``. Offsets index into ``full_text = title + " " + abstract``,
zero-based and half-open.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence

from .errors import CrowdspanError
from .seeding import derived_rng


class CorpusError(CrowdspanError):
    pass


class MalformedLine(CorpusError):
    """A line does not follow the block structure or delimiter layout."""


class OffsetMismatch(CorpusError):
    """An annotation's mention text does not equal the document slice."""


class DuplicateDocument(CorpusError):
    """The same PMID appears in more than one block."""


class NoTokenInRange(CorpusError):
    """A selection covers only whitespace, so there is nothing to snap to."""


_TOKEN_RE = re.compile(r"\S+")


def tokenize(text: str) -> tuple[tuple[int, int], ...]:
    """Boundaries of maximal non-whitespace runs, as (start, end) offsets."""
    return tuple((m.start(), m.end()) for m in _TOKEN_RE.finditer(text))


class DocumentGroup(str, Enum):
    """Which routing pool a document belongs to."""

    TRAINING = "TRAINING"
    GOLD_FEEDBACK = "GOLD_FEEDBACK"
    REGULAR = "REGULAR"


@dataclass(frozen=True)
class Document:
    """One abstract: title plus body with stable offsets over their join."""

    doc_id: str
    title: str
    body: str
    full_text: str = field(init=False, compare=False)
    token_boundaries: tuple[tuple[int, int], ...] = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "full_text", f"{self.title} {self.body}")
        object.__setattr__(self, "token_boundaries", tokenize(self.full_text))


@dataclass(frozen=True)
class Span:
    """A half-open character interval in one document; the unit of annotation."""

    doc_id: str
    start: int
    end: int
    surface: str
    label: Optional[str] = None

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span bounds [{self.start},{self.end})")
        if len(self.surface) != self.end - self.start:
            raise ValueError(
                f"surface length {len(self.surface)} does not cover "
                f"[{self.start},{self.end})"
            )

    @property
    def key(self) -> tuple[int, int]:
        return (self.start, self.end)


def make_span(doc: Document, start: int, end: int, label: Optional[str] = None) -> Span:
    """Build a span whose surface is, by construction, the document slice."""
    if not (0 <= start < end <= len(doc.full_text)):
        raise OffsetMismatch(
            f"{doc.doc_id}: span [{start},{end}) outside document of length "
            f"{len(doc.full_text)}"
        )
    return Span(doc.doc_id, start, end, doc.full_text[start:end], label)


def snap_to_tokens(doc: Document, raw_start: int, raw_end: int) -> Span:
    """Widen a raw selection to whole tokens.

    Returns the span from the start of the first token intersecting
    [raw_start, raw_end) to the end of the last one. Raises NoTokenInRange if
    the selection touches only whitespace.
    """
    if not (0 <= raw_start < raw_end <= len(doc.full_text)):
        raise ValueError(
            f"selection [{raw_start},{raw_end}) outside document of length "
            f"{len(doc.full_text)}"
        )
    hit = [
        (ts, te)
        for ts, te in doc.token_boundaries
        if ts < raw_end and te > raw_start
    ]
    if not hit:
        raise NoTokenInRange(
            f"{doc.doc_id}: selection [{raw_start},{raw_end}) covers no token"
        )
    return make_span(doc, hit[0][0], hit[-1][1])


@dataclass(frozen=True)
class GoldCorpus:
    """Documents, their gold spans, and the routing partition."""

    documents: dict[str, Document]
    gold: dict[str, frozenset[Span]]
    partition: dict[str, DocumentGroup]

    def doc_ids(self) -> tuple[str, ...]:
        return tuple(self.documents)

    def group_ids(self, group: DocumentGroup) -> tuple[str, ...]:
        return tuple(d for d, g in self.partition.items() if g is group)

    @property
    def training_ids(self) -> tuple[str, ...]:
        return self.group_ids(DocumentGroup.TRAINING)

    def gold_spans(self, doc_id: str) -> frozenset[Span]:
        return self.gold.get(doc_id, frozenset())

    def total_gold_spans(self) -> int:
        return sum(len(s) for s in self.gold.values())

    def subset(self, doc_ids: Iterable[str]) -> "GoldCorpus":
        keep = set(doc_ids)
        return GoldCorpus(
            documents={d: doc for d, doc in self.documents.items() if d in keep},
            gold={d: s for d, s in self.gold.items() if d in keep},
            partition={d: g for d, g in self.partition.items() if d in keep},
        )


def _blocks(lines: Iterable[str]) -> Iterator[list[str]]:
    block: list[str] = []
    for raw in lines:
        line = raw.rstrip("\r\n")
        if line == "":
            if block:
                yield block
                block = []
        else:
            block.append(line)
    if block:
        yield block


def _parse_text_line(line: str, marker: str) -> tuple[str, str]:
    parts = line.split("|", 2)
    if len(parts) != 3 or parts[1] != marker:
        raise MalformedLine(f"expected 'PMID|{marker}|...' line, got {line!r}")
    return parts[0], parts[2]


def parse_pubtator(text: str | Iterable[str]) -> GoldCorpus:
    """Parse PubTator blocks into a corpus.

    Every annotation is checked against the document: the mention text must
    equal ``full_text[start:end]`` (OffsetMismatch otherwise). The partition
    starts out all-REGULAR; see :func:`partition_corpus`.
    """
    lines = text.splitlines(keepends=True) if isinstance(text, str) else text
    documents: dict[str, Document] = {}
    gold: dict[str, frozenset[Span]] = {}
    for block in _blocks(lines):
        if len(block) < 2:
            raise MalformedLine(f"block too short: {block[0]!r}")
        doc_id, title = _parse_text_line(block[0], "t")
        abs_id, body = _parse_text_line(block[1], "a")
        if abs_id != doc_id:
            raise MalformedLine(
                f"abstract PMID {abs_id!r} does not match title PMID {doc_id!r}"
            )
        if doc_id in documents:
            raise DuplicateDocument(f"document {doc_id} appears more than once")
        doc = Document(doc_id, title, body)
        spans: dict[tuple[int, int], Span] = {}
        for line in block[2:]:
            fields = line.split("\t")
            if not 4 <= len(fields) <= 6:
                raise MalformedLine(
                    f"{doc_id}: expected 4-6 tab-separated fields, got {line!r}"
                )
            if fields[0] != doc_id:
                raise MalformedLine(
                    f"annotation PMID {fields[0]!r} does not match block {doc_id!r}"
                )
            try:
                start, end = int(fields[1]), int(fields[2])
            except ValueError:
                raise MalformedLine(f"{doc_id}: non-integer offsets in {line!r}")
            mention = fields[3]
            label = fields[4] if len(fields) >= 5 and fields[4] != "" else None
            if not (0 <= start < end <= len(doc.full_text)):
                raise OffsetMismatch(
                    f"{doc_id}: offsets [{start},{end}) outside document of "
                    f"length {len(doc.full_text)}"
                )
            if doc.full_text[start:end] != mention:
                raise OffsetMismatch(
                    f"{doc_id}: [{start},{end}) is "
                    f"{doc.full_text[start:end]!r}, annotation says {mention!r}"
                )
            spans.setdefault((start, end), Span(doc_id, start, end, mention, label))
        documents[doc_id] = doc
        gold[doc_id] = frozenset(spans.values())
    partition = {d: DocumentGroup.REGULAR for d in documents}
    return GoldCorpus(documents=documents, gold=gold, partition=partition)


def load_pubtator(path: str) -> GoldCorpus:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_pubtator(handle)


def serialize_pubtator(corpus: GoldCorpus) -> str:
    """Emit the block format; inverse of parse up to span ordering."""
    out: list[str] = []
    for doc_id, doc in corpus.documents.items():
        out.append(f"{doc_id}|t|{doc.title}")
        out.append(f"{doc_id}|a|{doc.body}")
        for span in sorted(corpus.gold_spans(doc_id), key=lambda s: s.key):
            fields = [doc_id, str(span.start), str(span.end), span.surface]
            if span.label is not None:
                fields.append(span.label)
            out.append("\t".join(fields))
        out.append("")
    return "\n".join(out)


def partition_corpus(
    corpus: GoldCorpus,
    *,
    training_ids: Optional[Sequence[str]] = None,
    gold_feedback_ids: Optional[Sequence[str]] = None,
    training_count: int = 4,
    gold_fraction: float = 0.10,
    seed: Optional[int] = None,
) -> GoldCorpus:
    """Assign every document to TRAINING, GOLD_FEEDBACK, or REGULAR.

    Explicit ID lists win; anything unspecified is drawn from a seeded
    shuffle, with ``ceil(gold_fraction * len(documents))`` gold-feedback
    documents (the 593-document default yields the 4 / 60 / 529 split).
    """
    all_ids = list(corpus.documents)
    unknown = [d for d in (list(training_ids or []) + list(gold_feedback_ids or [])) if d not in corpus.documents]
    if unknown:
        raise CorpusError(f"partition references unknown documents: {unknown}")
    if training_ids is not None and gold_feedback_ids is not None:
        overlap = set(training_ids) & set(gold_feedback_ids)
        if overlap:
            raise CorpusError(f"documents in both training and gold lists: {sorted(overlap)}")
    rng = None
    if training_ids is None or gold_feedback_ids is None:
        if seed is None:
            raise CorpusError("partition draw requires a seed when ID lists are not explicit")
        rng = derived_rng(seed, "partition")
        shuffled = sorted(all_ids)
        rng.shuffle(shuffled)
    else:
        shuffled = []

    if training_ids is None:
        training = shuffled[:training_count]
        remaining = shuffled[training_count:]
    else:
        training = list(training_ids)
        remaining = [d for d in shuffled if d not in set(training)]

    if gold_feedback_ids is None:
        gold_count = math.ceil(gold_fraction * len(all_ids))
        remaining = [d for d in remaining if d not in set(training)]
        gold_docs = remaining[:gold_count]
    else:
        gold_docs = list(gold_feedback_ids)

    partition = {d: DocumentGroup.REGULAR for d in all_ids}
    for d in training:
        partition[d] = DocumentGroup.TRAINING
    for d in gold_docs:
        partition[d] = DocumentGroup.GOLD_FEEDBACK
    return replace(corpus, partition=partition)
