"""Append-only event log: the single source of truth for service state.

One self-describing JSON record per line, UTF-8. Sequence numbers are
assigned by the store, start at 1, and are gapless; replaying the log through
the lifecycle transition function reconstructs the exact live state.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Optional

from .errors import CrowdspanError

if TYPE_CHECKING:  # pragma: no cover
    from .aggregate import Submission
    from .corpus import GoldCorpus
    from .lifecycle import ServiceConfig, ServiceState

EVENT_KINDS = (
    "WORKER_REGISTERED",
    "QUIZ_GRADED",
    "SURVEY_RECORDED",
    "ASSIGNED",
    "SUBMITTED",
    "BLOCKED",
)


class StoreError(CrowdspanError):
    pass


class StorageFailure(StoreError):
    """The underlying file write failed."""


class CorruptLog(StoreError):
    """Sequence gap, undecodable line, or unknown event kind."""


@dataclass(frozen=True)
class EventRecord:
    sequence: int
    kind: str
    payload: dict
    at: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "sequence": self.sequence,
                "kind": self.kind,
                "at": self.at,
                "payload": self.payload,
            },
            ensure_ascii=False,
            sort_keys=True,
        )


def _decode_line(line: str, lineno: int) -> EventRecord:
    try:
        raw = json.loads(line)
        return EventRecord(
            sequence=int(raw["sequence"]),
            kind=str(raw["kind"]),
            payload=dict(raw["payload"]),
            at=float(raw["at"]),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptLog(f"line {lineno}: undecodable event record: {exc}") from exc


def validate_sequence(events: Iterable[EventRecord]) -> tuple[EventRecord, ...]:
    """Check 1..n gapless monotone sequencing and known kinds."""
    out = tuple(events)
    for i, event in enumerate(out, start=1):
        if event.sequence != i:
            raise CorruptLog(f"sequence gap: expected {i}, found {event.sequence}")
        if event.kind not in EVENT_KINDS:
            raise CorruptLog(f"sequence {event.sequence}: unknown kind {event.kind!r}")
    return out


class MemoryEventLog:
    """In-process log with the same contract as the file-backed one."""

    def __init__(self) -> None:
        self._events: list[EventRecord] = []

    def append(self, kind: str, payload: dict, at: Optional[float] = None) -> int:
        if kind not in EVENT_KINDS:
            raise StoreError(f"unknown event kind {kind!r}")
        seq = len(self._events) + 1
        self._events.append(
            EventRecord(seq, kind, payload, time.time() if at is None else at)
        )
        return seq

    def events(self) -> tuple[EventRecord, ...]:
        return tuple(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def close(self) -> None:
        pass


class FileEventLog:
    """Durable log: each append is flushed (and fsynced) before returning.

    Opening an existing file validates it and continues its sequence.
    """

    def __init__(self, path: str, fsync: bool = True) -> None:
        self.path = path
        self._fsync = fsync
        self._events = list(read_log(path)) if os.path.exists(path) else []
        try:
            self._handle = open(path, "a", encoding="utf-8")
        except OSError as exc:
            raise StorageFailure(f"cannot open log {path}: {exc}") from exc

    def append(self, kind: str, payload: dict, at: Optional[float] = None) -> int:
        if kind not in EVENT_KINDS:
            raise StoreError(f"unknown event kind {kind!r}")
        event = EventRecord(
            len(self._events) + 1, kind, payload, time.time() if at is None else at
        )
        try:
            self._handle.write(event.to_json() + "\n")
            self._handle.flush()
            if self._fsync:
                os.fsync(self._handle.fileno())
        except OSError as exc:
            raise StorageFailure(f"append to {self.path} failed: {exc}") from exc
        self._events.append(event)
        return event.sequence

    def events(self) -> tuple[EventRecord, ...]:
        return tuple(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def close(self) -> None:
        self._handle.close()


EventLog = MemoryEventLog | FileEventLog


def read_log(path: str) -> tuple[EventRecord, ...]:
    """Read and validate a log file without interpreting the events."""
    events = []
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if line.strip() == "":
                    continue
                events.append(_decode_line(line, lineno))
    except OSError as exc:
        raise StorageFailure(f"cannot read log {path}: {exc}") from exc
    return validate_sequence(events)


def replay(
    events: Iterable[EventRecord],
    corpus: "GoldCorpus",
    config: "ServiceConfig",
) -> "ServiceState":
    """Fold the log through the lifecycle transition function.

    The result is field-identical to the live state at the moment of the last
    append.
    """
    from .lifecycle import ServiceState, apply_event

    state = ServiceState.empty()
    for event in validate_sequence(events):
        apply_event(state, event, corpus, config)
    return state


def load_submissions(
    events: Iterable[EventRecord], corpus: "GoldCorpus"
) -> list["Submission"]:
    """Extract SUBMITTED events as Submission values, in log order.

    This is the analysis path: it works on full service logs and on imported
    dumps alike, without requiring lifecycle events.
    """
    from .aggregate import Submission
    from .corpus import DocumentGroup, make_span

    subs: list[Submission] = []
    for event in events:
        if event.kind != "SUBMITTED":
            continue
        p = event.payload
        doc = corpus.documents.get(p["doc_id"])
        if doc is None:
            raise CorruptLog(
                f"sequence {event.sequence}: submission for unknown document "
                f"{p['doc_id']!r}"
            )
        spans = frozenset(make_span(doc, int(s), int(e)) for s, e in p["spans"])
        subs.append(
            Submission(
                worker_id=p["worker_id"],
                doc_id=p["doc_id"],
                spans=spans,
                submitted_at=event.at,
                context=DocumentGroup(p.get("context", "REGULAR")),
            )
        )
    return subs


def import_submission_dump(
    rows: Iterable[dict[str, str]],
    corpus: "GoldCorpus",
    log: EventLog,
    *,
    worker_col: str = "worker_id",
    doc_col: str = "doc_id",
    start_col: str = "start",
    end_col: str = "end",
    on_bad_row: Optional[Callable[[int, str], None]] = None,
) -> int:
    """Map an external submission dump into SUBMITTED events.

    ``rows`` is any iterable of column-name -> value records (e.g. a
    csv.DictReader). Rows sharing (worker, document) merge into one
    submission; the context comes from the corpus partition. Returns the
    number of submissions written.
    """
    from .corpus import DocumentGroup

    grouped: dict[tuple[str, str], list[tuple[int, int]]] = {}
    order: list[tuple[str, str]] = []
    for i, row in enumerate(rows, start=1):
        try:
            worker = row[worker_col].strip()
            doc_id = row[doc_col].strip()
            start, end = int(row[start_col]), int(row[end_col])
        except (KeyError, ValueError) as exc:
            if on_bad_row is not None:
                on_bad_row(i, str(exc))
                continue
            raise StoreError(f"dump row {i}: {exc}") from exc
        if doc_id not in corpus.documents:
            if on_bad_row is not None:
                on_bad_row(i, f"unknown document {doc_id}")
                continue
            raise StoreError(f"dump row {i}: unknown document {doc_id}")
        key = (worker, doc_id)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append((start, end))
    for n, (worker, doc_id) in enumerate(order):
        group = corpus.partition.get(doc_id, DocumentGroup.REGULAR)
        log.append(
            "SUBMITTED",
            {
                "worker_id": worker,
                "doc_id": doc_id,
                "spans": sorted(set(grouped[(worker, doc_id)])),
                "context": group.value,
                "request_token": None,
            },
            at=float(n),
        )
    return len(order)
