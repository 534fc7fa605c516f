"""Worker lifecycle and task routing.

A worker moves REGISTERED -> (quiz) -> QUALIFIED -> (survey) -> SURVEYED ->
TRAINING(0..3) -> ACTIVE, with REJECTED and BLOCKED absorbing. Active workers
get a known-answer document every ``gold_interval``-th task; scoring under
0.5 F on three consecutive check documents blocks the worker permanently.

All mutations go through an append-only event log; `apply_event` is the
single transition function used both live and during replay, so replaying a
log reproduces the exact live state and feedback.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence, Union

from .aggregate import Submission
from .corpus import Document, DocumentGroup, GoldCorpus, Span, make_span
from .errors import CrowdspanError
from .scoring import match_strict, score
from .seeding import derived_rng
from .store import CorruptLog, EventLog, EventRecord, MemoryEventLog, validate_sequence


class LifecycleError(CrowdspanError):
    pass


class LengthMismatch(LifecycleError):
    """Quiz answers and answer key have different lengths."""


class WrongState(LifecycleError):
    """The operation is not legal in the worker's current state."""


class UnknownWorker(LifecycleError):
    pass


class DuplicateWorkerId(LifecycleError):
    pass


class NotAssigned(LifecycleError):
    """Submission for a document the worker was not assigned."""


class AlreadySubmitted(LifecycleError):
    pass


class OverlappingSpans(LifecycleError):
    pass


class WorkerState(str, Enum):
    REGISTERED = "REGISTERED"
    QUALIFIED = "QUALIFIED"
    REJECTED = "REJECTED"
    SURVEYED = "SURVEYED"
    TRAINING = "TRAINING"
    ACTIVE = "ACTIVE"
    BLOCKED = "BLOCKED"


class FeedbackKind(str, Enum):
    GOLD = "GOLD"
    PEER = "PEER"
    NONE = "NONE"


@dataclass(frozen=True)
class SurveyResponse:
    gender: str
    age: str
    occupation: str
    education: str
    motivations: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.motivations:
            raise ValueError("motivations must be non-empty")


@dataclass(frozen=True)
class Feedback:
    """What a worker sees after submitting one document."""

    kind: FeedbackKind
    false_positives: frozenset[Span] = frozenset()
    false_negatives: frozenset[Span] = frozenset()
    f_score: Optional[float] = None
    peer_spans: dict[str, frozenset[Span]] = field(default_factory=dict)


@dataclass(frozen=True)
class Assignment:
    worker_id: str
    doc_id: str
    context: DocumentGroup


@dataclass
class WorkerRecord:
    """One worker's state machine instance."""

    worker_id: str
    state: WorkerState = WorkerState.REGISTERED
    training_index: int = 0
    quiz_score: Optional[float] = None
    survey: Optional[SurveyResponse] = None
    gold_f_history: list[tuple[str, float]] = field(default_factory=list)
    consecutive_low_gold: int = 0
    seen_docs: set[str] = field(default_factory=set)
    pending: Optional[Assignment] = None
    post_training_assigned: int = 0


@dataclass(frozen=True)
class QuizQuestion:
    statement: str
    expected: bool
    explanation: str = ""


def load_quiz_bank(path: str) -> tuple[QuizQuestion, ...]:
    """Read the question bank: a JSON list of statement/expected/explanation records."""
    with open(path, "r", encoding="utf-8") as handle:
        raw = json.load(handle)
    return tuple(
        QuizQuestion(
            statement=str(q["statement"]),
            expected=bool(q["expected"]),
            explanation=str(q.get("explanation", "")),
        )
        for q in raw
    )


def quiz_key(bank: Iterable[QuizQuestion]) -> tuple[bool, ...]:
    return tuple(q.expected for q in bank)


@dataclass(frozen=True)
class ServiceConfig:
    """Routing parameters; the paper-shaped defaults are overridable."""

    training_doc_ids: tuple[str, ...]
    quiz_key: tuple[bool, ...]
    seed: int
    gold_interval: int = 10
    redundancy_target: int = 15
    pass_threshold: float = 0.80
    blocking_threshold: float = 0.5
    blocking_run: int = 3

    def __post_init__(self) -> None:
        if not self.training_doc_ids:
            raise ValueError("at least one training document is required")
        if not self.quiz_key:
            raise ValueError("quiz key must be non-empty")
        if self.gold_interval < 1 or self.redundancy_target < 1:
            raise ValueError("gold_interval and redundancy_target must be >= 1")


def grade_quiz(
    answers: Sequence[bool], key: Sequence[bool], pass_threshold: float = 0.80
) -> tuple[float, bool]:
    """Fraction of matching answers, and whether it clears the pass threshold."""
    if len(answers) != len(key) or len(key) == 0:
        raise LengthMismatch(
            f"answers ({len(answers)}) and key ({len(key)}) must be equal, non-zero length"
        )
    matches = sum(bool(a) is bool(k) for a, k in zip(answers, key))
    quiz_score = matches / len(key)
    return quiz_score, quiz_score >= pass_threshold


def update_blocking(
    worker: WorkerRecord, gold_f: float, *, threshold: float = 0.5, run: int = 3
) -> WorkerRecord:
    """Apply one interspersed-gold score to the blocking window.

    Strictly below-threshold scores extend the run, anything else resets it;
    the worker is blocked when the run length reaches ``run``.
    """
    if worker.state is not WorkerState.ACTIVE:
        raise WrongState(
            f"blocking updates apply to ACTIVE workers, not {worker.state.value}"
        )
    if gold_f < threshold:
        worker.consecutive_low_gold += 1
    else:
        worker.consecutive_low_gold = 0
    if worker.consecutive_low_gold >= run:
        worker.state = WorkerState.BLOCKED
    return worker


def peer_alias(seed: int, viewer_id: str, viewed_id: str) -> str:
    """Stable anonymous alias for ``viewed_id`` as shown to ``viewer_id``."""
    material = f"{seed}\x1f{viewer_id}\x1f{viewed_id}".encode("utf-8")
    return "annotator-" + hashlib.sha256(material).hexdigest()[:10]


@dataclass
class ServiceState:
    """Everything the router knows, rebuildable from the event log."""

    workers: dict[str, WorkerRecord]
    submissions: dict[tuple[str, str], Submission]
    by_doc: dict[str, list[Submission]]
    feedback_cache: dict[tuple[str, str], Feedback]

    @classmethod
    def empty(cls) -> "ServiceState":
        return cls(workers={}, submissions={}, by_doc={}, feedback_cache={})


def _worker_for(state: ServiceState, payload: dict) -> WorkerRecord:
    worker = state.workers.get(payload.get("worker_id", ""))
    if worker is None:
        raise CorruptLog(f"event references unknown worker {payload.get('worker_id')!r}")
    return worker


def apply_event(
    state: ServiceState,
    event: EventRecord,
    corpus: GoldCorpus,
    config: ServiceConfig,
) -> Optional[Feedback]:
    """The single state transition function, shared by live service and replay.

    Commands validate before appending; apply trusts the log and raises
    CorruptLog only on structurally impossible events. Returns the feedback
    for SUBMITTED events, None otherwise.
    """
    kind, payload = event.kind, event.payload
    if kind == "WORKER_REGISTERED":
        worker_id = payload["worker_id"]
        if worker_id in state.workers:
            raise CorruptLog(f"worker {worker_id} registered twice")
        state.workers[worker_id] = WorkerRecord(worker_id=worker_id)
        return None
    if kind == "QUIZ_GRADED":
        worker = _worker_for(state, payload)
        worker.quiz_score = float(payload["score"])
        worker.state = (
            WorkerState.QUALIFIED if payload["passed"] else WorkerState.REJECTED
        )
        return None
    if kind == "SURVEY_RECORDED":
        worker = _worker_for(state, payload)
        worker.survey = SurveyResponse(
            gender=payload["gender"],
            age=payload["age"],
            occupation=payload["occupation"],
            education=payload["education"],
            motivations=tuple(payload["motivations"]),
        )
        worker.state = WorkerState.SURVEYED
        return None
    if kind == "ASSIGNED":
        worker = _worker_for(state, payload)
        context = DocumentGroup(payload["context"])
        worker.pending = Assignment(worker.worker_id, payload["doc_id"], context)
        worker.seen_docs.add(payload["doc_id"])
        if worker.state is WorkerState.SURVEYED:
            worker.state = WorkerState.TRAINING
            worker.training_index = 0
        if context is not DocumentGroup.TRAINING:
            worker.post_training_assigned += 1
        return None
    if kind == "SUBMITTED":
        worker = _worker_for(state, payload)
        doc = corpus.documents.get(payload["doc_id"])
        if doc is None:
            raise CorruptLog(f"submission for unknown document {payload['doc_id']!r}")
        context = DocumentGroup(payload["context"])
        spans = frozenset(make_span(doc, int(s), int(e)) for s, e in payload["spans"])
        prior = [
            s
            for s in state.by_doc.get(doc.doc_id, [])
            if s.worker_id != worker.worker_id
        ]
        submission = Submission(
            worker_id=worker.worker_id,
            doc_id=doc.doc_id,
            spans=spans,
            submitted_at=event.at,
            context=context,
        )
        state.submissions[(worker.worker_id, doc.doc_id)] = submission
        state.by_doc.setdefault(doc.doc_id, []).append(submission)
        worker.pending = None

        if context in (DocumentGroup.TRAINING, DocumentGroup.GOLD_FEEDBACK):
            result = match_strict(corpus.gold_spans(doc.doc_id), spans)
            f1 = score(*result.counts).f1
            feedback = Feedback(
                kind=FeedbackKind.GOLD,
                false_positives=result.false_positives,
                false_negatives=result.false_negatives,
                f_score=f1,
            )
        elif prior:
            feedback = Feedback(
                kind=FeedbackKind.PEER,
                peer_spans={
                    peer_alias(config.seed, worker.worker_id, s.worker_id): s.spans
                    for s in prior
                },
            )
        else:
            feedback = Feedback(kind=FeedbackKind.NONE)

        token = payload.get("request_token")
        if token:
            state.feedback_cache[(worker.worker_id, token)] = feedback

        if worker.state is WorkerState.TRAINING and context is DocumentGroup.TRAINING:
            if worker.training_index >= len(config.training_doc_ids) - 1:
                worker.state = WorkerState.ACTIVE
            else:
                worker.training_index += 1
        elif (
            context is DocumentGroup.GOLD_FEEDBACK
            and worker.state is WorkerState.ACTIVE
        ):
            worker.gold_f_history.append((doc.doc_id, feedback.f_score or 0.0))
            update_blocking(
                worker,
                feedback.f_score or 0.0,
                threshold=config.blocking_threshold,
                run=config.blocking_run,
            )
        return feedback
    if kind == "BLOCKED":
        worker = _worker_for(state, payload)
        worker.state = WorkerState.BLOCKED
        return None
    raise CorruptLog(f"unknown event kind {kind!r}")


def rebuild_state(
    events: Iterable[EventRecord], corpus: GoldCorpus, config: ServiceConfig
) -> ServiceState:
    state = ServiceState.empty()
    for event in validate_sequence(events):
        apply_event(state, event, corpus, config)
    return state


def replay_with_feedback(
    events: Iterable[EventRecord], corpus: GoldCorpus, config: ServiceConfig
) -> tuple[ServiceState, list[Feedback]]:
    """Replay, also collecting the feedback each SUBMITTED event produces."""
    state = ServiceState.empty()
    feedbacks: list[Feedback] = []
    for event in validate_sequence(events):
        result = apply_event(state, event, corpus, config)
        if event.kind == "SUBMITTED":
            feedbacks.append(result)
    return state, feedbacks


SpanLike = Union[Span, tuple[int, int]]


def _normalize_spans(doc: Document, spans: Iterable[SpanLike]) -> list[tuple[int, int]]:
    keys: set[tuple[int, int]] = set()
    for s in spans:
        start, end = (s.start, s.end) if isinstance(s, Span) else (int(s[0]), int(s[1]))
        make_span(doc, start, end)  # bounds check
        keys.add((start, end))
    ordered = sorted(keys)
    for (_, prev_end), (next_start, _) in zip(ordered, ordered[1:]):
        if next_start < prev_end:
            raise OverlappingSpans(
                f"{doc.doc_id}: spans overlap near offset {next_start}"
            )
    return ordered


class AnnotationService:
    """Command layer: validates, appends an event, applies it.

    Per-worker mutations are serialized by the single-writer log; the state
    object is only ever advanced through :func:`apply_event`.
    """

    def __init__(
        self,
        corpus: GoldCorpus,
        config: ServiceConfig,
        log: Optional[EventLog] = None,
        clock: Optional[Callable[[], float]] = None,
    ) -> None:
        missing = [d for d in config.training_doc_ids if d not in corpus.documents]
        if missing:
            raise ValueError(f"training documents not in corpus: {missing}")
        self.corpus = corpus
        self.config = config
        self.log: EventLog = log if log is not None else MemoryEventLog()
        self.clock = clock if clock is not None else time.time
        self.state = rebuild_state(self.log.events(), corpus, config)

    # -- helpers -----------------------------------------------------------

    def _record(
        self, kind: str, payload: dict, at: Optional[float] = None
    ) -> Optional[Feedback]:
        stamp = self.clock() if at is None else at
        seq = self.log.append(kind, payload, at=stamp)
        return apply_event(
            self.state, EventRecord(seq, kind, payload, stamp), self.corpus, self.config
        )

    def _require(self, worker_id: str) -> WorkerRecord:
        worker = self.state.workers.get(worker_id)
        if worker is None:
            raise UnknownWorker(f"no such worker: {worker_id}")
        return worker

    def _doc_count(self, doc_id: str) -> int:
        return len(self.state.by_doc.get(doc_id, []))

    def _eligible(self, worker: WorkerRecord, group: DocumentGroup) -> list[str]:
        target = self.config.redundancy_target
        return [
            d
            for d in self.corpus.group_ids(group)
            if d not in worker.seen_docs and self._doc_count(d) < target
        ]

    def _choose(self, worker: WorkerRecord, candidates: list[str]) -> str:
        fewest = min(self._doc_count(d) for d in candidates)
        pool = sorted(d for d in candidates if self._doc_count(d) == fewest)
        rng = derived_rng(
            self.config.seed, "assign", worker.worker_id, len(worker.seen_docs)
        )
        return rng.choice(pool)

    # -- commands ----------------------------------------------------------

    def register_worker(
        self, worker_id: Optional[str] = None, at: Optional[float] = None
    ) -> WorkerRecord:
        if worker_id is None:
            n = len(self.state.workers) + 1
            while f"w{n:04d}" in self.state.workers:
                n += 1
            worker_id = f"w{n:04d}"
        elif worker_id in self.state.workers:
            raise DuplicateWorkerId(f"worker {worker_id} already registered")
        self._record("WORKER_REGISTERED", {"worker_id": worker_id}, at)
        return self.state.workers[worker_id]

    def grade_quiz(
        self, worker_id: str, answers: Sequence[bool], at: Optional[float] = None
    ) -> tuple[float, bool]:
        worker = self._require(worker_id)
        if worker.state is not WorkerState.REGISTERED:
            raise WrongState(f"quiz not available in state {worker.state.value}")
        quiz_score, passed = grade_quiz(
            answers, self.config.quiz_key, self.config.pass_threshold
        )
        self._record(
            "QUIZ_GRADED",
            {
                "worker_id": worker_id,
                "answers": [bool(a) for a in answers],
                "score": quiz_score,
                "passed": passed,
            },
            at,
        )
        return quiz_score, passed

    def record_survey(
        self,
        worker_id: str,
        response: SurveyResponse,
        at: Optional[float] = None,
    ) -> WorkerRecord:
        worker = self._require(worker_id)
        if worker.state is not WorkerState.QUALIFIED:
            raise WrongState(f"survey not available in state {worker.state.value}")
        self._record(
            "SURVEY_RECORDED",
            {
                "worker_id": worker_id,
                "gender": response.gender,
                "age": response.age,
                "occupation": response.occupation,
                "education": response.education,
                "motivations": list(response.motivations),
            },
            at,
        )
        return worker

    def next_task(
        self, worker_id: str, at: Optional[float] = None
    ) -> Optional[Assignment]:
        """The worker's current assignment, creating one if none is pending.

        Training documents come first in their fixed order. Active workers get
        a gold-feedback document on every ``gold_interval``-th task; otherwise
        the least-annotated unseen regular document (seeded random among
        ties), falling back to the gold pool when the regular pool is
        exhausted. Returns None when nothing is eligible.
        """
        worker = self._require(worker_id)
        allowed = (WorkerState.SURVEYED, WorkerState.TRAINING, WorkerState.ACTIVE)
        if worker.state not in allowed:
            raise WrongState(f"no tasks in state {worker.state.value}")
        if worker.pending is not None:
            return worker.pending
        if worker.state in (WorkerState.SURVEYED, WorkerState.TRAINING):
            idx = 0 if worker.state is WorkerState.SURVEYED else worker.training_index
            doc_id = self.config.training_doc_ids[idx]
            context = DocumentGroup.TRAINING
        else:
            task_number = worker.post_training_assigned + 1
            gold_pool = self._eligible(worker, DocumentGroup.GOLD_FEEDBACK)
            regular_pool = self._eligible(worker, DocumentGroup.REGULAR)
            if task_number % self.config.gold_interval == 0 and gold_pool:
                doc_id, context = self._choose(worker, gold_pool), DocumentGroup.GOLD_FEEDBACK
            elif regular_pool:
                doc_id, context = self._choose(worker, regular_pool), DocumentGroup.REGULAR
            elif gold_pool:
                doc_id, context = self._choose(worker, gold_pool), DocumentGroup.GOLD_FEEDBACK
            else:
                return None
        self._record(
            "ASSIGNED",
            {"worker_id": worker_id, "doc_id": doc_id, "context": context.value},
            at,
        )
        return worker.pending

    def submit(
        self,
        worker_id: str,
        doc_id: str,
        spans: Iterable[SpanLike],
        request_token: Optional[str] = None,
        at: Optional[float] = None,
    ) -> tuple[Feedback, WorkerRecord]:
        """Persist a submission, then compute its feedback.

        The submission is recorded before any feedback is derived, and a
        retried request token returns the original feedback without writing
        anything.
        """
        worker = self._require(worker_id)
        if request_token is not None:
            cached = self.state.feedback_cache.get((worker_id, request_token))
            if cached is not None:
                return cached, worker
        if (worker_id, doc_id) in self.state.submissions:
            raise AlreadySubmitted(f"{worker_id} already submitted {doc_id}")
        if worker.pending is None or worker.pending.doc_id != doc_id:
            raise NotAssigned(f"{doc_id} is not assigned to {worker_id}")
        doc = self.corpus.documents[doc_id]
        normalized = _normalize_spans(doc, spans)
        state_before = worker.state
        feedback = self._record(
            "SUBMITTED",
            {
                "worker_id": worker_id,
                "doc_id": doc_id,
                "spans": [[s, e] for s, e in normalized],
                "context": worker.pending.context.value,
                "request_token": request_token,
            },
            at,
        )
        if worker.state is WorkerState.BLOCKED and state_before is not WorkerState.BLOCKED:
            self._record("BLOCKED", {"worker_id": worker_id}, at)
        assert feedback is not None
        return feedback, worker

    # -- read side ---------------------------------------------------------

    def submissions(self) -> list[Submission]:
        return sorted(
            self.state.submissions.values(), key=lambda s: (s.submitted_at, s.worker_id)
        )

    def worker(self, worker_id: str) -> WorkerRecord:
        return self._require(worker_id)
