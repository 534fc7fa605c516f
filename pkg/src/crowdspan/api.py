"""HTTP service: annotator lifecycle endpoints plus operator analysis.

Request and response bodies are JSON; the exact field names are frozen in
docs/api.md. Worker identifiers never leak across workers: peer feedback uses
stable anonymous aliases.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .aggregate import sweep_k, sweep_table
from .corpus import (
    CorpusError,
    DocumentGroup,
    NoTokenInRange,
    Span,
    load_pubtator,
    partition_corpus,
    snap_to_tokens,
)
from .costing import CostParams, cost_breakdown
from .errors import CrowdspanError
from .lifecycle import (
    AlreadySubmitted,
    AnnotationService,
    DuplicateWorkerId,
    Feedback,
    LengthMismatch,
    NotAssigned,
    OverlappingSpans,
    QuizQuestion,
    ServiceConfig,
    SurveyResponse,
    UnknownWorker,
    WorkerState,
    WrongState,
    load_quiz_bank,
    quiz_key,
)
from .redundancy import redundancy_curve, redundancy_table
from .store import FileEventLog


class CorpusLoadError(CrowdspanError):
    """The corpus file is missing or does not parse."""


DEFAULT_QUIZ_BANK: tuple[QuizQuestion, ...] = (
    QuizQuestion(
        "In 'patients with cystic fibrosis (CF)', both 'cystic fibrosis' and 'CF' should be highlighted.",
        True,
        "A disease and its short form are separate mentions; mark both.",
    ),
    QuizQuestion(
        "In 'children with juvenile idiopathic arthritis', highlighting only 'arthritis' is correct.",
        False,
        "Cover the whole disease phrase, not a fragment of it.",
    ),
    QuizQuestion(
        "In 'children with Tay-Sachs and Gaucher disease', a single highlight covering the whole phrase is correct.",
        True,
        "A phrase naming several diseases at once is kept as one span.",
    ),
    QuizQuestion(
        "Symptoms such as 'chronic joint pain' should be highlighted.",
        True,
        "Symptoms count as disease mentions.",
    ),
    QuizQuestion(
        "If a disease is mentioned three times, highlighting only the first mention is enough.",
        False,
        "Each repetition gets its own highlight.",
    ),
    QuizQuestion(
        "In 'the TP53 gene is linked to sarcoma', the word 'TP53' should be highlighted.",
        False,
        "Genes are out of scope; mark just 'sarcoma'.",
    ),
    QuizQuestion(
        "A general disease group such as 'autoimmune disorders' should be highlighted.",
        True,
        "Disease groups count as disease mentions.",
    ),
    QuizQuestion(
        "Highlights may include surrounding words that are not part of the disease name.",
        False,
        "Keep the highlight to the disease span itself.",
    ),
    QuizQuestion(
        "A word that names both a gene and a disease is marked only where it means the disease.",
        True,
        "Pick the meaning in context before marking.",
    ),
    QuizQuestion(
        "Overlapping highlights of the same words are allowed.",
        False,
        "Ranges never overlap; merge them into one span.",
    ),
)


@dataclass(frozen=True)
class ApiConfig:
    """Everything needed to boot the service."""

    corpus_path: str
    seed: int
    host: str = "127.0.0.1"
    port: int = 8000
    log_path: Optional[str] = None
    redundancy_target: int = 15
    gold_interval: int = 10
    training_doc_ids: Optional[tuple[str, ...]] = None
    training_count: int = 4
    gold_fraction: float = 0.10
    quiz_path: Optional[str] = None
    cost: CostParams = field(default_factory=CostParams)

    def __post_init__(self) -> None:
        if self.redundancy_target < 1 or self.gold_interval < 1:
            raise ValueError("redundancy_target and gold_interval must be >= 1")

    @classmethod
    def from_file(cls, path: str) -> "ApiConfig":
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
        cost_raw = raw.pop("cost", {})
        cost = CostParams(
            per_annotation_fee=Decimal(str(cost_raw.get("per_annotation_fee", "0.06"))),
            survey_fee=Decimal(str(cost_raw.get("survey_fee", "0.06"))),
            training_fee_per_doc=Decimal(str(cost_raw.get("training_fee_per_doc", "0.06"))),
            training_docs=int(cost_raw.get("training_docs", 4)),
            redundancy=int(cost_raw.get("redundancy", 15)),
        )
        if "training_doc_ids" in raw and raw["training_doc_ids"] is not None:
            raw["training_doc_ids"] = tuple(raw["training_doc_ids"])
        return cls(cost=cost, **raw)


def build_service(
    config: ApiConfig,
) -> tuple[AnnotationService, tuple[QuizQuestion, ...]]:
    """Load corpus and quiz bank, partition, and assemble the service."""
    if not os.path.exists(config.corpus_path):
        raise CorpusLoadError(f"corpus file not found: {config.corpus_path}")
    try:
        corpus = load_pubtator(config.corpus_path)
    except CorpusError as exc:
        raise CorpusLoadError(f"{config.corpus_path}: {exc}") from exc
    corpus = partition_corpus(
        corpus,
        training_ids=config.training_doc_ids,
        training_count=config.training_count,
        gold_fraction=config.gold_fraction,
        seed=config.seed,
    )
    bank = load_quiz_bank(config.quiz_path) if config.quiz_path else DEFAULT_QUIZ_BANK
    service_config = ServiceConfig(
        training_doc_ids=corpus.training_ids,
        quiz_key=quiz_key(bank),
        seed=config.seed,
        gold_interval=config.gold_interval,
        redundancy_target=config.redundancy_target,
    )
    log = FileEventLog(config.log_path) if config.log_path else None
    return AnnotationService(corpus, service_config, log=log), bank


class RegisterBody(BaseModel):
    worker_id: Optional[str] = None


class QuizBody(BaseModel):
    answers: list[bool]


class SurveyBody(BaseModel):
    gender: str
    age: str
    occupation: str
    education: str
    motivations: list[str] = Field(min_length=1)


class SpanBody(BaseModel):
    start: int
    end: int


class SubmissionBody(BaseModel):
    request_token: str = Field(min_length=1)
    doc_id: str
    spans: list[SpanBody]


def _span_payload(span: Span) -> dict:
    return {"start": span.start, "end": span.end, "surface": span.surface}


def _spans_payload(spans) -> list[dict]:
    return [_span_payload(s) for s in sorted(spans, key=lambda s: s.key)]


def _feedback_payload(feedback: Feedback, state: WorkerState) -> dict:
    return {
        "kind": feedback.kind.value,
        "f_score": feedback.f_score,
        "false_positives": _spans_payload(feedback.false_positives),
        "false_negatives": _spans_payload(feedback.false_negatives),
        "peer_spans": {
            alias: _spans_payload(spans)
            for alias, spans in sorted(feedback.peer_spans.items())
        },
        "worker_state": state.value,
    }


_CONFLICTS = (WrongState, NotAssigned, AlreadySubmitted, DuplicateWorkerId)
_BAD_REQUESTS = (OverlappingSpans, NoTokenInRange, LengthMismatch)


def create_app(
    service: AnnotationService,
    quiz_bank: tuple[QuizQuestion, ...] = DEFAULT_QUIZ_BANK,
    cost_params: Optional[CostParams] = None,
) -> FastAPI:
    app = FastAPI(title="crowdspan", docs_url=None, redoc_url=None)
    cost = cost_params if cost_params is not None else CostParams(
        redundancy=service.config.redundancy_target
    )

    @app.exception_handler(CrowdspanError)
    async def _domain_error(_request: Request, exc: CrowdspanError) -> JSONResponse:
        if isinstance(exc, UnknownWorker):
            status = 404
        elif isinstance(exc, _CONFLICTS):
            status = 409
        elif isinstance(exc, _BAD_REQUESTS):
            status = 400
        else:
            status = 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "documents": len(service.corpus.documents)}

    @app.post("/workers", status_code=201)
    def register(body: Optional[RegisterBody] = None) -> dict:
        worker = service.register_worker(body.worker_id if body else None)
        return {"worker_id": worker.worker_id, "state": worker.state.value}

    @app.get("/quiz")
    def quiz_questions() -> dict:
        return {"questions": [q.statement for q in quiz_bank]}

    @app.post("/workers/{worker_id}/quiz")
    def grade(worker_id: str, body: QuizBody) -> dict:
        quiz_score, passed = service.grade_quiz(worker_id, body.answers)
        return {
            "score": quiz_score,
            "passed": passed,
            "state": service.worker(worker_id).state.value,
        }

    @app.post("/workers/{worker_id}/survey")
    def survey(worker_id: str, body: SurveyBody) -> dict:
        worker = service.record_survey(
            worker_id,
            SurveyResponse(
                gender=body.gender,
                age=body.age,
                occupation=body.occupation,
                education=body.education,
                motivations=tuple(body.motivations),
            ),
        )
        return {"state": worker.state.value}

    @app.get("/workers/{worker_id}/next-task")
    def next_task(worker_id: str) -> Response:
        assignment = service.next_task(worker_id)
        if assignment is None:
            return Response(status_code=204)
        doc = service.corpus.documents[assignment.doc_id]
        return JSONResponse(
            {
                "doc_id": doc.doc_id,
                "title": doc.title,
                "body": doc.body,
                "context": assignment.context.value,
            }
        )

    @app.post("/workers/{worker_id}/submissions")
    def submit(worker_id: str, body: SubmissionBody) -> dict:
        doc = service.corpus.documents.get(body.doc_id)
        if doc is None:
            raise NotAssigned(f"{body.doc_id} is not assigned to {worker_id}")
        snapped = [snap_to_tokens(doc, s.start, s.end) for s in body.spans]
        feedback, worker = service.submit(
            worker_id, body.doc_id, snapped, request_token=body.request_token
        )
        return _feedback_payload(feedback, worker.state)

    @app.get("/admin/sweep")
    def admin_sweep(k_max: int = 15, include_training: bool = False) -> dict:
        points = sweep_k(
            service.submissions(),
            service.corpus,
            k_max,
            include_training=include_training,
        )
        return {"points": sweep_table(points)}

    @app.get("/admin/redundancy")
    def admin_redundancy(
        n_max: int = 15,
        reps: int = 10,
        seed: int = 0,
        scope: str = "global",
    ) -> dict:
        estimates = redundancy_curve(
            service.submissions(),
            service.corpus,
            n_max,
            repetitions=reps,
            seed=seed,
            best_k_scope=scope,
        )
        return {"points": redundancy_table(estimates)}

    @app.get("/admin/cost")
    def admin_cost() -> dict:
        trained = sum(
            1
            for w in service.state.workers.values()
            if w.state in (WorkerState.ACTIVE, WorkerState.BLOCKED)
        )
        paid_docs = sum(
            1
            for g in service.corpus.partition.values()
            if g is not DocumentGroup.TRAINING
        )
        return cost_breakdown(cost, trained, paid_docs)

    return app


def serve(config: ApiConfig) -> None:
    """Boot and run until interrupted; the store flushes on every append."""
    import uvicorn

    service, bank = build_service(config)
    app = create_app(service, quiz_bank=bank, cost_params=config.cost)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
