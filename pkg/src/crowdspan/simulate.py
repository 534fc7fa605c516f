"""Synthetic annotators for desk-scale pipeline runs.

Each simulated worker has a profile of error rates: a probability of missing
a true span, a rate of spurious spans per 100 tokens, and a probability of
producing a true span with one boundary off by a token. A campaign drives the
real lifecycle service end to end (quiz, survey, training, routed tasks) and
is a pure function of (corpus, params, redundancy, seed).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Optional

from .aggregate import Submission
from .corpus import Document, DocumentGroup, GoldCorpus, Span, make_span
from .errors import CrowdspanError
from .lifecycle import (
    AnnotationService,
    ServiceConfig,
    SurveyResponse,
    WorkerState,
)
from .seeding import derive_seed, derived_rng
from .store import EventLog


class SimulateError(CrowdspanError):
    pass


class InvalidDistribution(SimulateError):
    """A profile distribution can produce values outside the legal range."""


@dataclass(frozen=True)
class Distribution:
    """Small parametric family for drawing profile fields.

    kinds: ``point(value)``, ``uniform(low, high)``, ``beta(alpha, beta, scale)``.
    """

    kind: str
    args: tuple[float, ...]

    @classmethod
    def point(cls, value: float) -> "Distribution":
        return cls("point", (float(value),))

    @classmethod
    def uniform(cls, low: float, high: float) -> "Distribution":
        if high < low:
            raise InvalidDistribution(f"uniform high {high} < low {low}")
        return cls("uniform", (float(low), float(high)))

    @classmethod
    def beta(cls, alpha: float, beta: float, scale: float = 1.0) -> "Distribution":
        if alpha <= 0 or beta <= 0 or scale <= 0:
            raise InvalidDistribution("beta parameters must be positive")
        return cls("beta", (float(alpha), float(beta), float(scale)))

    @classmethod
    def from_dict(cls, raw: dict) -> "Distribution":
        kind = raw.get("kind")
        if kind == "point":
            return cls.point(raw["value"])
        if kind == "uniform":
            return cls.uniform(raw["low"], raw["high"])
        if kind == "beta":
            return cls.beta(raw["alpha"], raw["beta"], raw.get("scale", 1.0))
        raise InvalidDistribution(f"unknown distribution kind {kind!r}")

    def bounds(self) -> tuple[float, float]:
        if self.kind == "point":
            return self.args[0], self.args[0]
        if self.kind == "uniform":
            return self.args[0], self.args[1]
        return 0.0, self.args[2]

    def sample(self, rng: random.Random) -> float:
        if self.kind == "point":
            return self.args[0]
        if self.kind == "uniform":
            return rng.uniform(self.args[0], self.args[1])
        alpha, beta, scale = self.args
        return rng.betavariate(alpha, beta) * scale


@dataclass(frozen=True)
class SimWorkerProfile:
    worker_id: str
    p_miss: float
    p_spurious: float
    p_boundary: float
    ability_seed: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_miss <= 1.0 and 0.0 <= self.p_boundary <= 1.0):
            raise ValueError("p_miss and p_boundary must be in [0, 1]")
        if self.p_spurious < 0.0:
            raise ValueError("p_spurious must be >= 0")


@dataclass(frozen=True)
class PopulationParams:
    """Distributions the worker profiles are drawn from."""

    n_workers: int
    miss_distribution: Distribution = Distribution.point(0.0)
    spurious_distribution: Distribution = Distribution.point(0.0)
    boundary_distribution: Distribution = Distribution.point(0.0)

    def __post_init__(self) -> None:
        if self.n_workers < 1:
            raise ValueError("n_workers must be >= 1")
        for name, dist, lo, hi in (
            ("miss", self.miss_distribution, 0.0, 1.0),
            ("boundary", self.boundary_distribution, 0.0, 1.0),
            ("spurious", self.spurious_distribution, 0.0, math.inf),
        ):
            dlo, dhi = dist.bounds()
            if dlo < lo or dhi > hi:
                raise InvalidDistribution(
                    f"{name} distribution range [{dlo}, {dhi}] outside [{lo}, {hi}]"
                )

    @classmethod
    def from_dict(cls, raw: dict) -> "PopulationParams":
        return cls(
            n_workers=int(raw["n_workers"]),
            miss_distribution=Distribution.from_dict(raw.get("miss", {"kind": "point", "value": 0.0})),
            spurious_distribution=Distribution.from_dict(raw.get("spurious", {"kind": "point", "value": 0.0})),
            boundary_distribution=Distribution.from_dict(raw.get("boundary", {"kind": "point", "value": 0.0})),
        )


def sample_population(params: PopulationParams, seed: int) -> tuple[SimWorkerProfile, ...]:
    """Draw ``n_workers`` profiles; identical for identical (params, seed)."""
    rng = derived_rng(seed, "population")
    profiles = []
    for i in range(params.n_workers):
        worker_id = f"sim{i + 1:04d}"
        profiles.append(
            SimWorkerProfile(
                worker_id=worker_id,
                p_miss=min(1.0, max(0.0, params.miss_distribution.sample(rng))),
                p_spurious=max(0.0, params.spurious_distribution.sample(rng)),
                p_boundary=min(1.0, max(0.0, params.boundary_distribution.sample(rng))),
                ability_seed=derive_seed(seed, "ability", worker_id),
            )
        )
    return tuple(profiles)


def _poisson(rng: random.Random, lam: float) -> int:
    # Knuth's multiplication method; fine for the small rates used here.
    if lam <= 0.0:
        return 0
    limit = math.exp(-lam)
    k = 0
    p = rng.random()
    while p > limit:
        k += 1
        p *= rng.random()
    return k


def _overlaps(placed: list[tuple[int, int]], start: int, end: int) -> bool:
    return any(s < end and e > start for s, e in placed)


def _token_range(doc: Document, start: int, end: int) -> Optional[tuple[int, int]]:
    hit = [
        i
        for i, (ts, te) in enumerate(doc.token_boundaries)
        if ts < end and te > start
    ]
    return (hit[0], hit[-1]) if hit else None


def _perturbed_key(
    doc: Document, span: Span, rng: random.Random
) -> Optional[tuple[int, int]]:
    """Move one end of the span by one token; None means the span collapsed."""
    move_start = rng.random() < 0.5
    direction = 1 if rng.random() < 0.5 else -1
    covered = _token_range(doc, span.start, span.end)
    if covered is None:
        return (span.start, span.end)
    i, j = covered
    if move_start:
        i += direction
    else:
        j += direction
    last = len(doc.token_boundaries) - 1
    i, j = max(0, min(i, last)), max(0, min(j, last))
    if i > j:
        return None
    return (doc.token_boundaries[i][0], doc.token_boundaries[j][1])


def simulate_annotation(
    profile: SimWorkerProfile,
    doc: Document,
    gold_spans: Iterable[Span],
    rng: random.Random,
) -> frozenset[Span]:
    """One worker's span set for one document.

    Gold spans drop with p_miss; survivors get a one-token boundary shift
    with p_boundary (discarded if they collapse or collide); spurious spans
    arrive Poisson(p_spurious * tokens/100) as random 1-3 token selections
    over unannotated text, rejection-sampled with a bounded retry budget.
    """
    placed: list[tuple[int, int]] = []
    out: list[Span] = []
    for span in sorted(gold_spans, key=lambda s: s.key):
        if rng.random() < profile.p_miss:
            continue
        key: Optional[tuple[int, int]] = (span.start, span.end)
        if rng.random() < profile.p_boundary:
            key = _perturbed_key(doc, span, rng)
        if key is None or _overlaps(placed, *key):
            continue
        placed.append(key)
        out.append(make_span(doc, *key))

    tokens = doc.token_boundaries
    if tokens:
        lam = profile.p_spurious * len(tokens) / 100.0
        for _ in range(_poisson(rng, lam)):
            for _attempt in range(10):
                i = rng.randrange(len(tokens))
                j = min(i + rng.randint(1, 3) - 1, len(tokens) - 1)
                start, end = tokens[i][0], tokens[j][1]
                if not _overlaps(placed, start, end):
                    placed.append((start, end))
                    out.append(make_span(doc, start, end))
                    break
    return frozenset(out)


DEFAULT_SIM_QUIZ_KEY = (True, False, True, True, False, True, False, True, True, False)

_GENDERS = ("female", "male", "nonbinary", "undisclosed")
_AGES = ("18-25", "26-35", "36-45", "46+")
_OCCUPATIONS = ("technical", "science", "student", "unemployed", "other")
_EDUCATION = ("high-school", "college", "masters", "phd")
_MOTIVATIONS = ("earn-money", "help-science", "entertainment")


def _synthetic_survey(profile: SimWorkerProfile) -> SurveyResponse:
    rng = derived_rng(profile.ability_seed, "survey")
    picks = [m for m in _MOTIVATIONS if rng.random() < 0.5]
    return SurveyResponse(
        gender=rng.choice(_GENDERS),
        age=rng.choice(_AGES),
        occupation=rng.choice(_OCCUPATIONS),
        education=rng.choice(_EDUCATION),
        motivations=tuple(picks) if picks else (_MOTIVATIONS[0],),
    )


def campaign_service(
    corpus: GoldCorpus,
    params: PopulationParams,
    redundancy: int,
    seed: int,
    *,
    gold_interval: int = 10,
    quiz_fail_threshold: Optional[float] = 0.8,
    log: Optional[EventLog] = None,
    inject: tuple[SimWorkerProfile, ...] = (),
) -> AnnotationService:
    """Run a full simulated campaign and return the service that ran it.

    Workers arrive one at a time: quiz (failed outright by profiles whose
    p_miss exceeds ``quiz_fail_threshold``), survey, the four training
    documents, then routed tasks until nothing is eligible or they are
    blocked. The campaign stops once every non-training document has
    ``redundancy`` submissions or the worker pool is exhausted. ``inject``
    prepends hand-built profiles (e.g. an adversary) to the sampled crowd.
    """
    if redundancy < 1:
        raise ValueError("redundancy must be >= 1")
    if not corpus.training_ids:
        raise SimulateError(
            "corpus has no TRAINING documents; call partition_corpus first"
        )
    config = ServiceConfig(
        training_doc_ids=corpus.training_ids,
        quiz_key=DEFAULT_SIM_QUIZ_KEY,
        seed=seed,
        gold_interval=gold_interval,
        redundancy_target=redundancy,
    )
    clock = itertools.count(0.0, 1.0)
    service = AnnotationService(corpus, config, log=log, clock=lambda: next(clock))
    fillable = [
        d
        for d, g in corpus.partition.items()
        if g in (DocumentGroup.REGULAR, DocumentGroup.GOLD_FEEDBACK)
    ]

    def saturated() -> bool:
        return all(len(service.state.by_doc.get(d, [])) >= redundancy for d in fillable)

    for profile in inject + sample_population(params, seed):
        if saturated():
            break
        service.register_worker(profile.worker_id)
        passes = quiz_fail_threshold is None or profile.p_miss <= quiz_fail_threshold
        answers = (
            config.quiz_key if passes else tuple(not a for a in config.quiz_key)
        )
        _, passed = service.grade_quiz(profile.worker_id, answers)
        if not passed:
            continue
        service.record_survey(profile.worker_id, _synthetic_survey(profile))
        rng = derived_rng(seed, "annotate", profile.worker_id)
        while True:
            task = service.next_task(profile.worker_id)
            if task is None:
                break
            doc = corpus.documents[task.doc_id]
            spans = simulate_annotation(
                profile, doc, corpus.gold_spans(task.doc_id), rng
            )
            _, record = service.submit(profile.worker_id, task.doc_id, spans)
            if record.state is WorkerState.BLOCKED:
                break
    return service


def run_campaign(
    corpus: GoldCorpus,
    params: PopulationParams,
    redundancy: int,
    seed: int,
    **kwargs,
) -> list[Submission]:
    """Campaign submissions in submission order; see :func:`campaign_service`."""
    return campaign_service(corpus, params, redundancy, seed, **kwargs).submissions()
