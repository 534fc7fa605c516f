"""Crowdsourced span annotation: corpus handling, routing, aggregation, scoring."""

from .aggregate import Submission, SweepPoint, VoteTally, apply_threshold, sweep_k, tally_votes
from .corpus import (
    Document,
    DocumentGroup,
    GoldCorpus,
    Span,
    load_pubtator,
    parse_pubtator,
    partition_corpus,
    serialize_pubtator,
    snap_to_tokens,
    tokenize,
)
from .costing import CostParams, campaign_cost
from .lifecycle import (
    AnnotationService,
    Feedback,
    FeedbackKind,
    ServiceConfig,
    SurveyResponse,
    WorkerRecord,
    WorkerState,
    grade_quiz,
    update_blocking,
)
from .redundancy import RedundancyEstimate, estimate_redundancy, redundancy_curve
from .scoring import Metrics, evaluate_corpus, match_strict, score, worker_report
from .simulate import PopulationParams, SimWorkerProfile, run_campaign, sample_population, simulate_annotation

__version__ = "0.1.0"
