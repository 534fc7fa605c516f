"""Quality as a function of workers-per-document, by seeded subsampling.

For each document, draw n of its annotators without replacement, sweep the
voting threshold over 1..n, and record the best F. Repeating the draw gives a
mean and spread for "what quality would n-fold redundancy have bought".
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Iterable

from .aggregate import Submission, apply_threshold, group_by_document, sweep_k, tally_votes
from .corpus import GoldCorpus
from .errors import CrowdspanError
from .scoring import evaluate_corpus, match_strict, score
from .seeding import derived_rng


class NoSubmissions(CrowdspanError):
    """Nothing to sample from after filtering."""


@dataclass(frozen=True)
class RedundancyEstimate:
    n: int
    repetitions: int
    max_f_values: tuple[float, ...]
    mean_max_f: float
    stddev_max_f: float
    best_k_per_rep: tuple[int, ...]


def _best_k_mode(ks: Iterable[int]) -> int:
    return min(statistics.multimode(ks))


def estimate_redundancy(
    submissions: Iterable[Submission],
    gold: GoldCorpus,
    n: int,
    repetitions: int,
    seed: int,
    *,
    best_k_scope: str = "global",
    include_training: bool = False,
) -> RedundancyEstimate:
    """Subsample n workers per document, ``repetitions`` times.

    Per repetition the best voting threshold is chosen globally (one k for
    the whole sampled corpus, ties to the smallest k); ``best_k_scope=
    "per_document"`` instead picks each document's own best threshold before
    pooling. Deterministic for a fixed seed. Documents with fewer than n
    annotators contribute all of them.
    """
    if n < 1 or repetitions < 1:
        raise ValueError("n and repetitions must be >= 1")
    if best_k_scope not in ("global", "per_document"):
        raise ValueError(f"unknown best_k_scope {best_k_scope!r}")
    by_doc, eval_corpus = group_by_document(submissions, gold, include_training)
    if not by_doc:
        raise NoSubmissions("no submissions to sample from")
    ordered_docs = sorted(by_doc)
    per_doc = {d: sorted(by_doc[d], key=lambda s: s.worker_id) for d in ordered_docs}

    max_f_values: list[float] = []
    best_ks: list[int] = []
    for rep in range(repetitions):
        rng = derived_rng(seed, "redundancy", n, rep)
        sampled: list[Submission] = []
        for doc_id in ordered_docs:
            pool = per_doc[doc_id]
            sampled.extend(rng.sample(pool, min(n, len(pool))))
        if best_k_scope == "global":
            points = sweep_k(sampled, eval_corpus, n, include_training=True)
            best = points[0]
            for p in points[1:]:
                if p.metrics.f1 > best.metrics.f1:
                    best = p
            max_f_values.append(best.metrics.f1)
            best_ks.append(best.k)
        else:
            hypothesis = {}
            chosen_ks = []
            for doc_id in ordered_docs:
                tally = tally_votes([s for s in sampled if s.doc_id == doc_id])
                doc_gold = eval_corpus.gold_spans(doc_id)
                best_k, best_f, best_set = 1, -1.0, frozenset()
                for k in range(1, n + 1):
                    kept = apply_threshold(tally, k)
                    f1 = score(*match_strict(doc_gold, kept).counts).f1
                    if f1 > best_f:
                        best_k, best_f, best_set = k, f1, kept
                hypothesis[doc_id] = best_set
                chosen_ks.append(best_k)
            max_f_values.append(evaluate_corpus(eval_corpus, hypothesis).f1)
            best_ks.append(_best_k_mode(chosen_ks))

    return RedundancyEstimate(
        n=n,
        repetitions=repetitions,
        max_f_values=tuple(max_f_values),
        mean_max_f=statistics.fmean(max_f_values),
        stddev_max_f=statistics.pstdev(max_f_values),
        best_k_per_rep=tuple(best_ks),
    )


def redundancy_curve(
    submissions: Iterable[Submission],
    gold: GoldCorpus,
    n_max: int,
    repetitions: int = 10,
    seed: int = 0,
    **kwargs,
) -> list[RedundancyEstimate]:
    """Estimates for every n in 1..n_max (ten repetitions by default)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    subs = list(submissions)
    return [
        estimate_redundancy(subs, gold, n, repetitions, seed, **kwargs)
        for n in range(1, n_max + 1)
    ]


def redundancy_table(estimates: Iterable[RedundancyEstimate]) -> list[dict]:
    """Rows for the delimited curve export."""
    return [
        {
            "n": e.n,
            "mean_max_f": e.mean_max_f,
            "stddev_max_f": e.stddev_max_f,
            "best_k_mode": _best_k_mode(e.best_k_per_rep),
        }
        for e in estimates
    ]
