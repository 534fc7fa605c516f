import random

import pytest
from hypothesis import given, strategies as st

from crowdspan.aggregate import Submission
from crowdspan.corpus import DocumentGroup, GoldCorpus, make_span
from crowdspan.scoring import (
    DuplicateSubmission,
    MixedDocuments,
    UnknownDocument,
    evaluate_corpus,
    match_strict,
    score,
    worker_report,
    worker_reports,
)

from .conftest import synthetic_corpus, text_doc, token_span

# Integer counts that make precision exactly 0.862 and recall exactly 0.883:
# tp = 862 * 883, tp + fp = 883000, tp + fn = 862000.
PEAK_TP, PEAK_FP, PEAK_FN = 761146, 121854, 100854


def spans(doc, *keys):
    return {make_span(doc, s, e) for s, e in keys}


class TestMatchStrict:
    def test_identical_sets(self):
        doc = text_doc("d", "aa bb cc dd ee ff gg hh ii jj kk")
        gold = spans(doc, (0, 5), (10, 20))
        result = match_strict(gold, spans(doc, (0, 5), (10, 20)))
        assert result.counts == (2, 0, 0)

    def test_overlap_earns_nothing(self):
        doc = text_doc("d", "early onset breast cancer cases")
        gold = {make_span(doc, 0, 25)}
        hyp = {make_span(doc, 12, 25)}
        assert gold.pop().surface == "early onset breast cancer"
        result = match_strict({make_span(doc, 0, 25)}, hyp)
        assert result.counts == (0, 1, 1)

    def test_hand_count(self):
        doc = text_doc("d", "aa bb cc dd ee")
        a, b, c, d = (make_span(doc, *k) for k in ((0, 2), (3, 5), (6, 8), (9, 11)))
        result = match_strict({a, b, c}, {a, b, d})
        assert result.counts == (2, 1, 1)
        assert result.false_positives == {d}
        assert result.false_negatives == {c}

    def test_mixed_documents_rejected(self):
        d1 = text_doc("d1", "aa bb")
        d2 = text_doc("d2", "aa bb")
        with pytest.raises(MixedDocuments):
            match_strict({make_span(d1, 0, 2)}, {make_span(d2, 0, 2)})

    def test_duplicates_collapse(self):
        doc = text_doc("d", "aa bb cc")
        result = match_strict(
            [make_span(doc, 0, 2), make_span(doc, 0, 2)],
            [make_span(doc, 0, 2), make_span(doc, 0, 2)],
        )
        assert result.counts == (1, 0, 0)

    @given(st.data())
    def test_partition_identities(self, data):
        doc = text_doc("d", " ".join(["tok"] * 12))
        keys = [(s, s + w) for s in range(0, 40, 3) for w in (1, 2)]
        gold = {make_span(doc, *k) for k in data.draw(st.sets(st.sampled_from(keys), max_size=8))}
        hyp = {make_span(doc, *k) for k in data.draw(st.sets(st.sampled_from(keys), max_size=8))}
        r = match_strict(gold, hyp)
        assert r.true_positives | r.false_negatives == gold
        assert {s.key for s in r.true_positives} | {s.key for s in r.false_positives} == {
            s.key for s in hyp
        }
        assert not r.true_positives & r.false_positives
        assert not r.true_positives & r.false_negatives


class TestScore:
    def test_paper_peak_f(self):
        metrics = score(PEAK_TP, PEAK_FP, PEAK_FN)
        assert metrics.precision == pytest.approx(0.862, abs=1e-9)
        assert metrics.recall == pytest.approx(0.883, abs=1e-9)
        assert abs(metrics.f1 - 0.872) <= 0.0005

    def test_all_zero(self):
        metrics = score(0, 0, 0)
        assert (metrics.precision, metrics.recall, metrics.f1) == (0.0, 0.0, 0.0)

    def test_hand_arithmetic(self):
        metrics = score(2, 1, 1)
        assert metrics.precision == pytest.approx(2 / 3)
        assert metrics.recall == pytest.approx(2 / 3)
        assert metrics.f1 == pytest.approx(2 / 3)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            score(-1, 0, 0)

    @given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
    def test_harmonic_mean_bounds(self, tp, fp, fn):
        m = score(tp, fp, fn)
        if m.precision + m.recall > 0:
            assert min(m.precision, m.recall) - 1e-12 <= m.f1
            assert m.f1 <= max(m.precision, m.recall) + 1e-12

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_swapping_sides_swaps_p_and_r(self, tp, fp, fn):
        m = score(tp, fp, fn)
        swapped = score(tp, fn, fp)
        assert swapped.precision == pytest.approx(m.recall)
        assert swapped.recall == pytest.approx(m.precision)
        assert swapped.f1 == pytest.approx(m.f1)


class TestEvaluateCorpus:
    def test_identical_hypothesis(self, small_corpus):
        hyp = {d: small_corpus.gold_spans(d) for d in small_corpus.documents}
        metrics = evaluate_corpus(small_corpus, hyp)
        assert (metrics.precision, metrics.recall, metrics.f1) == (1.0, 1.0, 1.0)

    def test_empty_hypothesis_counts_gold_as_fn(self, small_corpus):
        metrics = evaluate_corpus(small_corpus, {})
        assert metrics.tp == 0 and metrics.fp == 0
        assert metrics.fn == small_corpus.total_gold_spans()
        assert metrics.f1 == 0.0

    def test_unknown_document_rejected(self, small_corpus):
        with pytest.raises(UnknownDocument):
            evaluate_corpus(small_corpus, {"nope": frozenset()})

    def test_equals_per_document_summation(self):
        # Independent oracle: sum the per-document MatchResult counts directly.
        rng = random.Random(5)
        corpus = synthetic_corpus(n_docs=3, seed=3, min_tokens=10, max_tokens=14, gold_per_doc=3)
        hyp = {}
        for doc_id, doc in corpus.documents.items():
            n = len(doc.token_boundaries)
            hyp[doc_id] = {
                token_span(doc, i, i) for i in rng.sample(range(n), 4)
            }
        tp = fp = fn = 0
        for doc_id in corpus.documents:
            a, b, c = match_strict(corpus.gold_spans(doc_id), hyp[doc_id]).counts
            tp, fp, fn = tp + a, fp + b, fn + c
        metrics = evaluate_corpus(corpus, hyp)
        assert (metrics.tp, metrics.fp, metrics.fn) == (tp, fp, fn)
        assert metrics.f1 == score(tp, fp, fn).f1


def _submission(doc, worker, keys, when=0.0):
    return Submission(
        worker_id=worker,
        doc_id=doc.doc_id,
        spans=frozenset(make_span(doc, s, e) for s, e in keys),
        submitted_at=when,
    )


class TestWorkerReport:
    def _corpus_two_docs(self):
        d1 = text_doc("d1", "aa bb cc dd")
        d2 = text_doc("d2", "aa bb cc dd")
        documents = {"d1": d1, "d2": d2}
        gold = {
            "d1": frozenset({make_span(d1, 0, 2)}),
            "d2": frozenset({make_span(d2, 0, 2), make_span(d2, 3, 5)}),
        }
        partition = {d: DocumentGroup.REGULAR for d in documents}
        return GoldCorpus(documents, gold, partition), d1, d2

    def test_perfect_single_submission(self):
        corpus, d1, _ = self._corpus_two_docs()
        report = worker_report([_submission(d1, "w1", [(0, 2)])], corpus)
        assert report.documents_completed == 1
        assert report.mean_f == 1.0
        assert report.stddev_f == 0.0

    def test_mean_and_population_stddev(self):
        corpus, d1, d2 = self._corpus_two_docs()
        subs = [
            _submission(d1, "w1", [(0, 2)]),          # F = 1.0
            _submission(d2, "w1", [(0, 2), (6, 8)]),  # tp=1 fp=1 fn=1 -> F = 0.5
        ]
        report = worker_report(subs, corpus)
        assert report.mean_f == pytest.approx(0.75)
        assert report.stddev_f == pytest.approx(0.25)

    def test_zero_submissions(self):
        corpus, _, _ = self._corpus_two_docs()
        report = worker_report([], corpus, worker_id="w9")
        assert report.documents_completed == 0
        assert report.mean_f == 0.0
        assert report.stddev_f == 0.0

    def test_duplicate_document_rejected(self):
        corpus, d1, _ = self._corpus_two_docs()
        subs = [_submission(d1, "w1", [(0, 2)]), _submission(d1, "w1", [])]
        with pytest.raises(DuplicateSubmission):
            worker_report(subs, corpus)

    def test_mixed_workers_rejected(self):
        corpus, d1, d2 = self._corpus_two_docs()
        subs = [_submission(d1, "w1", []), _submission(d2, "w2", [])]
        with pytest.raises(ValueError):
            worker_report(subs, corpus)

    def test_reports_grouped_and_sorted(self):
        corpus, d1, d2 = self._corpus_two_docs()
        subs = [
            _submission(d2, "wb", [(0, 2)]),
            _submission(d1, "wa", [(0, 2)]),
        ]
        reports = worker_reports(subs, corpus)
        assert [r.worker_id for r in reports] == ["wa", "wb"]
