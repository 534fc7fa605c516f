import itertools

import pytest
from fastapi.testclient import TestClient

from crowdspan.api import DEFAULT_QUIZ_BANK, create_app
from crowdspan.corpus import partition_corpus
from crowdspan.lifecycle import AnnotationService, ServiceConfig, quiz_key
from crowdspan.simulate import PopulationParams, campaign_service

from .conftest import synthetic_corpus

KEY = quiz_key(DEFAULT_QUIZ_BANK)
PASS_8_OF_10 = [k if i < 8 else (not k) for i, k in enumerate(KEY)]
FAIL_7_OF_10 = [k if i < 7 else (not k) for i, k in enumerate(KEY)]
SURVEY = {
    "gender": "female",
    "age": "26-35",
    "occupation": "science",
    "education": "masters",
    "motivations": ["help-science"],
}


@pytest.fixture
def service():
    corpus = synthetic_corpus(n_docs=20, seed=9, min_tokens=16, max_tokens=24, gold_per_doc=3)
    corpus = partition_corpus(corpus, seed=5, gold_fraction=0.10)
    config = ServiceConfig(
        training_doc_ids=corpus.training_ids,
        quiz_key=KEY,
        seed=5,
        gold_interval=10,
        redundancy_target=15,
    )
    clock = itertools.count(0.0, 1.0)
    return AnnotationService(corpus, config, clock=lambda: next(clock))


@pytest.fixture
def client(service):
    return TestClient(create_app(service))


def onboard(client, answers=None):
    worker_id = client.post("/workers").json()["worker_id"]
    client.post(f"/workers/{worker_id}/quiz", json={"answers": answers or PASS_8_OF_10})
    client.post(f"/workers/{worker_id}/survey", json=SURVEY)
    return worker_id


def gold_span_payload(service, doc_id):
    return [
        {"start": s.start, "end": s.end}
        for s in sorted(service.corpus.gold_spans(doc_id), key=lambda s: s.key)
    ]


class TestHealthAndQuiz:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["documents"] == 20

    def test_quiz_questions_listed(self, client):
        body = client.get("/quiz").json()
        assert len(body["questions"]) == 10
        assert all(isinstance(q, str) for q in body["questions"])


class TestScriptedSession:
    def test_full_session_event_order(self, client, service):
        worker_id = client.post("/workers").json()["worker_id"]
        res = client.post(f"/workers/{worker_id}/quiz", json={"answers": PASS_8_OF_10})
        assert res.json()["score"] == pytest.approx(0.8)
        assert res.json()["passed"] is True
        res = client.post(f"/workers/{worker_id}/survey", json=SURVEY)
        assert res.json()["state"] == "SURVEYED"

        contexts = []
        for i in range(5):
            task = client.get(f"/workers/{worker_id}/next-task")
            assert task.status_code == 200
            body = task.json()
            contexts.append(body["context"])
            res = client.post(
                f"/workers/{worker_id}/submissions",
                json={
                    "request_token": f"tok-{i}",
                    "doc_id": body["doc_id"],
                    "spans": gold_span_payload(service, body["doc_id"]),
                },
            )
            assert res.status_code == 200
        assert contexts == ["TRAINING"] * 4 + ["REGULAR"]

        kinds = [e.kind for e in service.log.events()]
        assert kinds[:3] == ["WORKER_REGISTERED", "QUIZ_GRADED", "SURVEY_RECORDED"]
        assert kinds[3:] == ["ASSIGNED", "SUBMITTED"] * 5

    def test_training_feedback_payload(self, client, service):
        worker_id = onboard(client)
        task = client.get(f"/workers/{worker_id}/next-task").json()
        res = client.post(
            f"/workers/{worker_id}/submissions",
            json={
                "request_token": "t",
                "doc_id": task["doc_id"],
                "spans": gold_span_payload(service, task["doc_id"]),
            },
        )
        body = res.json()
        assert body["kind"] == "GOLD"
        assert body["f_score"] == 1.0
        assert body["false_positives"] == []
        assert body["false_negatives"] == []
        assert body["worker_state"] == "TRAINING"

    def test_failed_quiz_rejected_state(self, client):
        worker_id = client.post("/workers").json()["worker_id"]
        res = client.post(f"/workers/{worker_id}/quiz", json={"answers": FAIL_7_OF_10})
        assert res.json() == {"score": 0.7, "passed": False, "state": "REJECTED"}
        assert client.get(f"/workers/{worker_id}/next-task").status_code == 409


class TestSubmissionBehavior:
    def test_server_snaps_raw_spans(self, client, service):
        worker_id = onboard(client)
        task = client.get(f"/workers/{worker_id}/next-task").json()
        doc = service.corpus.documents[task["doc_id"]]
        first_token = doc.token_boundaries[0]
        raw = {"start": first_token[0] + 1, "end": first_token[1] - 1}
        assert raw["start"] < raw["end"]
        client.post(
            f"/workers/{worker_id}/submissions",
            json={"request_token": "t", "doc_id": task["doc_id"], "spans": [raw]},
        )
        stored = service.state.submissions[(worker_id, task["doc_id"])]
        assert {s.key for s in stored.spans} == {first_token}

    def test_retry_with_same_token_is_idempotent(self, client, service):
        worker_id = onboard(client)
        task = client.get(f"/workers/{worker_id}/next-task").json()
        payload = {
            "request_token": "retry-1",
            "doc_id": task["doc_id"],
            "spans": gold_span_payload(service, task["doc_id"]),
        }
        first = client.post(f"/workers/{worker_id}/submissions", json=payload)
        events_after = len(service.log.events())
        second = client.post(f"/workers/{worker_id}/submissions", json=payload)
        assert second.json() == first.json()
        assert len(service.log.events()) == events_after

    def test_overlapping_spans_400(self, client, service):
        worker_id = onboard(client)
        task = client.get(f"/workers/{worker_id}/next-task").json()
        doc = service.corpus.documents[task["doc_id"]]
        b = doc.token_boundaries
        spans = [
            {"start": b[0][0], "end": b[2][1]},
            {"start": b[1][0], "end": b[3][1]},
        ]
        res = client.post(
            f"/workers/{worker_id}/submissions",
            json={"request_token": "t", "doc_id": task["doc_id"], "spans": spans},
        )
        assert res.status_code == 400

    def test_unknown_worker_404(self, client):
        assert client.get("/workers/ghost/next-task").status_code == 404

    def test_survey_before_quiz_409(self, client):
        worker_id = client.post("/workers").json()["worker_id"]
        res = client.post(f"/workers/{worker_id}/survey", json=SURVEY)
        assert res.status_code == 409

    def test_empty_motivations_422(self, client):
        worker_id = client.post("/workers").json()["worker_id"]
        client.post(f"/workers/{worker_id}/quiz", json={"answers": list(KEY)})
        res = client.post(
            f"/workers/{worker_id}/survey", json={**SURVEY, "motivations": []}
        )
        assert res.status_code == 422

    def test_no_identifier_leak_in_peer_feedback(self, client, service):
        first = onboard(client)
        while True:  # first worker annotates the whole corpus
            task = client.get(f"/workers/{first}/next-task")
            if task.status_code == 204:
                break
            body = task.json()
            client.post(
                f"/workers/{first}/submissions",
                json={
                    "request_token": f"{first}-{body['doc_id']}",
                    "doc_id": body["doc_id"],
                    "spans": gold_span_payload(service, body["doc_id"]),
                },
            )
        second = onboard(client)
        for _ in range(4):
            task = client.get(f"/workers/{second}/next-task").json()
            client.post(
                f"/workers/{second}/submissions",
                json={
                    "request_token": f"{second}-{task['doc_id']}",
                    "doc_id": task["doc_id"],
                    "spans": gold_span_payload(service, task["doc_id"]),
                },
            )
        task = client.get(f"/workers/{second}/next-task").json()
        assert task["context"] == "REGULAR"
        res = client.post(
            f"/workers/{second}/submissions",
            json={
                "request_token": "peer-probe",
                "doc_id": task["doc_id"],
                "spans": gold_span_payload(service, task["doc_id"]),
            },
        ).json()
        assert res["kind"] == "PEER"
        assert len(res["peer_spans"]) == 1
        (alias,) = res["peer_spans"]
        assert alias.startswith("annotator-")
        assert first not in str(res) and second not in str(res)


class TestNoTask:
    def test_204_when_exhausted(self):
        corpus = synthetic_corpus(n_docs=5, seed=9, min_tokens=16, max_tokens=20, gold_per_doc=2)
        corpus = partition_corpus(corpus, seed=5, gold_fraction=0.10)
        config = ServiceConfig(
            training_doc_ids=corpus.training_ids, quiz_key=KEY, seed=5
        )
        client = TestClient(create_app(AnnotationService(corpus, config)))
        worker_id = onboard(client)
        while True:
            task = client.get(f"/workers/{worker_id}/next-task")
            if task.status_code == 204:
                break
            body = task.json()
            client.post(
                f"/workers/{worker_id}/submissions",
                json={"request_token": body["doc_id"], "doc_id": body["doc_id"], "spans": []},
            )


class TestAdmin:
    @pytest.fixture
    def loaded_client(self):
        corpus = synthetic_corpus(n_docs=12, seed=9, min_tokens=16, max_tokens=24, gold_per_doc=3)
        corpus = partition_corpus(corpus, seed=5, gold_fraction=0.15)
        params = PopulationParams(n_workers=8)
        service = campaign_service(corpus, params, redundancy=6, seed=3)
        return TestClient(create_app(service)), service

    def test_sweep_endpoint(self, loaded_client):
        client, _ = loaded_client
        body = client.get("/admin/sweep", params={"k_max": 6}).json()
        assert [p["k"] for p in body["points"]] == [1, 2, 3, 4, 5, 6]
        assert body["points"][0]["recall"] >= body["points"][-1]["recall"]

    def test_redundancy_endpoint(self, loaded_client):
        client, _ = loaded_client
        body = client.get(
            "/admin/redundancy", params={"n_max": 3, "reps": 2, "seed": 9}
        ).json()
        assert [p["n"] for p in body["points"]] == [1, 2, 3]

    def test_cost_endpoint(self, loaded_client):
        client, service = loaded_client
        body = client.get("/admin/cost").json()
        trained = sum(
            1 for w in service.state.workers.values() if w.state.value in ("ACTIVE", "BLOCKED")
        )
        assert body["trained_workers"] == trained
        assert body["paid_documents"] == 8
        assert body["per_abstract_cost"] == "0.36"
