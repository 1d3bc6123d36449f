from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from llada.config import LlmConfig, ServiceConfig
from llada.llm import Timeout
from llada.service import create_app

from conftest import CORPUS_DIR, EVAL_MANIFEST, FIXTURES, GOLDEN_CASSETTE

ROW1_BODY = {
    "origin_jurisdiction": "san francisco",
    "target_jurisdiction": "nyc",
    "nominal_plan": "Turn right on red",
    "unexpected_situation": "normal status",
}

ROW1_INSTRUCTION = (
    "Do not turn right on red in NYC unless a sign permitting it is posted."
)


def make_config(tmp_path, corpus_dir=CORPUS_DIR) -> ServiceConfig:
    return ServiceConfig(
        corpus_dir=str(corpus_dir),
        sessions_path=str(tmp_path / "sessions.jsonl"),
        llm=LlmConfig(mode="replay", cassette=str(GOLDEN_CASSETTE)),
    )


@pytest.fixture()
def client(tmp_path):
    app = create_app(make_config(tmp_path))
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


class TestHealth:
    def test_healthz(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}


class TestAdapt:
    def test_golden_adapt(self, client):
        r = client.post("/v1/adapt", json=ROW1_BODY)
        assert r.status_code == 200
        body = r.json()
        assert body["instruction"] == ROW1_INSTRUCTION
        assert body["generic"] is False
        assert body["keywords"] == ["red light", "right turn"]
        assert body["excerpts"]
        first = body["excerpts"][0]
        assert first["jurisdiction_id"] == "nyc"
        assert first["match_spans"]
        # spans are valid byte offsets into the excerpt text
        raw = first["text"].encode("utf-8")
        for start, end in first["match_spans"]:
            assert 0 <= start < end <= len(raw)

    def test_default_situation_filled(self, client):
        body = dict(ROW1_BODY)
        del body["unexpected_situation"]
        r = client.post("/v1/adapt", json=body)
        assert r.status_code == 200
        session = client.get(f"/v1/sessions/{r.json()['trace_id']}").json()
        assert session["query"]["unexpected_situation"] == "normal status"

    def test_missing_plan_400(self, client):
        body = {k: v for k, v in ROW1_BODY.items() if k != "nominal_plan"}
        r = client.post("/v1/adapt", json=body)
        assert r.status_code == 400
        assert r.json()["code"] == "missing_field:nominal_plan"

    def test_unknown_jurisdiction_404(self, client):
        r = client.post(
            "/v1/adapt", json=dict(ROW1_BODY, target_jurisdiction="atlantis")
        )
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_jurisdiction"

    def test_replay_miss_502(self, client):
        r = client.post(
            "/v1/adapt", json=dict(ROW1_BODY, nominal_plan="Not in any cassette")
        )
        assert r.status_code == 502
        assert r.json()["code"] == "backend_failure"

    def test_timeout_504(self, tmp_path):
        class TimingOut:
            def complete(self, prompt, settings):
                raise Timeout("too slow")

        app = create_app(make_config(tmp_path), backend=TimingOut())
        with TestClient(app, raise_server_exceptions=False) as client:
            r = client.post("/v1/adapt", json=ROW1_BODY)
        assert r.status_code == 504
        assert r.json()["code"] == "timeout"


class TestSessions:
    def test_round_trip_equality(self, client):
        r = client.post("/v1/adapt", json=ROW1_BODY)
        body = r.json()
        session = client.get(f"/v1/sessions/{body['trace_id']}").json()
        assert session["plan"]["instruction"] == body["instruction"]
        assert session["plan"]["generic"] == body["generic"]
        assert session["tre"]["keywords"] == body["keywords"]
        assert session["tre"]["excerpts"] == body["excerpts"]
        assert session["query"]["nominal_plan"] == ROW1_BODY["nominal_plan"]

    def test_unknown_session_404(self, client):
        r = client.get("/v1/sessions/deadbeef")
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_session"

    def test_sessions_survive_restart(self, tmp_path):
        config = make_config(tmp_path)
        app = create_app(config)
        with TestClient(app) as client:
            trace_id = client.post("/v1/adapt", json=ROW1_BODY).json()["trace_id"]
        reopened = create_app(config)
        with TestClient(reopened) as client:
            r = client.get(f"/v1/sessions/{trace_id}")
        assert r.status_code == 200
        assert r.json()["plan"]["instruction"] == ROW1_INSTRUCTION


class TestHandbooks:
    def test_list(self, client):
        r = client.get("/v1/handbooks")
        ids = [m["jurisdiction_id"] for m in r.json()["handbooks"]]
        assert "nyc" in ids and len(ids) == 6

    def test_ingest_then_list(self, tmp_path):
        corpus_dir = tmp_path / "corpus"
        corpus_dir.mkdir()
        app = create_app(make_config(tmp_path, corpus_dir=corpus_dir))
        with TestClient(app, raise_server_exceptions=False) as client:
            r = client.post(
                "/v1/handbooks",
                json={
                    "jurisdiction_id": "testland",
                    "display_name": "Testland",
                    "text": "# Rules\n\nDrive nicely.",
                },
            )
            assert r.status_code == 201
            assert r.json()["paragraphs"] == 1
            ids = [
                m["jurisdiction_id"]
                for m in client.get("/v1/handbooks").json()["handbooks"]
            ]
            assert ids == ["testland"]
            dup = client.post(
                "/v1/handbooks",
                json={
                    "jurisdiction_id": "testland",
                    "display_name": "Testland",
                    "text": "other",
                },
            )
            assert dup.status_code == 409
            assert dup.json()["code"] == "duplicate_jurisdiction"

    def test_invalid_slug_400(self, client, tmp_path):
        corpus_dir = tmp_path / "corpus2"
        corpus_dir.mkdir()
        app = create_app(make_config(tmp_path, corpus_dir=corpus_dir))
        with TestClient(app, raise_server_exceptions=False) as c:
            r = c.post(
                "/v1/handbooks",
                json={
                    "jurisdiction_id": "Bad Slug",
                    "display_name": "X",
                    "text": "y",
                },
            )
        assert r.status_code == 400


class TestEval:
    def test_manifest_path(self, client):
        r = client.post("/v1/eval", json={"manifest_path": str(EVAL_MANIFEST)})
        assert r.status_code == 200
        expected = json.loads(
            (FIXTURES / "eval" / "expected_metrics.json").read_text()
        )
        got = r.json()
        for metric in ("l2", "collision"):
            for h in ("1s", "2s", "3s", "avg"):
                assert abs(got[metric][h] - expected[metric][h]) < 1e-9

    def test_inline_samples(self, client):
        sample = json.loads((FIXTURES / "eval" / "scene_0.json").read_text())
        r = client.post("/v1/eval", json={"samples": [sample]})
        assert r.status_code == 200
        assert r.json()["l2"]["avg"] == 0.0

    def test_malformed_400(self, client):
        r = client.post("/v1/eval", json={"samples": [{"pred": "nope"}]})
        assert r.status_code == 400
        assert r.json()["code"] == "malformed_eval"

    def test_neither_field_400(self, client):
        r = client.post("/v1/eval", json={})
        assert r.status_code == 400


class TestDeterminism:
    def test_identical_responses_across_restarts(self, tmp_path):
        def run(session_dir):
            app = create_app(make_config(session_dir))
            with TestClient(app) as client:
                body = client.post("/v1/adapt", json=ROW1_BODY).json()
            body.pop("trace_id")
            body.pop("latency_ms")
            return body

        first = run(tmp_path / "a")
        second = run(tmp_path / "b")
        assert first == second
