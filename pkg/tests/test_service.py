import pytest
from fastapi.testclient import TestClient

from flightrag import llm as llm_mod
from flightrag import service as svc
from flightrag.datagen import (
    generate_ambiguous,
    generate_fewshot_classification,
    generate_straightforward,
)
from flightrag.fixtures import build_engine_rules
from flightrag.pipelines import Engine


@pytest.fixture(scope="module")
def qa(small_store):
    return generate_straightforward(small_store, 15, seed=1) + generate_ambiguous(
        small_store, 12, seed=2
    )


@pytest.fixture(scope="module")
def engine(small_store, qa):
    fewshot = generate_fewshot_classification(small_store)
    rules = build_engine_rules(small_store, fewshot + qa, qa)
    llm = llm_mod.scripted_handle(rules, strict=False, default_response="")
    return Engine(small_store, llm=llm, classification_fewshot=fewshot)


@pytest.fixture()
def client(engine):
    return TestClient(svc.create_app(engine))


def test_health(client, small_store):
    body = client.get("/v1/health").json()
    assert body["status"] == "ok"
    assert body["flights"] == len(small_store)


def test_ask_straightforward(client, qa):
    pair = next(p for p in qa if p.template_id == "sf_ramp")
    resp = client.post("/v1/ask", json={"question": pair.question, "pipeline": "sql"})
    assert resp.status_code == 200
    body = resp.json()
    assert pair.answer in body["answer"]
    assert body["query_text"].lower().startswith("select")
    assert not body["needs_clarification"]
    assert body["session_id"]


def test_unknown_pipeline_rejected(client):
    resp = client.post("/v1/ask", json={"question": "q", "pipeline": "quantum"})
    assert resp.status_code == 422


def test_two_turn_clarification_flow(client, small_store):
    record = small_store.records[0]
    first = client.post("/v1/ask", json={"question": "Where is the KLM?", "pipeline": "sql"}).json()
    assert first["needs_clarification"]
    session_id = first["session_id"]
    followup = f"Which ramp is assigned for flight {record.flight_nr}?"
    second = client.post(
        "/v1/ask",
        json={"question": followup, "pipeline": "sql", "session_id": session_id},
    ).json()
    assert second["session_id"] == session_id
    assert not second["needs_clarification"]


def test_session_forgets_after_answer(client, qa):
    pair = next(p for p in qa if p.template_id == "sf_ramp")
    first = client.post(
        "/v1/ask", json={"question": pair.question, "pipeline": "sql"}
    ).json()
    assert not first["needs_clarification"]
    # next question in the same session is not merged with anything
    second = client.post(
        "/v1/ask",
        json={"question": pair.question, "pipeline": "sql", "session_id": first["session_id"]},
    ).json()
    assert pair.answer in second["answer"]


def test_session_expires(engine):
    now = [0.0]
    app = svc.create_app(engine, session_ttl_s=10.0, clock=lambda: now[0])
    client = TestClient(app)
    first = client.post("/v1/ask", json={"question": "Where is the KLM?"}).json()
    assert first["needs_clarification"]
    now[0] = 11.0
    store = app.state.sessions
    session = store.get_or_create(first["session_id"])
    # expired: the old pending question is gone, a fresh session is issued
    assert session.pending_question is None


def test_flights_endpoint_filters(client, small_store):
    record = small_store.records[0]
    body = client.get(
        "/v1/flights", params={"field": "flight_nr", "value": record.flight_nr}
    ).json()
    assert body["count"] == 1
    assert body["flights"][0]["flight_uid"] == record.flight_uid


def test_flights_endpoint_validates(client):
    assert client.get("/v1/flights", params={"field": "nope", "value": "x"}).status_code == 422
    assert client.get("/v1/flights", params={"field": "ramp"}).status_code == 422


def test_flights_endpoint_limit(client):
    body = client.get("/v1/flights", params={"limit": 5}).json()
    assert body["count"] == 5
