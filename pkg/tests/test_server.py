from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from querynav.errors import ConfigError
from querynav.server import ServerConfig, create_app

from conftest import FIXTURES, LIVESTOCK_QUERY


def _config(tmp_path, **overrides) -> ServerConfig:
    raw = {
        "bind": "127.0.0.1:0",
        "catalog": str(FIXTURES / "catalog.json"),
        "gazetteer": str(FIXTURES / "gazetteer.json"),
        "data_root": str(FIXTURES / "data"),
        "provider": f"scripted:{FIXTURES / 'scripted' / 'livestock_run.json'}",
        "vqa_answers": str(FIXTURES / "vqa_answers.json"),
    }
    raw.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return ServerConfig.from_file(path)


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(_config(tmp_path)))


def _advance(client, sid, request_id, override=None):
    body = {"request_id": request_id}
    if override is not None:
        body["override"] = override
    return client.post(f"/sessions/{sid}/advance", json=body)


def _run_automatic(client, query=LIVESTOCK_QUERY):
    created = client.post("/sessions", json={"query": query, "mode": "automatic"})
    assert created.status_code == 201
    sid = created.json()["id"]
    n = 0
    while True:
        state = _advance(client, sid, f"auto-{n}").json()
        n += 1
        if state["stage"] in ("Done", "Failed"):
            return sid, state


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200 and r.json() == {"status": "ok"}


def test_catalog_endpoint(client):
    r = client.get("/catalog")
    assert r.status_code == 200
    body = r.json()
    assert {n["id"] for n in body["nodes"]} >= {"ds_nrn", "route_planning"}
    assert all(set(e) == {"from", "to", "rel"} for e in body["edges"])


def test_missing_catalog_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        create_app(_config(tmp_path, catalog=str(tmp_path / "nope.json")))


def test_empty_query_422(client):
    r = client.post("/sessions", json={"query": "  ", "mode": "automatic"})
    assert r.status_code == 422
    assert r.json()["code"] == "empty-query"


def test_unknown_session_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert _advance(client, "nope", "r1").status_code == 404
    assert client.get("/sessions/nope/result").status_code == 404


def test_automatic_run_to_done(client):
    sid, state = _run_automatic(client)
    assert state["stage"] == "Done"
    result = client.get(f"/sessions/{sid}/result")
    assert result.status_code == 200
    body = result.json()
    assert body["kind"] == "route"
    fc = body["payload"]["geojson"]
    assert fc["type"] == "FeatureCollection"
    assert fc["features"][0]["geometry"]["type"] == "LineString"


def test_result_before_done_409(client):
    sid = client.post("/sessions", json={"query": "x", "mode": "control"}).json()["id"]
    r = client.get(f"/sessions/{sid}/result")
    assert r.status_code == 409 and r.json()["code"] == "no-result"


def test_get_session_equals_advance_response(client):
    sid = client.post("/sessions", json={"query": LIVESTOCK_QUERY, "mode": "automatic"}).json()["id"]
    advanced = _advance(client, sid, "r1").json()
    fetched = client.get(f"/sessions/{sid}").json()
    assert advanced == fetched


def test_advance_replay_is_idempotent(client):
    sid = client.post("/sessions", json={"query": LIVESTOCK_QUERY, "mode": "automatic"}).json()["id"]
    first = _advance(client, sid, "same-id").json()
    replay = _advance(client, sid, "same-id").json()
    assert first == replay
    assert first["stage"] == "SelectSources"  # did not double-advance
    fresh = _advance(client, sid, "next-id").json()
    assert fresh["stage"] == "SelectResources"


def test_stage_order_violation_409(client):
    sid, _ = _run_automatic(client)
    r = _advance(client, sid, "after-done")
    assert r.status_code == 409
    assert r.json()["code"] == "stage-order"


def test_invalid_override_422_keeps_stage(client):
    sid = client.post("/sessions", json={"query": LIVESTOCK_QUERY, "mode": "control"}).json()["id"]
    _advance(client, sid, "p1")  # proposal
    r = _advance(client, sid, "c1", override=["bogus_id"])
    assert r.status_code == 422
    assert r.json()["code"] == "invalid-override"
    state = client.get(f"/sessions/{sid}").json()
    assert state["stage"] == "Classify" and state["pending"] is not None


def test_control_accept_all_matches_automatic(client):
    sid_auto, _ = _run_automatic(client)
    auto_result = client.get(f"/sessions/{sid_auto}/result").json()

    sid = client.post("/sessions", json={"query": LIVESTOCK_QUERY, "mode": "control"}).json()["id"]
    n = 0
    while True:
        state = _advance(client, sid, f"ctl-{n}").json()
        n += 1
        if state["stage"] in ("Done", "Failed"):
            break
        assert n < 40
    control_result = client.get(f"/sessions/{sid}/result").json()
    assert control_result == auto_result


def test_control_override_is_respected(client):
    sid = client.post("/sessions", json={"query": LIVESTOCK_QUERY, "mode": "control"}).json()["id"]
    state = _advance(client, sid, "p1").json()
    pending = state["pending"]
    subset = pending["selected"][:1]
    state = _advance(client, sid, "c1", override=subset).json()
    assert state["selections"]["Classify"] == subset


def test_two_sessions_interleaved_stay_independent(client):
    a = client.post("/sessions", json={"query": LIVESTOCK_QUERY, "mode": "automatic"}).json()["id"]
    b = client.post("/sessions", json={"query": LIVESTOCK_QUERY, "mode": "automatic"}).json()["id"]
    _advance(client, a, "a1")
    _advance(client, b, "b1")
    _advance(client, a, "a2")
    _advance(client, b, "b2")
    sa = client.get(f"/sessions/{a}").json()
    sb = client.get(f"/sessions/{b}").json()
    assert sa["stage"] == sb["stage"] == "SelectResources"
    assert sa["log"] == sb["log"]
    assert sa["id"] != sb["id"]


def test_max_sessions_enforced(tmp_path):
    client = TestClient(create_app(_config(tmp_path, max_sessions=1)))
    assert client.post("/sessions", json={"query": "q", "mode": "control"}).status_code == 201
    r = client.post("/sessions", json={"query": "q", "mode": "control"})
    assert r.status_code == 429
    assert r.json()["code"] == "max-sessions"


def test_snapshot_file_written(tmp_path):
    client = TestClient(create_app(_config(tmp_path, snapshot=str(tmp_path / "snap.json"))))
    client.post("/sessions", json={"query": "q", "mode": "control"})
    snap = json.loads((tmp_path / "snap.json").read_text())
    assert len(snap) == 1
    (session,) = snap.values()
    assert session["stage"] == "Classify"


def test_concurrent_sessions_complete_independently(tmp_path):
    import threading

    app = create_app(_config(tmp_path))
    results: dict[str, dict] = {}
    errors: list[Exception] = []

    def drive(tag: str):
        try:
            client = TestClient(app)
            sid = client.post(
                "/sessions", json={"query": LIVESTOCK_QUERY, "mode": "automatic"}
            ).json()["id"]
            n = 0
            while True:
                state = client.post(
                    f"/sessions/{sid}/advance", json={"request_id": f"{tag}-{n}"}
                ).json()
                n += 1
                if state["stage"] in ("Done", "Failed"):
                    results[tag] = state
                    return
                assert n < 40
        except Exception as exc:  # surfaced after join
            errors.append(exc)

    threads = [threading.Thread(target=drive, args=(t,)) for t in ("a", "b", "c")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(results) == 3
    logs = {tag: state["log"] for tag, state in results.items()}
    assert logs["a"] == logs["b"] == logs["c"]
    assert all(state["stage"] == "Done" for state in results.values())
    assert len({state["id"] for state in results.values()}) == 3
