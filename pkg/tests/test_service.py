import json
import threading

import pytest
from fastapi.testclient import TestClient

from pragma.harness.service import make_app
from pragma.scone import action_to_json
from pragma.scone_synth import synth_generate


@pytest.fixture()
def setup(tmp_path):
    instances = synth_generate("alchemy", 4, steps=3, seed=70)
    results = tmp_path / "results.jsonl"
    app = make_app(instances, results_path=str(results))
    return TestClient(app), instances, results


def gold_actions(inst):
    return [action_to_json(a) for seg in inst.segments for a in seg.actions]


def test_health(setup):
    client, instances, _ = setup
    r = client.get("/health")
    assert r.status_code == 200 and r.json()["instances"] == 4


def test_gold_walkthrough_success(setup):
    client, instances, results = setup
    r = client.post("/sessions", json={"system": "human"})
    assert r.status_code == 200
    view = r.json()
    sid = view["session_id"]
    inst = next(i for i in instances if i.id == view["instance_id"])
    assert view["step"] == 0
    assert view["instruction"] == " ".join(inst.segments[0].sentence)
    assert len(view["state"]["beakers"]) == 7
    for seg in inst.segments:
        for a in seg.actions:
            r = client.post(f"/sessions/{sid}/actions", json={"action": action_to_json(a)})
            assert r.status_code == 200
            assert r.json()["done_sentence"] is False
        r = client.post(f"/sessions/{sid}/actions", json={"action": {"type": "shift"}})
        assert r.status_code == 200
        assert r.json()["done_sentence"] is True
    r = client.post(f"/sessions/{sid}/finish")
    assert r.status_code == 200
    assert r.json()["success"] is True
    row = json.loads(results.read_text().splitlines()[0])
    assert row["success"] is True and row["instance_id"] == inst.id
    assert row["duration_ms"] >= 0


def test_invalid_action_400_state_unchanged(setup):
    client, instances, _ = setup
    view = client.post("/sessions", json={"system": "human"}).json()
    sid = view["session_id"]
    before = client.get(f"/sessions/{sid}").json()["state"]
    # draining 4 units from an empty beaker is never legal from a fresh state
    bad = {"type": "drain", "args": {"a": 4, "i": 1}}
    empty = [i for i, b in enumerate(before["beakers"], start=1) if not b]
    if empty:
        bad["args"]["i"] = empty[0]
        r = client.post(f"/sessions/{sid}/actions", json={"action": bad})
        assert r.status_code == 400
        after = client.get(f"/sessions/{sid}").json()["state"]
        assert after == before


def test_malformed_action_400(setup):
    client, _, _ = setup
    sid = client.post("/sessions", json={"system": "human"}).json()["session_id"]
    r = client.post(f"/sessions/{sid}/actions", json={"action": {"type": "bogus"}})
    assert r.status_code == 400


def test_finish_immediately_records_failure(setup):
    client, instances, results = setup
    view = client.post("/sessions", json={"system": "human"}).json()
    sid = view["session_id"]
    r = client.post(f"/sessions/{sid}/finish")
    assert r.json()["success"] is False
    r = client.post(f"/sessions/{sid}/finish")
    assert r.status_code == 409
    r = client.post(f"/sessions/{sid}/actions", json={"action": {"type": "shift"}})
    assert r.status_code == 409


def test_unknown_session_404(setup):
    client, _, _ = setup
    assert client.get("/sessions/nope").status_code == 404
    assert client.post("/sessions/nope/actions", json={"action": {"type": "shift"}}).status_code == 404
    assert client.post("/sessions/nope/finish").status_code == 404


def test_valid_actions_mirror_simulator(setup):
    client, instances, _ = setup
    from pragma.world import get_domain
    view = client.post("/sessions", json={"system": "human"}).json()
    inst = next(i for i in instances if i.id == view["instance_id"])
    dom = get_domain("alchemy")
    expected = [action_to_json(a) for a in dom.valid_actions(inst.initial_state)]
    got = [a for a in view["valid_actions"] if a["type"] != "shift"]
    assert got == expected
    assert {"type": "shift", "args": {}} in view["valid_actions"]


def test_directions_system(setup, tmp_path):
    client, instances, _ = setup
    directions = {instances[0].id: [["mix", "it"]]}
    app = make_app(instances, {"s0": directions})
    c2 = TestClient(app)
    view = c2.post("/sessions", json={"system": "s0",
                                      "instance_id": instances[0].id}).json()
    assert view["instruction"] == "mix it"
    assert view["sentence_count"] == 1
    r = c2.post("/sessions", json={"system": "s0", "instance_id": instances[1].id})
    assert r.status_code == 404  # no directions for that instance


def test_results_endpoint_streams_jsonl(setup):
    client, instances, _ = setup
    sid = client.post("/sessions", json={"system": "human"}).json()["session_id"]
    client.post(f"/sessions/{sid}/finish")
    text = client.get("/results").text
    rows = [json.loads(l) for l in text.splitlines()]
    assert len(rows) == 1
    assert rows[0]["system"] == "human"


def test_concurrent_sessions_do_not_interleave(tmp_path):
    instances = synth_generate("alchemy", 6, steps=3, seed=71)
    results = tmp_path / "res.jsonl"
    app = make_app(instances, results_path=str(results))
    client = TestClient(app)

    def run_one(idx: int, errors: list):
        try:
            view = client.post("/sessions", json={"system": "human"}).json()
            sid = view["session_id"]
            inst = next(i for i in instances if i.id == view["instance_id"])
            for seg in inst.segments:
                for a in seg.actions:
                    r = client.post(f"/sessions/{sid}/actions",
                                    json={"action": action_to_json(a)})
                    assert r.status_code == 200, r.text
                client.post(f"/sessions/{sid}/actions", json={"action": {"type": "shift"}})
            r = client.post(f"/sessions/{sid}/finish")
            assert r.json()["success"] is True
        except Exception as e:  # surfaced to the main thread
            errors.append(e)

    errors: list = []
    threads = [threading.Thread(target=run_one, args=(i, errors)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    rows = [json.loads(l) for l in results.read_text().splitlines()]
    assert len(rows) == 8
    assert all(r["success"] for r in rows)
    # per-session logs are complete and uncorrupted
    by_session = {r["session_id"] for r in rows}
    assert len(by_session) == 8
