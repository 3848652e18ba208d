import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from practicum.demos import ingest
from practicum.env import default_config
from practicum.service import create_app


@pytest.fixture
def env2():
    return default_config(2)


@pytest.fixture
def client(env2, tmp_path):
    app = create_app(env2, demos_path=tmp_path / "demos.jsonl", max_sessions=3)
    with TestClient(app) as client:
        client.demos_path = tmp_path / "demos.jsonl"
        yield client


def create(client):
    response = client.post("/sessions")
    assert response.status_code == 200
    return response.json()


def drive_to_goal(client, session_id, target_goal_id, env):
    """Steer with the scripted controller through the step endpoint."""
    from practicum import env as kitchen
    from practicum.demos import oracle_policy
    from practicum.env import SimState

    state_vec = client.get(f"/sessions/{session_id}/state").json()["state"]
    for _ in range(env.horizon * 2):
        state = SimState.from_vector(np.asarray(state_vec))
        if kitchen.discretize(env, state) == target_goal_id:
            return
        action = oracle_policy(env, state, target_goal_id)
        reply = client.post(
            f"/sessions/{session_id}/step", json={"action": [float(a) for a in action]}
        ).json()
        state_vec = reply["state"]
    raise AssertionError(f"failed to reach goal {target_goal_id}")


# --- session lifecycle -------------------------------------------------------


def test_create_returns_distinct_ids_and_reset_state(client):
    a = create(client)
    b = create(client)
    assert a["session"] != b["session"]
    assert a["state"][2:] == [0.0, 0.0]
    assert a["goal_id"] == 0
    assert a["num_elements"] == 2


def test_create_invalid_config_rejected(client):
    response = client.post("/sessions", json={"elements": []})
    assert response.status_code == 400


def test_create_mismatched_config_rejected(client):
    other = default_config(3)
    response = client.post("/sessions", json=other.to_dict())
    assert response.status_code == 400


def test_capacity_limit(client):
    for _ in range(3):
        create(client)
    response = client.post("/sessions")
    assert response.status_code == 429


def test_unknown_session_404(client):
    assert client.get("/sessions/nope/state").status_code == 404
    assert client.post("/sessions/nope/mark").status_code == 404
    assert client.post("/sessions/nope/finalize").status_code == 404


# --- stepping ----------------------------------------------------------------


def test_zero_action_keeps_state_advances_clock(client):
    session = create(client)["session"]
    reply = client.post(f"/sessions/{session}/step", json={"action": [0.0, 0.0]}).json()
    assert reply["state"][2:] == [0.0, 0.0]
    assert reply["t"] == 1
    assert reply["clamped"] is False


def test_out_of_bounds_action_clamped_and_flagged(client, env2):
    session = create(client)["session"]
    reply = client.post(f"/sessions/{session}/step", json={"action": [9.0, 0.0]}).json()
    assert reply["clamped"] is True
    assert reply["state"][0] == pytest.approx(0.5 + env2.a_max)


def test_steps_recorded_in_order(client):
    session = create(client)["session"]
    for i in range(20):
        client.post(f"/sessions/{session}/step", json={"action": [0.001 * i, 0.0]})
    state = client.get(f"/sessions/{session}/state").json()
    assert state["t"] == 20


def test_websocket_step_round_trip(client, env2):
    session = create(client)["session"]
    with client.websocket_connect(f"/sessions/{session}/ws") as ws:
        ws.send_json({"session": session, "action": [0.0, -0.05]})
        reply = ws.receive_json()
        assert reply["t"] == 1
        assert reply["state"][1] == pytest.approx(0.45)
        ws.send_json({"session": session, "action": [0.0, 99]})
        assert ws.receive_json()["clamped"] is True


def test_websocket_unknown_session(client):
    with client.websocket_connect("/sessions/missing/ws") as ws:
        assert "error" in ws.receive_json()


def test_session_isolation(client):
    a = create(client)["session"]
    b = create(client)["session"]
    for _ in range(5):
        client.post(f"/sessions/{a}/step", json={"action": [0.05, 0.0]})
    state_b = client.get(f"/sessions/{b}/state").json()
    assert state_b["t"] == 0
    assert state_b["state"][0] == 0.5


# --- marking ------------------------------------------------------------------


def test_mark_at_goal_returns_id(client, env2):
    session = create(client)["session"]
    drive_to_goal(client, session, 2, env2)
    reply = client.post(f"/sessions/{session}/mark")
    assert reply.status_code == 200
    assert reply.json()["goal_id"] == 2


def test_mark_mid_motion_rejected_with_distances(client, env2):
    session = create(client)["session"]
    # Nudge element 0 partway open: vertical to its row, then drag.
    drive_partway(client, session, env2)
    reply = client.post(f"/sessions/{session}/mark")
    assert reply.status_code == 409
    detail = reply.json()["detail"]
    rows = detail["distances"]
    assert any(not r["in_band"] for r in rows)


def drive_partway(client, session_id, env):
    from practicum import env as kitchen
    from practicum.demos import oracle_policy
    from practicum.env import SimState

    state_vec = client.get(f"/sessions/{session_id}/state").json()["state"]
    while True:
        state = SimState.from_vector(np.asarray(state_vec))
        if state.joints[0] > 0.4:
            return
        action = oracle_policy(env, state, 1)
        state_vec = client.post(
            f"/sessions/{session_id}/step", json={"action": [float(a) for a in action]}
        ).json()["state"]


def test_consecutive_same_goal_mark_rejected(client, env2):
    session = create(client)["session"]
    drive_to_goal(client, session, 1, env2)
    assert client.post(f"/sessions/{session}/mark").status_code == 200
    assert client.post(f"/sessions/{session}/mark").status_code == 409


# --- finalize -----------------------------------------------------------------


def test_finalize_requires_two_changepoints(client, env2):
    session = create(client)["session"]
    drive_to_goal(client, session, 1, env2)
    client.post(f"/sessions/{session}/mark")
    assert client.post(f"/sessions/{session}/finalize").status_code == 409


def test_finalize_round_trips_through_ingest(client, env2):
    session = create(client)["session"]
    drive_to_goal(client, session, 1, env2)
    client.post(f"/sessions/{session}/mark")
    drive_to_goal(client, session, 3, env2)
    client.post(f"/sessions/{session}/mark")
    reply = client.post(f"/sessions/{session}/finalize")
    assert reply.status_code == 200
    body = reply.json()
    assert body["episode"] == 0
    assert body["changepoints"] == 2

    corpus, rejections = ingest(client.demos_path, env2)
    assert rejections == []
    assert len(corpus.episodes) == 1
    goals = [s.goal_id for s in corpus.episodes[0] if s.changepoint]
    assert goals == [1, 3]


def test_finalize_twice_404(client, env2):
    session = create(client)["session"]
    drive_to_goal(client, session, 1, env2)
    client.post(f"/sessions/{session}/mark")
    drive_to_goal(client, session, 0, env2)
    client.post(f"/sessions/{session}/mark")
    assert client.post(f"/sessions/{session}/finalize").status_code == 200
    assert client.post(f"/sessions/{session}/finalize").status_code == 404


def test_multiple_episodes_accumulate_in_one_file(client, env2):
    for expected_idx in range(2):
        session = create(client)["session"]
        drive_to_goal(client, session, 2, env2)
        client.post(f"/sessions/{session}/mark")
        drive_to_goal(client, session, 0, env2)
        client.post(f"/sessions/{session}/mark")
        body = client.post(f"/sessions/{session}/finalize").json()
        assert body["episode"] == expected_idx

    corpus, rejections = ingest(client.demos_path, env2)
    assert rejections == []
    assert len(corpus.episodes) == 2
    # Single header line at the top of the file.
    lines = client.demos_path.read_text().strip().splitlines()
    assert sum(1 for ln in lines if "env_config_hash" in ln) == 1
