"""HTTP + WebSocket service exposing the simulator for live demonstration capture.

Session lifecycle (create/mark/finalize) runs over plain HTTP; stepping runs
over a WebSocket for interactive rates. The server owns all physics: clients
send displacement actions and render the states echoed back. Finalized
episodes are appended to a demos JSONL file in the exact corpus schema, so
everything recorded here ingests cleanly.
"""
from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from . import env as kitchen
from .demos import DemoStep, validate_episode
from .env import EnvConfig, SimState, default_config
from .errors import ConfigError

DEFAULT_MAX_SESSIONS = 8


@dataclass
class Session:
    session_id: str
    config: EnvConfig
    state: SimState
    steps: list[DemoStep]
    created_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def changepoint_count(self) -> int:
        return sum(s.changepoint for s in self.steps)


def _state_payload(session: Session) -> dict:
    goal_id = kitchen.discretize(session.config, session.state)
    return {
        "state": [float(x) for x in session.state.to_vector()],
        "goal_id": goal_id,
        "t": session.state.step_count,
    }


def _element_distances(config: EnvConfig, state: SimState) -> list[dict]:
    """Per-element report of how far each joint sits from its nearest extreme."""
    rows = []
    for e in range(config.num_elements):
        theta = float(state.joints[e])
        rows.append(
            {
                "element": e,
                "joint": theta,
                "to_closed": abs(theta),
                "to_open": abs(theta - 1.0),
                "in_band": abs(theta) <= config.eps or abs(theta - 1.0) <= config.eps,
            }
        )
    return rows


class DemoSink:
    """Appends finalized episodes to one JSONL demos file, header first."""

    def __init__(self, path: str | Path, config: EnvConfig):
        self.path = Path(path)
        self.config = config
        self.lock = threading.Lock()
        self._episode_count = self._scan_existing()

    def _scan_existing(self) -> int:
        if not self.path.exists() or self.path.stat().st_size == 0:
            return 0
        episodes = set()
        with open(self.path) as fh:
            header = json.loads(fh.readline())
            if header.get("env_config_hash") != self.config.config_hash():
                raise ConfigError(
                    f"demos file {self.path} is bound to a different environment"
                )
            for line in fh:
                if line.strip():
                    episodes.add(json.loads(line)["episode"])
        return len(episodes)

    def append_episode(self, steps: list[DemoStep]) -> int:
        with self.lock:
            new_file = not self.path.exists() or self.path.stat().st_size == 0
            with open(self.path, "a") as fh:
                if new_file:
                    fh.write(
                        json.dumps(
                            {
                                "env_config_hash": self.config.config_hash(),
                                "num_elements": self.config.num_elements,
                            }
                        )
                        + "\n"
                    )
                episode_idx = self._episode_count
                for t, step in enumerate(steps):
                    fh.write(
                        json.dumps(
                            {
                                "episode": episode_idx,
                                "t": t,
                                "state": [float(x) for x in step.state],
                                "action": [float(x) for x in step.action],
                                "changepoint": step.changepoint,
                                "goal_id": step.goal_id,
                            }
                        )
                        + "\n"
                    )
            self._episode_count += 1
            return episode_idx


def create_app(
    env_config: EnvConfig | None = None,
    demos_path: str | Path = "teleop_demos.jsonl",
    max_sessions: int = DEFAULT_MAX_SESSIONS,
) -> FastAPI:
    """Build the service; one env config per server, one live env per session."""
    server_config = env_config or default_config(2)
    app = FastAPI(title="practicum teleop service")
    # The browser client is served from its own origin during development.
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()
    sink = DemoSink(demos_path, server_config)

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    @app.post("/sessions")
    def create_session(body: dict | None = None):
        if body:
            try:
                config = EnvConfig.from_dict(body)
            except ConfigError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            if config.config_hash() != server_config.config_hash():
                raise HTTPException(
                    status_code=400,
                    detail="session config must match the server environment "
                    "(the demos file is bound to one config)",
                )
        config = server_config
        with sessions_lock:
            if len(sessions) >= max_sessions:
                raise HTTPException(status_code=429, detail="session capacity exceeded")
            session_id = uuid.uuid4().hex[:12]
            state = kitchen.reset(config, start=0, seed=0)
            session = Session(
                session_id=session_id,
                config=config,
                state=state,
                steps=[DemoStep(state.to_vector(), np.zeros(2), changepoint=False, goal_id=None)],
            )
            sessions[session_id] = session
        return {
            "session": session_id,
            "config": config.to_dict(),
            "num_elements": config.num_elements,
            **_state_payload(session),
        }

    @app.get("/sessions/{session_id}/state")
    def session_state(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return _state_payload(session)

    def apply_step(session: Session, action_raw) -> dict:
        action = np.asarray(action_raw, dtype=float)
        if action.shape != (2,) or not np.all(np.isfinite(action)):
            raise ValueError(f"action must be two finite numbers, got {action_raw!r}")
        clamped = bool(np.any(np.abs(action) > session.config.a_max + 1e-12))
        with session.lock:
            session.state = kitchen.step(session.config, session.state, action)
            session.steps.append(
                DemoStep(
                    session.state.to_vector(),
                    np.clip(action, -session.config.a_max, session.config.a_max),
                    changepoint=False,
                    goal_id=None,
                )
            )
            payload = _state_payload(session)
        payload["clamped"] = clamped
        return payload

    @app.post("/sessions/{session_id}/step")
    def http_step(session_id: str, body: dict):
        session = get_session(session_id)
        try:
            return apply_step(session, body.get("action"))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.websocket("/sessions/{session_id}/ws")
    async def ws_step(websocket: WebSocket, session_id: str):
        session = sessions.get(session_id)
        await websocket.accept()
        if session is None:
            await websocket.send_json({"error": f"unknown session {session_id}"})
            await websocket.close(code=1008)
            return
        try:
            while True:
                message = await websocket.receive_json()
                try:
                    payload = apply_step(session, message.get("action"))
                except ValueError as exc:
                    payload = {"error": str(exc)}
                await websocket.send_json(payload)
        except WebSocketDisconnect:
            return

    @app.post("/sessions/{session_id}/mark")
    def mark_changepoint(session_id: str):
        session = get_session(session_id)
        with session.lock:
            goal_id = kitchen.discretize(session.config, session.state)
            if goal_id is None:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "error": "state is not at any goal of interest",
                        "distances": _element_distances(session.config, session.state),
                    },
                )
            previous = [s.goal_id for s in session.steps if s.changepoint]
            if previous and previous[-1] == goal_id:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "error": f"consecutive changepoints must differ; goal {goal_id} "
                        "was already the last mark",
                        "distances": _element_distances(session.config, session.state),
                    },
                )
            last = session.steps[-1]
            last.changepoint = True
            last.goal_id = goal_id
            return {"goal_id": goal_id, "changepoints": session.changepoint_count}

    @app.post("/sessions/{session_id}/finalize")
    def finalize_session(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.changepoint_count < 2:
                raise HTTPException(
                    status_code=409,
                    detail=f"episode needs at least 2 changepoints, "
                    f"has {session.changepoint_count}",
                )
            reason = validate_episode(session.config, session.steps)
            if reason is not None:
                raise HTTPException(status_code=409, detail=f"episode invalid: {reason}")
            episode_idx = sink.append_episode(session.steps)
            changepoints = session.changepoint_count
        with sessions_lock:
            sessions.pop(session_id, None)
        return {"episode": episode_idx, "changepoints": changepoints}

    return app


def serve(
    env_config: EnvConfig | None = None,
    host: str = "127.0.0.1",
    port: int = 8765,
    demos_path: str | Path = "teleop_demos.jsonl",
    max_sessions: int = DEFAULT_MAX_SESSIONS,
) -> None:
    import uvicorn

    app = create_app(env_config, demos_path, max_sessions)
    uvicorn.run(app, host=host, port=port, log_level="info")
