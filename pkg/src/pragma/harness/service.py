"""Session service for live instruction following in the simulated domains.

A session walks one instance: the client reads one sentence at a time,
submits actions (or a shift to the next sentence), and finishes to record
success. World transitions happen here and only here; the client renders
whatever state the service returns. Results append to a jsonl file under a
single-writer lock.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse

from ..errors import InvalidAction
from ..world import Instance, get_domain


@dataclass
class Session:
    session_id: str
    instance: Instance
    system: str
    sentences: list[tuple[str, ...]]
    state: object
    sent_idx: int = 0
    actions: list = field(default_factory=list)
    finished: bool = False
    success: bool | None = None
    started_at: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _session_view(s: Session) -> dict:
    domain = get_domain(s.instance.domain)
    done = s.sent_idx >= len(s.sentences)
    valid = [] if (s.finished or done) else [domain.action_to_json(a)
                                             for a in domain.valid_actions(s.state)]
    if not s.finished and not done:
        valid.append({"type": "shift", "args": {}})
    return {
        "session_id": s.session_id,
        "instance_id": s.instance.id,
        "domain": s.instance.domain,
        "system": s.system,
        "step": s.sent_idx,
        "sentence_count": len(s.sentences),
        "instruction": " ".join(s.sentences[s.sent_idx]) if not done else None,
        "state": domain.state_to_json(s.state),
        "valid_actions": valid,
        "finished": s.finished,
        "done_all_sentences": done,
    }


def make_app(instances: list[Instance], directions: dict[str, dict[str, list]] | None = None,
             results_path: str | None = None) -> FastAPI:
    """`directions` maps system name to {instance id: sentence list}; the
    built-in "human" system serves each instance's own reference sentences."""
    app = FastAPI(title="pragma-eval")
    by_id = {i.id: i for i in instances}
    order = [i.id for i in instances]
    directions = directions or {}
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    results_lock = threading.Lock()
    assign_counts: dict[str, int] = {}

    def record(s: Session, duration_ms: int) -> None:
        row = {"session_id": s.session_id, "instance_id": s.instance.id,
               "system": s.system,
               "actions": [get_domain(s.instance.domain).action_to_json(a)
                           for a in s.actions],
               "success": s.success, "duration_ms": duration_ms}
        if results_path:
            with results_lock:
                with open(results_path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(row, sort_keys=True) + "\n")
        app.state.results.append(row)

    app.state.results = []

    @app.get("/health")
    def health():
        return {"ok": True, "instances": len(by_id)}

    @app.post("/sessions")
    def create_session(body: dict):
        system = body.get("system", "human")
        instance_id = body.get("instance_id")
        with registry_lock:
            if instance_id is None:
                pool = [i for i in order
                        if body.get("domain") in (None, by_id[i].domain)]
                if not pool:
                    return JSONResponse({"error": "no instances for domain"}, status_code=404)
                n = assign_counts.get(system, 0)
                assign_counts[system] = n + 1
                instance_id = pool[n % len(pool)]
            inst = by_id.get(instance_id)
            if inst is None:
                return JSONResponse({"error": f"unknown instance {instance_id}"},
                                    status_code=404)
            if system == "human":
                sentences = [tuple(s) for s in inst.sentences]
            else:
                table = directions.get(system)
                if table is None or inst.id not in table:
                    return JSONResponse({"error": f"no directions for system {system}"},
                                        status_code=404)
                sentences = [tuple(s) for s in table[inst.id]]
            sid = uuid.uuid4().hex[:12]
            session = Session(sid, inst, system, sentences, inst.initial_state)
            sessions[sid] = session
        return _session_view(session)

    def get_or_404(sid: str) -> Session | None:
        return sessions.get(sid)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        s = get_or_404(sid)
        if s is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        with s.lock:
            return _session_view(s)

    @app.post("/sessions/{sid}/actions")
    def post_action(sid: str, body: dict):
        s = get_or_404(sid)
        if s is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        with s.lock:
            if s.finished:
                return JSONResponse({"error": "session already finished"}, status_code=409)
            action_obj = body.get("action", body)
            domain = get_domain(s.instance.domain)
            if action_obj.get("type") == "shift":
                if s.sent_idx >= len(s.sentences):
                    return JSONResponse({"error": "no sentence to shift past"},
                                        status_code=400)
                s.sent_idx += 1
                view = _session_view(s)
                view["done_sentence"] = True
                return view
            try:
                action = domain.action_from_json(action_obj)
            except (KeyError, TypeError) as e:
                return JSONResponse({"error": f"malformed action: {e}"}, status_code=400)
            if s.sent_idx >= len(s.sentences):
                return JSONResponse({"error": "all sentences consumed; finish the session"},
                                    status_code=400)
            try:
                nxt = domain.transition(s.state, action)
            except InvalidAction as e:
                return JSONResponse({"error": e.reason}, status_code=400)
            s.state = nxt
            s.actions.append(action)
            view = _session_view(s)
            view["done_sentence"] = False
            return view

    @app.post("/sessions/{sid}/finish")
    def finish(sid: str):
        s = get_or_404(sid)
        if s is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        with s.lock:
            if s.finished:
                return JSONResponse({"error": "session already finished"}, status_code=409)
            s.finished = True
            s.success = s.state == s.instance.final_state
            duration_ms = int(1000 * (time.monotonic() - s.started_at))
            record(s, duration_ms)
            return {"success": s.success, "session_id": s.session_id}

    @app.get("/results")
    def results():
        with results_lock:
            text = "".join(json.dumps(r, sort_keys=True) + "\n"
                           for r in app.state.results)
        return PlainTextResponse(text, media_type="application/jsonl")

    return app


def serve_eval(port: int, instances, directions=None, results_path=None,
               host: str = "127.0.0.1", ui_dir: str | None = None):
    """Run the session service until interrupted; optionally also serve the
    browser client (a directory containing index.html and dist/)."""
    import uvicorn

    app = make_app(instances, directions, results_path)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="warning")
