"""HTTP service for live human-in-the-loop sessions.

JSON over HTTP. Endpoints:
    POST /sessions                   create a session from a config document
    GET  /sessions/{id}/next         the pending query (idempotent until answered)
    POST /sessions/{id}/responses    record a response; retrains synchronously
    GET  /sessions/{id}/status       trial count, convergence gauge, class counts
    GET  /sessions/{id}/slice        2D probability slice for visualization
    GET  /sessions/{id}/export       full session document
    POST /sessions/{id}/finish       final document, then the id is retired

Persistence is a per-session journal in the data directory: the config is
written at creation and one line is appended per response, so a crash loses at
most the in-flight trial (recovery replays the journal through the
deterministic session machinery).
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .session import Session, SessionConfig, SessionDocumentError

MATCH_TOLERANCE = 1e-9


class ResponseBody(BaseModel):
    stimulus: list[float]
    response: int = Field(ge=0, le=1)


class SessionHandle:
    def __init__(self, session: Session, created_at: float):
        self.session = session
        self.created_at = created_at
        self.lock = threading.Lock()


class SessionStore:
    """In-memory registry backed by journal files in ``data_dir``."""

    def __init__(self, data_dir: str | None):
        self.data_dir = data_dir
        if data_dir:
            os.makedirs(data_dir, exist_ok=True)
        self._handles: dict[str, SessionHandle] = {}
        self._registry_lock = threading.Lock()

    # -- paths ---------------------------------------------------------------

    def _meta_path(self, sid):
        return os.path.join(self.data_dir, f"{sid}.meta.json")

    def _journal_path(self, sid):
        return os.path.join(self.data_dir, f"{sid}.journal")

    def _final_path(self, sid):
        return os.path.join(self.data_dir, f"{sid}.final.json")

    # -- lifecycle -----------------------------------------------------------

    def create(self, config: SessionConfig) -> tuple[str, SessionHandle]:
        sid = uuid.uuid4().hex
        handle = SessionHandle(Session.new(config), created_at=time.time())
        if self.data_dir:
            with open(self._meta_path(sid), "w") as fh:
                json.dump({"config": config.to_dict(), "created_at": handle.created_at}, fh)
            open(self._journal_path(sid), "w").close()
        with self._registry_lock:
            self._handles[sid] = handle
        return sid, handle

    def get(self, sid: str) -> SessionHandle:
        with self._registry_lock:
            handle = self._handles.get(sid)
        if handle is None:
            handle = self._recover(sid)
        if handle is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return handle

    def _recover(self, sid: str) -> SessionHandle | None:
        if not self.data_dir or not os.path.exists(self._meta_path(sid)):
            return None
        with open(self._meta_path(sid)) as fh:
            meta = json.load(fh)
        session = Session.new(SessionConfig.from_dict(meta["config"]))
        with open(self._journal_path(sid)) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                session.record_response(record["stimulus"], record["response"])
        handle = SessionHandle(session, created_at=meta.get("created_at", time.time()))
        with self._registry_lock:
            self._handles[sid] = handle
        return handle

    def journal_response(self, sid: str, stimulus, response: int):
        if not self.data_dir:
            return
        with open(self._journal_path(sid), "a") as fh:
            fh.write(json.dumps({"stimulus": [float(v) for v in stimulus], "response": int(response)}))
            fh.write("\n")

    def finish(self, sid: str, document: dict):
        if self.data_dir:
            with open(self._final_path(sid), "w") as fh:
                json.dump(document, fh)
            for path in (self._meta_path(sid), self._journal_path(sid)):
                if os.path.exists(path):
                    os.remove(path)
        with self._registry_lock:
            self._handles.pop(sid, None)


def _status_payload(session: Session) -> dict:
    report = session.convergence()
    y = session.y
    return {
        "trial_count": session.trial_count,
        "converged": report.converged,
        "snr": report.snr,
        "window_mean": report.window_mean,
        "fisher_history": [float(v) for v in session.fisher_history[-25:]],
        "class_counts": {"0": int(np.sum(y == 0.0)), "1": int(np.sum(y == 1.0))},
    }


def _next_payload(session: Session) -> dict:
    x, trial_index, was_random = session.next_query()
    return {
        "stimulus": [float(v) for v in x],
        "trial_index": trial_index,
        "was_random_exploration": was_random,
    }


def create_app(data_dir: str | None = None, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="psychonet session service")
    store = SessionStore(data_dir)
    app.state.store = store

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(config: dict):
        try:
            session_config = SessionConfig.from_dict(config)
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"invalid config: {exc}")
        sid, handle = store.create(session_config)
        return {"id": sid, "trial_count": handle.session.trial_count}

    @app.get("/sessions/{sid}/next")
    def get_next(sid: str):
        handle = store.get(sid)
        with handle.lock:
            return _next_payload(handle.session)

    @app.post("/sessions/{sid}/responses")
    def post_response(sid: str, body: ResponseBody):
        handle = store.get(sid)
        with handle.lock:
            session = handle.session
            pending = np.asarray(session.pending_query)
            given = np.asarray(body.stimulus, dtype=np.float64)
            if given.shape != pending.shape or np.any(np.abs(given - pending) > MATCH_TOLERANCE):
                raise HTTPException(
                    status_code=409,
                    detail="stimulus does not match the pending query; re-fetch /next",
                )
            session.record_response(pending, body.response)
            store.journal_response(sid, pending, body.response)
            return _status_payload(session)

    @app.get("/sessions/{sid}/status")
    def get_status(sid: str):
        handle = store.get(sid)
        with handle.lock:
            return _status_payload(handle.session)

    @app.get("/sessions/{sid}/slice")
    def get_slice(
        sid: str,
        dim_x: int = 0,
        dim_y: int = 1,
        resolution: int = 64,
        fixed: str = "",
        include_std: bool = False,
    ):
        handle = store.get(sid)
        with handle.lock:
            session = handle.session
            dim = session.config.dim
            if dim < 2:
                raise HTTPException(status_code=400, detail="slices need at least 2 dimensions")
            if not (0 <= dim_x < dim and 0 <= dim_y < dim) or dim_x == dim_y:
                raise HTTPException(status_code=400, detail="dim_x and dim_y must be distinct valid axes")
            if resolution < 2 or resolution > 512:
                raise HTTPException(status_code=400, detail="resolution must be in [2, 512]")
            bounds = session.config.bounds_array
            other_dims = [d for d in range(dim) if d not in (dim_x, dim_y)]
            if fixed:
                try:
                    fixed_values = [float(v) for v in fixed.split(",")]
                except ValueError:
                    raise HTTPException(status_code=400, detail="fixed must be comma-separated floats")
            else:
                fixed_values = [float(bounds[d].mean()) for d in other_dims]
            if len(fixed_values) != len(other_dims):
                raise HTTPException(
                    status_code=400,
                    detail=f"fixed must supply {len(other_dims)} values (ascending dimension order)",
                )
            xs = np.linspace(bounds[dim_x, 0], bounds[dim_x, 1], resolution)
            ys = np.linspace(bounds[dim_y, 0], bounds[dim_y, 1], resolution)
            grid = np.empty((resolution * resolution, dim))
            for d, value in zip(other_dims, fixed_values):
                grid[:, d] = value
            mx, my = np.meshgrid(xs, ys, indexing="xy")
            grid[:, dim_x] = mx.ravel()
            grid[:, dim_y] = my.ravel()
            probs = handle.session.estimator.response_probability(grid)
            payload = {
                "dim_x": dim_x,
                "dim_y": dim_y,
                "resolution": resolution,
                "axis_x": [float(v) for v in xs],
                "axis_y": [float(v) for v in ys],
                "values": [float(v) for v in probs],
                "recent_stimuli": [
                    [float(v) for v in xi] for xi in session.X[-10:]
                ],
            }
            if include_std:
                _, std = session.estimator.predict_uncertainty(grid, seed=0)
                payload["std"] = [float(v) for v in std]
            return payload

    @app.get("/sessions/{sid}/export")
    def export_session(sid: str):
        handle = store.get(sid)
        with handle.lock:
            return JSONResponse(handle.session.export())

    @app.post("/sessions/{sid}/finish")
    def finish_session(sid: str):
        handle = store.get(sid)
        with handle.lock:
            document = handle.session.export()
        store.finish(sid, document)
        return JSONResponse(document)

    if static_dir and os.path.isdir(static_dir):
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve(port: int = 8000, data_dir: str | None = None, static_dir: str | None = None,
          host: str = "127.0.0.1"):
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    app = create_app(data_dir=data_dir, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)
