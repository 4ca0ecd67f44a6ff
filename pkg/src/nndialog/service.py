"""HTTP front door for trained models.

One process serves one checkpoint. Sessions live in memory behind
per-session locks (endpoints run in a threadpool); every error body is
{"error": message} so clients never need to parse two shapes.
"""

import os
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from nndialog.session import InferenceSession, describe_bundle


class MessageBody(BaseModel):
    text: str


class _SessionRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions = {}
        self._locks = {}

    def create(self, session):
        with self._lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        return session.id

    def get(self, session_id):
        with self._lock:
            session = self._sessions.get(session_id)
            lock = self._locks.get(session_id)
        return session, lock

    def drop(self, session_id):
        with self._lock:
            existed = session_id in self._sessions
            self._sessions.pop(session_id, None)
            self._locks.pop(session_id, None)
        return existed

    def __len__(self):
        with self._lock:
            return len(self._sessions)


def create_app(bundle, kb, frontend_dir=None):
    """FastAPI app serving chat sessions for one model checkpoint; mounts
    the static UI at / when a built frontend directory is supplied."""
    app = FastAPI(title="nndialog", docs_url=None, redoc_url=None)
    registry = _SessionRegistry()
    app.state.registry = registry

    def _not_found():
        return JSONResponse(status_code=404, content={"error": "unknown session"})

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "body must be JSON with a string 'text' field"})

    @app.get("/api/meta")
    def meta():
        return describe_bundle(bundle, kb)

    @app.post("/api/session", status_code=201)
    def create_session():
        session = InferenceSession(bundle, kb)
        registry.create(session)
        return {"session_id": session.id}

    @app.post("/api/session/{session_id}/message")
    def message(session_id: str, body: MessageBody):
        session, lock = registry.get(session_id)
        if session is None:
            return _not_found()
        with lock:
            return session.step(body.text)

    @app.get("/api/session/{session_id}/state")
    def state(session_id: str):
        session, lock = registry.get(session_id)
        if session is None:
            return _not_found()
        with lock:
            return session.state()

    @app.delete("/api/session/{session_id}")
    def drop(session_id: str):
        if not registry.drop(session_id):
            return _not_found()
        return {"ok": True}

    if frontend_dir and os.path.isdir(frontend_dir):
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="frontend")

    return app
