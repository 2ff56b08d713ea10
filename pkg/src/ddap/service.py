"""HTTP facade over the orchestrator, consumed by the chat UI.

Session state lives on disk, so every request reloads it and a restarted
service resumes where it left off. Requests within one session are
serialized by a non-blocking per-session lock: a second concurrent call
gets a bad_stage "busy" error instead of queueing. Every error response
has the same two-field shape: {"code": <api code>, "detail": <text>}.
"""

from __future__ import annotations

import os
import threading
from typing import Optional

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .agents.backends import backend_from_env
from .errors import DdapError, StageOrderError
from .orchestrator import Orchestrator
from .sandbox import SandboxLimits, execute_code
from .store import ArtifactStore

ENV_PORT = "DDAP_PORT"
DEFAULT_PORT = 8756

STATUS_BY_CODE = {
    "not_found": 404,
    "bad_stage": 409,
    "validation_failed": 422,
    "backend_failure": 502,
    "guardrail_exhausted": 502,
    "sandbox_error": 500,
}


class _SessionLocks:
    """One non-blocking lock per session id."""

    def __init__(self):
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    def acquire(self, session_id: str) -> threading.Lock:
        with self._guard:
            lock = self._locks.setdefault(session_id, threading.Lock())
        if not lock.acquire(blocking=False):
            raise StageOrderError(f"session {session_id} is busy with another request")
        return lock


def create_app(store: ArtifactStore | None = None, backend=None,
               orchestrator: Orchestrator | None = None,
               sandbox_limits: SandboxLimits | None = None) -> FastAPI:
    if orchestrator is None:
        store = store or ArtifactStore()
        backend = backend if backend is not None else backend_from_env()
        orchestrator = Orchestrator(store=store, backend=backend)
    orch = orchestrator
    limits = sandbox_limits or SandboxLimits.from_env()
    locks = _SessionLocks()

    app = FastAPI(title="ddap", docs_url=None, redoc_url=None)
    app.state.orchestrator = orch

    @app.exception_handler(DdapError)
    async def _ddap_error(request: Request, exc: DdapError):
        return JSONResponse(
            status_code=STATUS_BY_CODE.get(exc.api_code, 500),
            content={"code": exc.api_code, "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "validation_failed",
                                     "detail": "malformed request body"})

    @app.exception_handler(Exception)
    async def _unexpected(request: Request, exc: Exception):
        return JSONResponse(status_code=500,
                            content={"code": "backend_failure",
                                     "detail": "internal error"})

    def _with_session(session_id: str, fn):
        lock = locks.acquire(session_id)
        try:
            state = orch.load_session(session_id)
            return fn(state)
        finally:
            lock.release()

    def _owning_session(ref_path: str) -> str:
        return orch.store.find_ref(ref_path).session_id

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/sessions", status_code=201)
    def create_session(body: Optional[dict] = Body(default=None)):
        profile = (body or {}).get("profile")
        state = orch.create_session(profile)
        return {"session_id": state.session_id, "stage": state.stage}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return orch.load_session(session_id).summary()

    @app.post("/api/sessions/{session_id}/messages")
    def post_message(session_id: str, body: dict = Body(...)):
        def run(state):
            result = orch.submit_user_message(state, body.get("text", ""))
            out = result.to_dict()
            out["stage"] = state.stage
            return out
        return _with_session(session_id, run)

    @app.get("/api/sessions/{session_id}/artifacts")
    def list_artifacts(session_id: str):
        state = orch.load_session(session_id)
        refs = [ref.to_dict() for ref in state.artifact_refs.values()]
        listed = {r["path"] for r in refs}
        refs.extend(ref.to_dict() for ref in state.code_refs
                    if ref.path not in listed)
        refs.sort(key=lambda r: r["path"])
        return {"artifacts": refs}

    @app.get("/api/artifacts/{ref_path:path}")
    def get_artifact(ref_path: str):
        ref = orch.store.find_ref(ref_path)
        if ref.kind == "code_artifact":
            return orch.store.load_code_artifact(ref)
        return orch.store.load_artifact(ref)

    @app.post("/api/sessions/{session_id}/import")
    def import_artifact(session_id: str, body: dict = Body(...)):
        ref = orch.store.find_ref(str(body.get("ref", "")))
        def run(state):
            orch.import_artifact(state, ref)
            return state.summary()
        return _with_session(session_id, run)

    @app.post("/api/sessions/{session_id}/pipelines/select")
    def select_pipeline(session_id: str, body: dict = Body(...)):
        def run(state):
            orch.select_pipeline(state, body.get("index"))
            return state.summary()
        return _with_session(session_id, run)

    @app.post("/api/sessions/{session_id}/preprocessing")
    def generate_preprocessing(session_id: str):
        def run(state):
            document = orch.generate_preprocessing(state)
            return {"ref": state.ref("preprocessing_plan").to_dict(),
                    "document": document, "stage": state.stage}
        return _with_session(session_id, run)

    @app.post("/api/sessions/{session_id}/pipelines")
    def generate_pipelines(session_id: str):
        def run(state):
            document = orch.generate_pipelines(state)
            return {"ref": state.ref("pipeline_set").to_dict(),
                    "document": document, "stage": state.stage}
        return _with_session(session_id, run)

    @app.post("/api/sessions/{session_id}/code")
    def generate_code(session_id: str, body: Optional[dict] = Body(default=None)):
        index = (body or {}).get("candidate_index")
        def run(state):
            document = orch.generate_code(state, index)
            return {"ref": state.code_refs[-1].to_dict(),
                    "document": document, "stage": state.stage}
        return _with_session(session_id, run)

    @app.post("/api/code/{ref_path:path}/execute")
    def execute(ref_path: str):
        ref = orch.store.find_ref(ref_path)
        def run(state):
            document = orch.store.load_code_artifact(ref)
            result = execute_code(document, limits)
            orch.record_execution(state, ref, result)
            return {"result": result.to_dict(), "stage": state.stage}
        return _with_session(ref.session_id, run)

    @app.post("/api/code/{ref_path:path}/repair")
    def repair(ref_path: str):
        ref = orch.store.find_ref(ref_path)
        def run(state):
            document, new_ref = orch.repair_recorded(state, ref)
            return {"ref": new_ref.to_dict(), "document": document,
                    "stage": state.stage}
        return _with_session(ref.session_id, run)

    @app.post("/api/sessions/{session_id}/finalize")
    def finalize(session_id: str):
        def run(state):
            orch.finalize(state)
            return state.summary()
        return _with_session(session_id, run)

    return app


def serve(port: Optional[int] = None, host: str = "127.0.0.1",
          store: ArtifactStore | None = None, backend=None) -> None:
    """Run the HTTP service until interrupted."""
    import uvicorn

    if port is None:
        port = int(os.environ.get(ENV_PORT, DEFAULT_PORT))
    app = create_app(store=store, backend=backend)
    uvicorn.run(app, host=host, port=port, log_level="warning")
