"""HTTP audit API over a loop workspace.

Reports are precomputed files; the only mutating endpoint forwards to the
loop controller's decision gate.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from aloxbench.errors import AloxError, ConflictError, NotFoundError, StateError
from aloxbench.loop.controller import LoopController
from aloxbench.loop.report import REPORT_SCHEMA, report_document
from aloxbench.loop.state import ACTIONS
from aloxbench.loop.workspace import Workspace

DASHBOARD_DIR = "dashboard"  # built bundle, relative to the workspace


def _error(status: int, exc: AloxError | str, category: str | None = None, **extra) -> JSONResponse:
    if isinstance(exc, AloxError):
        body = {"error": exc.category, "message": str(exc)}
    else:
        body = {"error": category or "bad-request", "message": exc}
    body.update(extra)
    return JSONResponse(body, status_code=status)


def _status(ctl: LoopController) -> dict:
    s = ctl.state()
    return {"phase": s.phase, "iteration": s.iteration, "converged": s.converged,
            "completed_phases": list(s.completed), "last_error": s.last_error, "decisions": list(s.decisions)}


def create_app(workspace, static_dir=None) -> FastAPI:
    ws = Workspace(workspace)
    app = FastAPI(title="aloxbench audit API")

    def controller() -> LoopController:
        return LoopController(ws)

    @app.get("/api/status")
    def status():
        return _status(controller())

    @app.get("/api/iterations")
    def iterations():
        return ws.iterations()

    @app.get("/api/iterations/{k}/report")
    def report(k: int):
        try:
            rep, _ = ws.read_report(k)
        except NotFoundError as exc:
            return _error(404, exc)
        s = _status(controller())
        live = {"phase": s["phase"] if s["iteration"] == k else "Superseded", "iteration": k,
                "converged": rep.converged, "loop_iteration": s["iteration"], "loop_phase": s["phase"]}
        return report_document(rep, live)

    @app.post("/api/iterations/{k}/decision")
    async def decision(k: int, request: Request):
        try:
            body = await request.json()
        except ValueError:
            return _error(400, "body is not valid JSON", field="body")
        if not isinstance(body, dict):
            return _error(400, "body must be a JSON object", field="body")
        action = body.get("action")
        if action not in ACTIONS:
            return _error(400, f"action must be one of {', '.join(ACTIONS)}", field="action")
        note = body.get("note", "")
        if note is None:
            note = ""
        if not isinstance(note, str):
            return _error(400, "note must be a string", field="note")
        if "iteration" in body and body["iteration"] != k:
            return _error(400, "iteration in body does not match the URL", field="iteration")
        try:
            entry = controller().decide(action, note, k)
        except NotFoundError as exc:
            return _error(404, exc)
        except ConflictError as exc:
            return _error(409, exc, prior=exc.prior)
        except StateError as exc:
            return _error(409, exc)
        except AloxError as exc:
            return _error(400, exc)
        return {"decision": entry, "status": _status(controller())}

    @app.get("/api/schema")
    def schema():
        return {"report_schema": REPORT_SCHEMA}

    bundle = Path(static_dir) if static_dir is not None else Path(workspace) / DASHBOARD_DIR
    if (bundle / "index.html").exists():
        app.mount("/", StaticFiles(directory=str(bundle), html=True), name="dashboard")
    return app
