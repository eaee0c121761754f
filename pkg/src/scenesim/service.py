"""HTTP session service wrapping the orchestrator.

Endpoints:
  POST   /sessions                     {scene?, scene_path?, seed?} -> {id}
  POST   /sessions/{id}/commands       {text, render?, backend?} -> round result
  GET    /sessions/{id}/scene          scene document
  GET    /sessions/{id}/frames/{n}     PNG frame from the last rendered round
  GET    /sessions/{id}/export         renderer-bridge document
  DELETE /sessions/{id}

Sessions live in process memory with a single writer each; a second command
arriving while one is in flight gets 409.
"""

from __future__ import annotations

import io
import threading
import uuid
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from . import dsl, orchestrator
from .compositor import to_srgb_u8
from .demo import demo_scene
from .export import export_document
from .motion import PlanningError
from .rendering import RenderOptions
from .scene import load_scene, scene_from_dict, scene_to_dict, validate_scene


class CreateSessionRequest(BaseModel):
    scene: Optional[dict] = None
    scene_path: Optional[str] = None
    seed: int = 0
    render_options: Optional[dict] = None


class CommandRequest(BaseModel):
    text: str
    render: bool = False
    backend: Optional[dict] = None


@dataclass
class SessionHandle:
    session: orchestrator.Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_frames: list[np.ndarray] = field(default_factory=list)
    last_summary: Optional[dict] = None


def create_app() -> FastAPI:
    app = FastAPI(title="scenesim session service")
    sessions: dict[str, SessionHandle] = {}
    app.state.sessions = sessions

    def handle(session_id: str) -> SessionHandle:
        try:
            return sessions[session_id]
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}")

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest) -> dict:
        if req.scene is not None:
            state = scene_from_dict(req.scene)
        elif req.scene_path:
            state = load_scene(req.scene_path)
        else:
            state = demo_scene()
        session_id = uuid.uuid4().hex[:12]
        session = orchestrator.Session(id=session_id, state=state, seed=req.seed)
        if req.render_options:
            session.render_options = RenderOptions(**req.render_options)
        sessions[session_id] = SessionHandle(session)
        return {"id": session_id, "violations": validate_scene(state)}

    @app.post("/sessions/{session_id}/commands")
    def post_command(session_id: str, req: CommandRequest) -> dict:
        h = handle(session_id)
        if not h.lock.acquire(blocking=False):
            raise HTTPException(409, "a command is already in flight")
        try:
            backend = None
            if req.backend:
                backend = dsl.InterpreterBackend(**req.backend)
            session = h.session
            text = dsl.CommandText(req.text, round=session.round_counter)
            order = orchestrator.plan_round(session, text, backend)
            result = orchestrator.execute_round(session, order, render=req.render)
            h.last_frames = result.frames
            summary = _round_summary(session, order, result)
            h.last_summary = summary
            return summary
        except (dsl.ParseError, dsl.AmbiguityError, dsl.ReferenceError,
                orchestrator.UnsupportedAbstractionError, PlanningError) as exc:
            raise HTTPException(422, detail=_error_detail(exc))
        except orchestrator.RoundError as exc:
            raise HTTPException(422, detail={
                "error": str(exc.cause), "role": exc.role.value,
                "config": exc.config.to_dict() if exc.config else None,
            })
        finally:
            h.lock.release()

    @app.get("/sessions/{session_id}/scene")
    def get_scene(session_id: str) -> dict:
        return scene_to_dict(handle(session_id).session.state)

    @app.get("/sessions/{session_id}/frames/{n}")
    def get_frame(session_id: str, n: int):
        h = handle(session_id)
        if not (0 <= n < len(h.last_frames)):
            raise HTTPException(404, f"no frame {n}; last round rendered "
                                     f"{len(h.last_frames)} frames")
        buf = io.BytesIO()
        from PIL import Image
        Image.fromarray(to_srgb_u8(h.last_frames[n])).save(buf, format="PNG")
        return Response(buf.getvalue(), media_type="image/png")

    @app.get("/sessions/{session_id}/export")
    def get_export(session_id: str) -> dict:
        session = handle(session_id).session
        return export_document(session.state, session.bank)

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str) -> dict:
        handle(session_id)
        del sessions[session_id]
        return {"deleted": session_id}

    return app


def _round_summary(session, order, result) -> dict[str, Any]:
    return {
        "session": session.id,
        "round": session.round_counter - 1,
        "configs_by_role": {
            role.value: [c.to_dict() for c in configs]
            for role, configs in order.configs_by_role.items()
        },
        "violations": validate_scene(session.state),
        "frame_count": len(result.frames),
        "frames": [f"/sessions/{session.id}/frames/{i}"
                   for i in range(len(result.frames))],
        "vehicles": [v.instance_id for v in session.state.vehicles],
        "deleted_ids": sorted(session.state.deleted_ids),
        "warnings": result.warnings,
    }


def _error_detail(exc: Exception) -> dict:
    detail = {"error": str(exc), "kind": type(exc).__name__}
    if isinstance(exc, dsl.ParseError):
        detail["clause"] = exc.clause
        detail["rule_hint"] = exc.rule_hint
    return detail


app = create_app()


def main(port: int = 8000) -> None:
    import os
    import uvicorn
    port = int(os.environ.get("SCENESIM_PORT", port))
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
