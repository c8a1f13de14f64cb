"""HTTP boundary: a thin adapter over the workflow engine.

Responses embed the modules' canonical serializations unchanged, wrapped
in small envelopes.  Quiz answer keys are redacted server-side until the
quiz is submitted; clients are never trusted with them.
"""

from __future__ import annotations

import os
from typing import Any

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .engine import Engine
from .errors import (
    EmptyQuery,
    IllegalState,
    IndexOutOfRange,
    InvalidEdit,
    LearnmateError,
    LengthMismatch,
    LineageMismatch,
    Mismatch,
    NoAvailability,
    NothingToUndo,
    NotFound,
    ParseError,
    ProviderError,
    RepairExhausted,
    StaleProposal,
    TierAlreadyFilled,
    UnknownAnswer,
    UnknownSession,
    ValidationFailed,
)
from .core import plan_to_json, profile_to_json
from .studymate import Tier

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (NotFound, 404),
    (UnknownSession, 404),
    (UnknownAnswer, 404),
    (StaleProposal, 409),
    (IllegalState, 409),  # includes IllegalTransition
    (TierAlreadyFilled, 409),
    (NothingToUndo, 409),
    (ValidationFailed, 422),
    (NoAvailability, 422),
    (RepairExhausted, 422),
    (InvalidEdit, 422),
    (LengthMismatch, 422),
    (IndexOutOfRange, 422),
    (EmptyQuery, 422),
    (Mismatch, 422),
    (LineageMismatch, 422),
    (ParseError, 422),
    (ProviderError, 502),
]


def _status_for(error: LearnmateError) -> int:
    for cls, status in _STATUS_BY_ERROR:
        if isinstance(error, cls):
            return status
    return 500


def error_body(error: LearnmateError) -> dict:
    return {"code": error.code, "message": error.message, "detail": error.detail}


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="learnmate", version="0.1.0")

    @app.exception_handler(LearnmateError)
    async def _domain_error(request: Request, exc: LearnmateError):
        return JSONResponse(status_code=_status_for(exc), content=error_body(exc))

    # --- planning ---------------------------------------------------------

    @app.post("/profiles")
    def create_profile(body: dict = Body(...)):
        profile = engine.create_profile(body)
        return {"profile": profile_to_json(profile)}

    @app.post("/plans")
    def create_plan(body: dict = Body(...)):
        plan = engine.create_plan(
            str(body.get("learner_id", "")),
            str(body.get("course_id", "")),
            horizon_weeks=body.get("horizon_weeks"),
        )
        return {"plan": plan_to_json(plan)}

    @app.get("/plans/{plan_id}.ics")
    def plan_ics(plan_id: str, version: int | None = None):
        data = engine.plan_ics(plan_id, version)
        return Response(content=data, media_type="text/calendar")

    @app.get("/plans/{plan_id}/history")
    def plan_history(plan_id: str):
        return {"history": engine.plan_history(plan_id)}

    @app.get("/plans/{plan_id}")
    def get_plan(plan_id: str, version: int | None = None):
        return {"plan": plan_to_json(engine.get_plan(plan_id, version))}

    # --- sessions -----------------------------------------------------------

    @app.post("/sessions/{session_id}/start")
    def start_session(session_id: str):
        ctx = engine.start_session(session_id)
        return {
            "session": {
                "session_id": ctx.session_id,
                "plan_id": ctx.plan_id,
                "plan_version": ctx.plan_version,
                "state": ctx.state.value,
                "lesson_ids": list(ctx.lesson_ids),
                "guidance": ctx.guidance,
            }
        }

    @app.post("/sessions/{session_id}/questions")
    def ask_question(session_id: str, body: dict = Body(...)):
        answer = engine.ask_question(session_id, str(body.get("text", "")))
        return {"answer": answer.to_json()}

    @app.post("/sessions/{session_id}/answers/{answer_id}/expand")
    def expand_answer(session_id: str, answer_id: str, body: dict = Body(...)):
        tier = Tier(str(body.get("tier", "")))
        content = engine.expand_answer(session_id, answer_id, tier)
        return {"expansion": content.to_json()}

    @app.post("/sessions/{session_id}/end")
    def end_session(session_id: str):
        quiz = engine.end_session(session_id)
        # correct_index withheld until the quiz is submitted
        return {"quiz": quiz.to_json(include_answers=False)}

    @app.post("/sessions/{session_id}/quiz")
    def submit_quiz(session_id: str, body: dict = Body(...)):
        answers = [int(a) for a in body.get("answers", [])]
        result, report = engine.submit_quiz(session_id, answers)
        return {"result": result.to_json(), "report": report.to_json()}

    @app.get("/sessions/{session_id}/digest")
    def session_digest(session_id: str):
        return {"digest": engine.session_digest(session_id).to_json()}

    # --- adaptation -------------------------------------------------------------

    @app.post("/plans/{plan_id}/adaptations")
    def propose(plan_id: str, body: dict | None = Body(default=None)):
        manual_ops = (body or {}).get("ops")
        manual_rationales = (body or {}).get("rationales")
        proposal = engine.propose_adaptation(plan_id, manual_ops, manual_rationales)
        return {"proposal": proposal.to_json()}

    @app.post("/adaptations/{proposal_id}/decision")
    def decide(proposal_id: str, body: dict = Body(...)):
        head = engine.decide(
            proposal_id,
            str(body.get("action", "")),
            ops=body.get("ops"),
            rationales=body.get("rationales"),
        )
        return {"plan": plan_to_json(head)}

    @app.post("/plans/{plan_id}/undo")
    def undo(plan_id: str):
        return {"plan": plan_to_json(engine.undo_plan(plan_id))}

    return app


def serve(engine: Engine) -> None:  # pragma: no cover - manual entry point
    """Run the service; LISTEN_ADDR is "host:port" (default 127.0.0.1:8080)."""
    import uvicorn

    addr = os.environ.get("LISTEN_ADDR", "127.0.0.1:8080")
    host, _, port = addr.rpartition(":")
    uvicorn.run(create_app(engine), host=host or "127.0.0.1", port=int(port or 8080))


def openapi_description() -> dict:
    """The service's OpenAPI document (independent of any store state)."""
    import tempfile

    from .provider import ScriptedProvider

    with tempfile.TemporaryDirectory() as tmp:
        return create_app(Engine(tmp, ScriptedProvider({}))).openapi()


def write_openapi(path: str) -> None:
    """Regenerate the shipped openapi.json after route changes."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(openapi_description(), fh, indent=1, sort_keys=True)
        fh.write("\n")
