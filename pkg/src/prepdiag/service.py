"""HTTP service around the engine.

Learner-level verdicts (rejected, no_parse, unknown_word) come back as
422 with the diagnosis in the body; malformed payloads are 400; unknown
exercise or diagnosis ids are 404.  Within a session, diagnose and why
are serialized so entity counters and diagnosis caches stay coherent.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import Engine
from .errors import ParseFailure, PrepdiagFault, StaleDiagnosisError, UnknownWordError
from .session import SessionStore


class ParseBody(BaseModel):
    language: str
    text: str


class ModelBody(BaseModel):
    language: str
    text: str
    cap: int = 2


class DiagnoseBody(BaseModel):
    session: str
    exercise_id: str
    text: str
    trace: bool = False


class WhyBody(BaseModel):
    session: str
    diagnosis_id: str
    missing_literal: str
    trace: bool = False


def build_app(engine: Engine | None = None, sessions_dir: str | None = None) -> FastAPI:
    engine = engine or Engine()
    store = SessionStore(sessions_dir)
    app = FastAPI(title="prepdiag", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed payload"})

    @app.exception_handler(PrepdiagFault)
    async def fault(request: Request, exc: PrepdiagFault):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/api/exercises")
    def exercises():
        return [
            {
                "id": ex.id,
                "source_language": ex.source_language,
                "source_text": ex.source_text,
                "lexical_scope": list(ex.lexical_scope),
            }
            for ex in engine.exercises.values()
        ]

    @app.get("/api/buckwalter")
    def buckwalter():
        return {"pairs": [list(p) for p in engine.grammar.buckwalter.pairs]}

    @app.post("/api/parse")
    def parse(body: ParseBody):
        try:
            lf = engine.lf_for(body.text, body.language)
        except UnknownWordError as exc:
            return JSONResponse(
                status_code=422, content={"verdict": "unknown_word", "token": exc.token}
            )
        except ParseFailure:
            return JSONResponse(status_code=422, content={"verdict": "no_parse"})
        return {"lf": lf.render()}

    @app.post("/api/model")
    def model(body: ModelBody):
        try:
            m = engine.model_for(body.text, body.language, cap=body.cap)
        except UnknownWordError as exc:
            return JSONResponse(
                status_code=422, content={"verdict": "unknown_word", "token": exc.token}
            )
        except ParseFailure:
            return JSONResponse(status_code=422, content={"verdict": "no_parse"})
        return {"facts": m.to_strings()}

    @app.post("/api/diagnose")
    def diagnose(body: DiagnoseBody):
        if engine.exercise(body.exercise_id) is None:
            return JSONResponse(status_code=404, content={"error": "unknown exercise"})
        session = store.get(body.session)
        with session.lock:
            d = engine.diagnose(body.exercise_id, body.text, session)
        payload = d.to_dict(trace=body.trace)
        status = 200 if d.verdict == "accepted" else 422
        return JSONResponse(status_code=status, content=payload)

    @app.post("/api/why")
    def why(body: WhyBody):
        session = store.get(body.session)
        try:
            with session.lock:
                child = engine.why(session, body.diagnosis_id, body.missing_literal)
        except StaleDiagnosisError as exc:
            return JSONResponse(status_code=404, content={"error": str(exc)})
        return child.to_dict(trace=body.trace)

    @app.get("/api/compare")
    def compare(session: str, diagnosis_id: str):
        try:
            view = engine.comparison_view(store.get(session), diagnosis_id)
        except StaleDiagnosisError as exc:
            return JSONResponse(status_code=404, content={"error": str(exc)})
        return view

    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        app.mount("/", StaticFiles(directory=str(dist), html=True), name="ui")

    return app
