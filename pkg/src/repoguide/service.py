"""HTTP service exposing sessions, answers, and chain traces for the chat UI."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from repoguide.config import AppConfig
from repoguide.orchestrator import Orchestrator, StageError
from repoguide.vectorstore import VectorIndex


class AskBody(BaseModel):
    question: str


def create_app(config: AppConfig, index: VectorIndex | None = None) -> FastAPI:
    if index is None:
        if not (config.index_dir / "meta.json").exists():
            raise FileNotFoundError(
                f"no index found in {config.index_dir}; run `repoguide index` first"
            )
        index = VectorIndex.load(config.index_dir)
    orch = Orchestrator(
        index,
        config.embedding_provider(),
        config.chat_provider(),
        config.data_dir,
        config.orchestrator_config(),
    )
    app = FastAPI(title="repoguide")
    app.state.orchestrator = orch

    @app.exception_handler(RequestValidationError)
    async def malformed_body(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/sessions")
    def create_session():
        return {"session_id": orch.sessions.create()}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        if not orch.sessions.exists(session_id):
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        turns = [
            {
                "turn_index": t["turn_index"],
                "question": t["question"],
                "final_answer": t.get("final_answer", ""),
                "error_stage": t.get("error_stage"),
            }
            for t in orch.sessions.turns(session_id)
        ]
        return {"session_id": session_id, "turns": turns}

    @app.post("/sessions/{session_id}/ask")
    def ask(session_id: str, body: AskBody):
        if not orch.sessions.exists(session_id):
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        if not body.question.strip():
            return JSONResponse(status_code=400, content={"detail": "question must be non-empty"})
        try:
            final, turn_index = orch.answer(session_id, body.question)
        except StageError as exc:
            return JSONResponse(
                status_code=502, content={"stage": exc.stage, "detail": str(exc)}
            )
        return {
            "final_answer": final.markdown,
            "citations": final.citations,
            "turn_index": turn_index,
        }

    @app.get("/sessions/{session_id}/turns/{turn_index}/trace")
    def get_trace(session_id: str, turn_index: int):
        if not orch.sessions.exists(session_id):
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        path = orch.trace_path(session_id, turn_index)
        if not path.exists():
            return JSONResponse(status_code=404, content={"detail": "trace unavailable"})
        return orch.load_trace(session_id, turn_index)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "files": index.num_files, "chunks": index.num_chunks}

    return app
