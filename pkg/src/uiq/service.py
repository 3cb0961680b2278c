"""HTTP service: live sessions, the grading queue, and the leaderboard.

The service is a thin JSON layer over the session runner, grading queue,
and results store. Server-side timestamps decide all elapsed times; a
client-side countdown is only ever advisory. When a UI build directory is
present its static assets are served at /, but every endpoint works
without it.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from uiq.bank import QuestionBank, bundled_asset_path
from uiq.errors import ConflictError, NotFoundError
from uiq.grading import DEFAULT_TIMEOUT_MS, GradingQueue
from uiq.scale import Scale
from uiq.scoring import IQReport, rank_subjects, ranking_to_json, score_transcript
from uiq.session import SessionRunner, SessionTranscript, SubjectDescriptor
from uiq.store import ResultsStore, session_persister


class CreateSessionBody(BaseModel):
    subject_name: str
    subject_id: str | None = None
    group: str = ""
    region: str = ""


class AnswerBody(BaseModel):
    question_id: str
    answer: str | None = None
    delivery_failed: bool = False


class VerdictBody(BaseModel):
    passed: bool = Field(alias="pass")
    note: str = ""

    model_config = {"populate_by_name": True}


def _session_summary(session: SessionTranscript) -> dict:
    answered = sum(1 for e in session.entries if e.verdict is not None)
    return {
        "session_id": session.session_id,
        "subject": session.subject.to_dict(),
        "status": session.status,
        "answered": answered,
        "total": len(session.entries),
        "pending_manual": session.pending_manual_count(),
        "timeout_ms": session.timeout_ms,
    }


def create_app(
    *,
    store: ResultsStore,
    bank: QuestionBank,
    scale: Scale,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
    ui_dir: str | Path | None = None,
    asset_dir: str | Path | None = None,
    clock=None,
) -> FastAPI:
    app = FastAPI(title="uiq", docs_url=None, redoc_url=None)
    runner = SessionRunner(bank, scale, store=store, timeout_ms=timeout_ms, clock=clock)
    queue = GradingQueue(persist=session_persister(store))
    assets = Path(asset_dir) if asset_dir else bundled_asset_path("assets")

    # resume any persisted sessions (keeps grading queue and timers intact across restarts)
    for session_id in store.list_ids("sessions"):
        try:
            session = runner.get(session_id)
        except NotFoundError:
            continue
        queue.register_session(session, bank)

    @app.exception_handler(NotFoundError)
    async def _not_found(_req: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConflictError)
    async def _conflict(_req: Request, exc: ConflictError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _unprocessable(_req: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    # -- sessions ---------------------------------------------------------

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        import uuid

        name = body.subject_name.strip()
        if not name:
            raise ValueError("subject_name must not be empty")
        subject = SubjectDescriptor(
            id=body.subject_id or f"human-{uuid.uuid4().hex[:10]}",
            display_name=name,
            kind="human",
            group=body.group,
            region=body.region or "Human",
            capabilities=frozenset({"text", "audio", "image"}),
        )
        session = runner.create_session(subject)
        queue.register_session(session, bank)
        return _session_summary(session)

    @app.get("/api/sessions/{session_id}")
    def session_state(session_id: str):
        return _session_summary(runner.get(session_id))

    @app.get("/api/sessions/{session_id}/next")
    def next_question(session_id: str):
        head = runner.next_question(session_id)
        session = runner.get(session_id)
        if head is None:
            return {"done": True, "status": session.status}
        question, index, remaining = head
        payload = {
            "id": question.id,
            "prompt": question.prompt,
            "prompt_modality": question.prompt_modality,
            "response_modality": question.response_modality,
            "language": question.language_tag,
            "subtest": question.subtest_index,
        }
        if question.prompt_asset:
            payload["prompt_asset_url"] = f"/api/assets/{Path(question.prompt_asset).name}"
        return {
            "done": False,
            "question": payload,
            "index": index,
            "total": len(session.entries),
            "remaining_ms": max(0, remaining),
            "timeout_ms": session.timeout_ms,
        }

    @app.post("/api/sessions/{session_id}/answers")
    def submit_answer(session_id: str, body: AnswerBody):
        verdict = runner.submit_answer(
            session_id, body.question_id, body.answer, delivery_failed=body.delivery_failed
        )
        session = runner.get(session_id)
        answered = sum(1 for e in session.entries if e.verdict is not None)
        return {
            "question_id": body.question_id,
            "verdict": verdict.state,
            "answered": answered,
            "total": len(session.entries),
            "status": session.status,
        }

    @app.get("/api/sessions/{session_id}/report")
    def session_report(session_id: str):
        session = runner.get(session_id)
        if session.status != "complete":
            return {
                "status": session.status,
                "pending_manual": session.pending_manual_count(),
                "answered": sum(1 for e in session.entries if e.verdict is not None),
                "total": len(session.entries),
            }
        report = score_transcript(session, bank, scale)
        return {"status": "complete", "report": report.to_dict()}

    @app.get("/api/sessions/{session_id}/transcript")
    def session_transcript(session_id: str):
        return runner.get(session_id).to_dict()

    # -- grading ------------------------------------------------------------

    @app.get("/api/grading/queue")
    def grading_queue():
        return {
            "items": [
                {
                    "answer_id": item.answer_id,
                    "session_id": item.session_id,
                    "question_id": item.question_id,
                    "prompt": item.prompt,
                    "rubric": item.rubric,
                    "answer": item.answer,
                }
                for item in queue.pending()
            ]
        }

    @app.post("/api/grading/{answer_id}/verdict")
    def record_verdict(answer_id: str, body: VerdictBody):
        verdict = queue.record_manual_verdict(answer_id, body.passed, body.note)
        store.append_verdict(answer_id, verdict.to_dict())
        return {"answer_id": answer_id, "verdict": verdict.to_dict()}

    # -- leaderboard and runs -------------------------------------------------

    @app.get("/api/runs")
    def runs():
        return {
            "runs": [
                {
                    "run_id": run.run_id,
                    "label": run.label,
                    "created_at_ms": run.created_at_ms,
                    "subjects": len(run.report_ids),
                }
                for run in store.runs_by_time()
            ]
        }

    @app.get("/api/leaderboard")
    def leaderboard(run: str | None = None):
        run_id = run or store.latest_run_id()
        if run_id is None:
            return {"run_id": None, "entries": []}
        reports = [IQReport.from_dict(d) for d in store.run_reports(run_id)]
        return ranking_to_json(rank_subjects(reports, run_id=run_id))

    @app.get("/api/scale")
    def scale_doc():
        return scale.to_dict()

    @app.get("/api/assets/{filename}")
    def asset(filename: str):
        target = (assets / filename).resolve()
        if target.parent != assets.resolve() or not target.is_file():
            raise NotFoundError(f"no asset {filename!r}")
        return FileResponse(target)

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(app: FastAPI, host: str = "127.0.0.1", port: int = 8340) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")
