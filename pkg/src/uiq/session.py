"""Timed test sessions: one subject, every bank question, in order.

The runner owns the clock. A question's timer starts when the question is
dispatched (handed to the adapter or served to a human), and the elapsed
time of an answer is always computed from runner-side timestamps — a
client's own claims never matter. Timestamps are wall-clock epoch
milliseconds so an in-flight question's timer keeps running across a
process restart.

Machine subjects are driven by an adapter loop; human subjects pull
questions one at a time through next_question/submit_answer. Both paces
share one state machine: questions are answered strictly in bank order,
one attempt each, no retries.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from uiq.bank import Question, QuestionBank, validate_bank
from uiq.errors import ConflictError, NotFoundError
from uiq.grading import DEFAULT_TIMEOUT_MS, AnswerRecord, Verdict, grade_answer
from uiq.scale import Scale

SESSION_STATUSES = ("in_progress", "pending_grading", "complete")


def _now_ms() -> int:
    return int(time.time() * 1000)


@dataclass(frozen=True)
class SubjectDescriptor:
    """Who (or what) is taking the test."""

    id: str
    display_name: str
    kind: str  # scripted | http_search | generic_api | human
    group: str = ""
    region: str = ""
    capabilities: frozenset[str] = frozenset({"text"})

    def __post_init__(self):
        if not self.capabilities:
            raise ValueError("subject must support at least one modality")
        unknown = set(self.capabilities) - {"text", "audio", "image"}
        if unknown:
            raise ValueError(f"unknown modalities {sorted(unknown)}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "display_name": self.display_name,
            "kind": self.kind,
            "group": self.group,
            "region": self.region,
            "capabilities": sorted(self.capabilities),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SubjectDescriptor":
        return cls(
            id=str(data["id"]),
            display_name=str(data["display_name"]),
            kind=str(data["kind"]),
            group=str(data.get("group", "")),
            region=str(data.get("region", "")),
            capabilities=frozenset(data.get("capabilities", ["text"])),
        )


@dataclass
class TranscriptEntry:
    question_id: str
    dispatched_at_ms: int | None = None
    answer: AnswerRecord | None = None
    verdict: Verdict | None = None

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "dispatched_at_ms": self.dispatched_at_ms,
            "answer": self.answer.to_dict() if self.answer else None,
            "verdict": self.verdict.to_dict() if self.verdict else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TranscriptEntry":
        return cls(
            question_id=str(data["question_id"]),
            dispatched_at_ms=data.get("dispatched_at_ms"),
            answer=AnswerRecord.from_dict(data["answer"]) if data.get("answer") else None,
            verdict=Verdict.from_dict(data["verdict"]) if data.get("verdict") else None,
        )


@dataclass
class SessionTranscript:
    """Full record of one subject's run, in bank question order."""

    session_id: str
    subject: SubjectDescriptor
    bank_id: str
    scale_id: str
    started_at_ms: int
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    entries: list[TranscriptEntry] = field(default_factory=list)
    status: str = "in_progress"

    def entry_for(self, question_id: str) -> TranscriptEntry | None:
        for entry in self.entries:
            if entry.question_id == question_id:
                return entry
        return None

    def head_index(self) -> int | None:
        """Index of the first unanswered question, or None when all are answered."""
        for i, entry in enumerate(self.entries):
            if entry.verdict is None:
                return i
        return None

    def pending_manual_count(self) -> int:
        return sum(1 for e in self.entries if e.verdict is not None and e.verdict.state == "pending_manual")

    def refresh_status(self) -> None:
        if self.head_index() is not None:
            self.status = "in_progress"
        elif self.pending_manual_count() > 0:
            self.status = "pending_grading"
        else:
            self.status = "complete"

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "subject": self.subject.to_dict(),
            "bank_id": self.bank_id,
            "scale_id": self.scale_id,
            "started_at_ms": self.started_at_ms,
            "timeout_ms": self.timeout_ms,
            "status": self.status,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionTranscript":
        return cls(
            session_id=str(data["session_id"]),
            subject=SubjectDescriptor.from_dict(data["subject"]),
            bank_id=str(data["bank_id"]),
            scale_id=str(data["scale_id"]),
            started_at_ms=int(data["started_at_ms"]),
            timeout_ms=int(data.get("timeout_ms", DEFAULT_TIMEOUT_MS)),
            entries=[TranscriptEntry.from_dict(e) for e in data.get("entries", [])],
            status=str(data.get("status", "in_progress")),
        )


class SessionRunner:
    """Serializes each session's state machine and holds the authoritative clock."""

    def __init__(
        self,
        bank: QuestionBank,
        scale: Scale,
        *,
        store=None,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        clock=None,
    ):
        violations = validate_bank(bank, scale)
        if violations:
            raise ValueError("bank does not validate against scale: " + "; ".join(violations))
        self.bank = bank
        self.scale = scale
        self.timeout_ms = timeout_ms
        self._store = store
        self._clock = clock or _now_ms
        self._sessions: dict[str, SessionTranscript] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- session lifecycle ------------------------------------------------

    def create_session(
        self,
        subject: SubjectDescriptor,
        *,
        session_id: str | None = None,
        timeout_ms: int | None = None,
    ) -> SessionTranscript:
        session = SessionTranscript(
            session_id=session_id or uuid.uuid4().hex,
            subject=subject,
            bank_id=self.bank.id,
            scale_id=self.scale.id,
            started_at_ms=self._clock(),
            timeout_ms=timeout_ms or self.timeout_ms,
            entries=[TranscriptEntry(question_id=q.id) for q in self.bank.questions],
        )
        with self._registry_lock:
            if session.session_id in self._sessions:
                raise ConflictError(f"session {session.session_id!r} already exists")
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        self._persist(session)
        return session

    def get(self, session_id: str) -> SessionTranscript:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None and self._store is not None:
            data = self._store.try_load("sessions", session_id)
            if data is not None:
                session = SessionTranscript.from_dict(data)
                if session.bank_id == self.bank.id:
                    with self._registry_lock:
                        session = self._sessions.setdefault(session_id, session)
                        self._locks.setdefault(session_id, threading.Lock())
        if session is None:
            raise NotFoundError(f"unknown session {session_id!r}")
        return session

    def sessions(self) -> list[SessionTranscript]:
        with self._registry_lock:
            return list(self._sessions.values())

    def _lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            lock = self._locks.get(session_id)
        if lock is None:
            raise NotFoundError(f"unknown session {session_id!r}")
        return lock

    def _persist(self, session: SessionTranscript) -> None:
        if self._store is not None:
            self._store.save("sessions", session.session_id, session.to_dict(), overwrite=True)

    # -- pull-based flow (humans and the service API) ----------------------

    def next_question(self, session_id: str):
        """The current head question, dispatching it if fresh.

        Returns (question, index, remaining_ms) or None when every question
        is already answered. Re-fetching the same head re-returns it with
        the timer still running.
        """
        session = self.get(session_id)
        with self._lock(session_id):
            head = session.head_index()
            if head is None:
                return None
            entry = session.entries[head]
            if entry.dispatched_at_ms is None:
                entry.dispatched_at_ms = self._clock()
                self._persist(session)
            remaining = session.timeout_ms - (self._clock() - entry.dispatched_at_ms)
            return self.bank.question(entry.question_id), head, remaining

    def submit_answer(
        self,
        session_id: str,
        question_id: str,
        answer: str | None,
        *,
        delivery_failed: bool = False,
        note: str = "",
    ) -> Verdict:
        """Record the head question's answer; elapsed time comes from the runner's clock."""
        session = self.get(session_id)
        with self._lock(session_id):
            if session.status != "in_progress":
                raise ConflictError(f"session {session_id} is {session.status}; no more answers accepted")
            head = session.head_index()
            entry = session.entry_for(question_id)
            if entry is None:
                raise NotFoundError(f"question {question_id!r} is not part of this session")
            if entry.verdict is not None:
                raise ConflictError(f"question {question_id} already answered (duplicate submission)")
            if session.entries[head].question_id != question_id:
                raise ConflictError(
                    f"out-of-order submission: expected {session.entries[head].question_id}, got {question_id}"
                )
            if entry.dispatched_at_ms is None:
                entry.dispatched_at_ms = self._clock()
            elapsed = max(0, self._clock() - entry.dispatched_at_ms)
            record = AnswerRecord(
                question_id=question_id,
                answer=answer,
                elapsed_ms=elapsed,
                delivery_failed=delivery_failed,
                note=note,
            )
            return self._record(session, entry, record)

    def _record(self, session: SessionTranscript, entry: TranscriptEntry, record: AnswerRecord) -> Verdict:
        question = self.bank.question(entry.question_id)
        entry.answer = record
        entry.verdict = grade_answer(question, record, session.timeout_ms)
        session.refresh_status()
        self._persist(session)
        return entry.verdict

    # -- adapter-driven flow ------------------------------------------------

    def run_adapter_session(
        self,
        adapter,
        subject: SubjectDescriptor | None = None,
        *,
        session_id: str | None = None,
        timeout_ms: int | None = None,
    ) -> SessionTranscript:
        """Drive a machine subject through the whole bank, one probe per question."""
        subject = subject or adapter.subject()
        session = self.create_session(subject, session_id=session_id, timeout_ms=timeout_ms)
        capabilities = adapter.capabilities()
        fatal_note: str | None = None
        with self._lock(session.session_id):
            for entry in session.entries:
                question = self.bank.question(entry.question_id)
                entry.dispatched_at_ms = self._clock()
                if fatal_note is not None:
                    record = AnswerRecord(
                        question_id=question.id, delivery_failed=True, note=fatal_note
                    )
                elif (
                    question.prompt_modality not in capabilities
                    or question.response_modality not in capabilities
                ):
                    # never contact the adapter for a modality it doesn't claim
                    unsupported = (
                        question.prompt_modality
                        if question.prompt_modality not in capabilities
                        else question.response_modality
                    )
                    record = AnswerRecord(
                        question_id=question.id,
                        delivery_failed=True,
                        note=f"modality {unsupported!r} unsupported",
                    )
                else:
                    try:
                        record = adapter.probe(question)
                    except Exception as exc:  # fatal adapter failure: finish the transcript
                        fatal_note = f"adapter failed fatally: {exc}"
                        record = AnswerRecord(
                            question_id=question.id, delivery_failed=True, note=fatal_note
                        )
                self._record(session, entry, record)
        return session
