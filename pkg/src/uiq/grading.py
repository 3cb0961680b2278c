"""Answer grading and per-subtest aggregation.

Auto-gradeable questions are judged by containment: the answer text is
normalized (trim, case-fold, collapse whitespace, strip terminal
punctuation) and counts as correct when it contains an accepted answer —
search engines return snippets and humans return sentences, so equality
would be too strict. Numeric questions instead match any numeric token in
the answer against the key. Open-ended questions park as pending_manual
until a human grader rules pass/fail through the grading queue.

An answer that took longer than the timeout scores zero no matter what it
says; an answer that could not be delivered at all scores zero too.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import TYPE_CHECKING, Callable, Iterable

from uiq.bank import Question, QuestionBank
from uiq.errors import ConflictError, NotFoundError
from uiq.scale import SubTestDef

if TYPE_CHECKING:
    from uiq.session import SessionTranscript

DEFAULT_TIMEOUT_MS = 180_000

VERDICT_STATES = ("correct", "incorrect", "timeout", "undeliverable", "pending_manual")

_WS = re.compile(r"\s+")
_NUMBER = re.compile(r"[-+]?\d+(?:\.\d+)?")
_TERMINAL_PUNCT = ".,!?;:…\"'`’”）)]}。！？；：、"


@dataclass(frozen=True)
class AnswerRecord:
    """One submitted answer (or the lack of one)."""

    question_id: str
    answer: str | None = None
    elapsed_ms: int = 0
    delivery_failed: bool = False
    note: str = ""

    def __post_init__(self):
        if self.elapsed_ms < 0:
            raise ValueError("elapsed_ms must be >= 0")

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "answer": self.answer,
            "elapsed_ms": self.elapsed_ms,
            "delivery_failed": self.delivery_failed,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnswerRecord":
        return cls(
            question_id=str(data["question_id"]),
            answer=data.get("answer"),
            elapsed_ms=int(data.get("elapsed_ms", 0)),
            delivery_failed=bool(data.get("delivery_failed", False)),
            note=str(data.get("note", "")),
        )


@dataclass(frozen=True)
class Verdict:
    state: str
    graded_by: str = "auto"
    note: str = ""

    def to_dict(self) -> dict:
        return {"state": self.state, "graded_by": self.graded_by, "note": self.note}

    @classmethod
    def from_dict(cls, data: dict) -> "Verdict":
        return cls(state=str(data["state"]), graded_by=str(data.get("graded_by", "auto")), note=str(data.get("note", "")))


def normalize_answer(text: str) -> str:
    """Trim, case-fold, collapse internal whitespace, strip terminal punctuation."""
    out = _WS.sub(" ", text.strip().casefold()).strip()
    out = out.rstrip(_TERMINAL_PUNCT).strip()
    return out


def numeric_tokens(text: str) -> list[Decimal]:
    """All numeric tokens in the text, as exact decimals."""
    tokens = []
    for match in _NUMBER.findall(text):
        try:
            tokens.append(Decimal(match))
        except InvalidOperation:  # pragma: no cover - regex precludes this
            continue
    return tokens


def _matches_exact_set(response: str, accepted: Iterable[str]) -> bool:
    norm = normalize_answer(response)
    for key in accepted:
        key_norm = normalize_answer(key)
        if key_norm and key_norm in norm:
            return True
    return False


def _matches_numeric(response: str, value: Decimal, tolerance: Decimal | None) -> bool:
    tol = tolerance if tolerance is not None else Decimal(0)
    for token in numeric_tokens(response):
        if abs(token - value) <= tol:
            return True
    return False


def grade_answer(question: Question, answer: AnswerRecord, timeout_ms: int = DEFAULT_TIMEOUT_MS) -> Verdict:
    """Judge one answer. Pure: same inputs, same verdict."""
    if answer.question_id != question.id:
        raise ValueError(f"answer is for {answer.question_id!r}, question is {question.id!r}")
    if timeout_ms <= 0:
        raise ValueError("timeout_ms must be > 0")

    if answer.delivery_failed:
        return Verdict(state="undeliverable", note=answer.note)
    if answer.elapsed_ms > timeout_ms:
        return Verdict(state="timeout")

    spec = question.grading
    if spec.mode == "manual":
        return Verdict(state="pending_manual")

    text = answer.answer or ""
    if spec.mode == "exact_set":
        ok = _matches_exact_set(text, spec.accepted)
    else:
        ok = _matches_numeric(text, spec.numeric_value, spec.tolerance)
    return Verdict(state="correct" if ok else "incorrect")


def subtest_score(subtest: SubTestDef, verdicts: list[Verdict]) -> int:
    """Aggregate question verdicts into the subtest's score.

    Single-question subtests are all-or-nothing (0 or 100); four-question
    subtests earn 25 per correct answer. Timeout, undeliverable, and
    incorrect all contribute nothing.
    """
    if len(verdicts) != subtest.question_count:
        raise ValueError(
            f"subtest {subtest.index} expects {subtest.question_count} verdicts, got {len(verdicts)}"
        )
    if any(v.state == "pending_manual" for v in verdicts):
        raise ValueError(f"subtest {subtest.index} still has pending manual verdicts")
    correct = sum(1 for v in verdicts if v.state == "correct")
    if subtest.question_count == 1:
        return 100 if correct else 0
    if subtest.question_count == 4:
        return 25 * correct
    raise ValueError(f"unsupported question_count {subtest.question_count}; scores are quantized to quarters")


@dataclass
class PendingItem:
    """One answer waiting for a human verdict."""

    answer_id: str
    session_id: str
    question_id: str
    prompt: str
    rubric: str
    answer: str | None


class GradingQueue:
    """Shared registry of answers awaiting human verdicts.

    Sessions register here once they finish answering; graders clear
    pending items one verdict at a time. Verdicts are atomic and final:
    a second submission for the same answer is rejected.
    """

    def __init__(self, persist: Callable[["SessionTranscript"], None] | None = None):
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple["SessionTranscript", QuestionBank]] = {}
        self._persist = persist

    def register_session(self, session: "SessionTranscript", bank: QuestionBank) -> None:
        with self._lock:
            self._sessions[session.session_id] = (session, bank)

    @staticmethod
    def answer_id(session_id: str, question_id: str) -> str:
        return f"{session_id}:{question_id}"

    def pending(self) -> list[PendingItem]:
        with self._lock:
            items: list[PendingItem] = []
            for session, bank in self._sessions.values():
                for entry in session.entries:
                    if entry.verdict is not None and entry.verdict.state == "pending_manual":
                        q = bank.question(entry.question_id)
                        items.append(
                            PendingItem(
                                answer_id=self.answer_id(session.session_id, entry.question_id),
                                session_id=session.session_id,
                                question_id=entry.question_id,
                                prompt=q.prompt,
                                rubric=q.grading.rubric,
                                answer=entry.answer.answer if entry.answer else None,
                            )
                        )
            return items

    def record_manual_verdict(self, answer_id: str, passed: bool, note: str = "") -> Verdict:
        """Turn a pending_manual verdict into a final human pass/fail. Idempotence is rejected, not silent."""
        with self._lock:
            try:
                session_id, question_id = answer_id.rsplit(":", 1)
            except ValueError:
                raise NotFoundError(f"unknown answer id {answer_id!r}") from None
            found = self._sessions.get(session_id)
            if found is None:
                raise NotFoundError(f"unknown answer id {answer_id!r}")
            session, bank = found
            entry = session.entry_for(question_id)
            if entry is None or entry.verdict is None:
                raise NotFoundError(f"unknown answer id {answer_id!r}")
            question = bank.question(question_id)
            if question.grading.mode != "manual":
                raise ConflictError(f"question {question_id} is not manual mode")
            if entry.verdict.state != "pending_manual":
                raise ConflictError(f"answer {answer_id} is not pending (already graded)")
            verdict = Verdict(state="correct" if passed else "incorrect", graded_by="human", note=note)
            entry.verdict = verdict
            session.refresh_status()
            if self._persist is not None:
                self._persist(session)
            return verdict
