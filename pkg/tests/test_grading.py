from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

from uiq.errors import ConflictError, NotFoundError
from uiq.grading import (
    DEFAULT_TIMEOUT_MS,
    AnswerRecord,
    GradingQueue,
    Verdict,
    grade_answer,
    normalize_answer,
    numeric_tokens,
    subtest_score,
)
from uiq.scale import Category, SubTestDef


def answer(question, text, elapsed_ms=1000, **kw):
    return AnswerRecord(question_id=question.id, answer=text, elapsed_ms=elapsed_ms, **kw)


class TestNormalization:
    def test_trim_casefold_collapse_strip(self):
        assert normalize_answer("  The NILE.  ") == "the nile"
        assert normalize_answer("George   Washington!") == "george washington"
        assert normalize_answer("Jupiter...") == "jupiter"

    @given(st.text(max_size=200))
    def test_idempotent(self, text):
        once = normalize_answer(text)
        assert normalize_answer(once) == once

    @given(st.text(max_size=80))
    def test_whitespace_invariant(self, text):
        assert normalize_answer(" \t " + text + " \n ") == normalize_answer(text)

    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz 0123456789,.!?", max_size=80))
    def test_case_invariant(self, text):
        assert normalize_answer(text.upper()) == normalize_answer(text)

    def test_numeric_tokens(self):
        assert numeric_tokens("25 × 4 = 100") == [25, 4, 100]
        assert numeric_tokens("answer: -1.5 approx") == [pytest.approx(-1.5)]
        assert numeric_tokens("no digits here") == []


class TestGradeAnswer:
    def test_calculation_correct(self, bank_2014):
        q = bank_2014.question("s06-q1")
        assert grade_answer(q, answer(q, "100", elapsed_ms=2_000)).state == "correct"

    def test_correct_answer_after_timeout_scores_timeout(self, bank_2014):
        q = bank_2014.question("s06-q1")
        verdict = grade_answer(q, answer(q, "100", elapsed_ms=185_000))
        assert verdict.state == "timeout"

    def test_exactly_at_timeout_boundary_passes(self, bank_2014):
        # the limit is strict: longer than three minutes fails, exactly three minutes is in time
        q = bank_2014.question("s06-q1")
        assert grade_answer(q, answer(q, "100", elapsed_ms=DEFAULT_TIMEOUT_MS)).state == "correct"
        assert grade_answer(q, answer(q, "100", elapsed_ms=DEFAULT_TIMEOUT_MS + 1)).state == "timeout"

    def test_delivery_failure_is_undeliverable(self, bank_2014):
        q = bank_2014.question("s03-q1")
        record = AnswerRecord(question_id=q.id, delivery_failed=True, note="image input unsupported")
        verdict = grade_answer(q, record)
        assert verdict.state == "undeliverable"
        assert "image" in verdict.note

    def test_containment_accepts_snippets(self, bank_2014):
        q = bank_2014.question("s04-q2")
        assert grade_answer(q, answer(q, "The largest planet is Jupiter.")).state == "correct"

    def test_numeric_containment_does_not_match_inside_longer_numbers(self, bank_2014):
        q = bank_2014.question("s01-q1")  # key 2
        assert grade_answer(q, answer(q, "12")).state == "incorrect"
        assert grade_answer(q, answer(q, "1+1=2")).state == "correct"

    def test_numeric_tolerance(self, bank_2014):
        q = bank_2014.question("s06-q4")  # cube root, tolerance 0.01
        assert grade_answer(q, answer(q, "about 5.04")).state == "correct"
        assert grade_answer(q, answer(q, "5.2")).state == "incorrect"

    def test_manual_mode_is_pending(self, bank_2014):
        q = bank_2014.question("s09-q1")
        verdict = grade_answer(q, answer(q, "once upon a time..."))
        assert verdict.state == "pending_manual"

    def test_mismatched_ids_rejected(self, bank_2014):
        q = bank_2014.question("s06-q1")
        with pytest.raises(ValueError, match="answer is for"):
            grade_answer(q, AnswerRecord(question_id="s06-q2", answer="100"))

    def test_empty_answer_incorrect(self, bank_2014):
        q = bank_2014.question("s04-q2")
        assert grade_answer(q, answer(q, None)).state == "incorrect"

    def test_determinism(self, bank_2014):
        q = bank_2014.question("s04-q4")
        rec = answer(q, "George Washington")
        assert grade_answer(q, rec) == grade_answer(q, rec)


def _subtest(count: int) -> SubTestDef:
    return SubTestDef(index=6, name="Calculate", category=Category.MASTERY, weight_percent=6, question_count=count)


class TestSubtestScore:
    def test_three_correct_one_incorrect_is_75(self):
        verdicts = [Verdict("correct")] * 3 + [Verdict("incorrect")]
        assert subtest_score(_subtest(4), verdicts) == 75

    def test_single_question_correct_is_100(self):
        assert subtest_score(_subtest(1), [Verdict("correct")]) == 100
        assert subtest_score(_subtest(1), [Verdict("timeout")]) == 0

    def test_two_correct_two_timeout_is_50(self):
        verdicts = [Verdict("correct"), Verdict("timeout"), Verdict("correct"), Verdict("timeout")]
        assert subtest_score(_subtest(4), verdicts) == 50

    def test_exhaustive_patterns_match_count_oracle(self):
        # all 2^4 outcome patterns over the non-pending verdict states
        states = ("correct", "incorrect", "timeout", "undeliverable")
        for pattern in itertools.product(states, repeat=4):
            verdicts = [Verdict(s) for s in pattern]
            expected = 25 * sum(1 for s in pattern if s == "correct")
            assert subtest_score(_subtest(4), verdicts) == expected
        assert {25 * n for n in range(5)} == {0, 25, 50, 75, 100}

    def test_single_question_image(self):
        for state in ("incorrect", "timeout", "undeliverable"):
            assert subtest_score(_subtest(1), [Verdict(state)]) == 0
        assert subtest_score(_subtest(1), [Verdict("correct")]) == 100

    def test_pending_rejected(self):
        with pytest.raises(ValueError, match="pending"):
            subtest_score(_subtest(1), [Verdict("pending_manual")])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="expects 4 verdicts"):
            subtest_score(_subtest(4), [Verdict("correct")])


class TestGradingQueue:
    @pytest.fixture()
    def queue_with_session(self, bank_2014, scale_2014):
        from uiq.adapters import ScriptedAdapter
        from uiq.session import SessionRunner

        runner = SessionRunner(bank_2014, scale_2014)
        adapter = ScriptedAdapter(
            {
                "subject": {"id": "s", "display_name": "s"},
                "capabilities": ["text", "audio", "image"],
                "answers": {q.id: {"answer": "2", "latency_ms": 1} for q in bank_2014.questions},
            }
        )
        session = runner.run_adapter_session(adapter)
        queue = GradingQueue()
        queue.register_session(session, bank_2014)
        return queue, session

    def test_pending_items_have_rubrics(self, queue_with_session):
        queue, session = queue_with_session
        items = queue.pending()
        assert len(items) == session.pending_manual_count() == 8
        assert all(item.rubric for item in items)

    def test_pass_then_session_completes(self, queue_with_session):
        queue, session = queue_with_session
        for item in queue.pending():
            verdict = queue.record_manual_verdict(item.answer_id, True, "fine")
            assert verdict.state == "correct"
            assert verdict.graded_by == "human"
        assert session.status == "complete"
        assert queue.pending() == []

    def test_double_submit_rejected(self, queue_with_session):
        queue, _ = queue_with_session
        item = queue.pending()[0]
        queue.record_manual_verdict(item.answer_id, False)
        with pytest.raises(ConflictError, match="not pending"):
            queue.record_manual_verdict(item.answer_id, True)

    def test_non_manual_question_rejected(self, queue_with_session):
        queue, session = queue_with_session
        answer_id = GradingQueue.answer_id(session.session_id, "s06-q1")
        with pytest.raises(ConflictError, match="not manual mode"):
            queue.record_manual_verdict(answer_id, True)

    def test_unknown_answer_id(self, queue_with_session):
        queue, _ = queue_with_session
        with pytest.raises(NotFoundError):
            queue.record_manual_verdict("nope:s09-q1", True)
