"""Question bank: structured test items with answer keys and grading specs.

A bank belongs to one scale and carries, per subtest, exactly the number of
questions the scale declares. Prompts are stored as-is in UTF-8 (several are
multilingual); audio and image prompts reference sibling asset files by
relative path. Banks are immutable after load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import IO

from uiq.scale import Scale

MODALITIES = ("text", "audio", "image")
GRADING_MODES = ("exact_set", "numeric", "manual")


class BankParseError(ValueError):
    """The bank document is malformed or breaks a bank invariant."""


@dataclass(frozen=True)
class GradingSpec:
    """How one question is judged: answer-set containment, numeric match, or a human rubric."""

    mode: str
    accepted: tuple[str, ...] = ()
    numeric_value: Decimal | None = None
    tolerance: Decimal | None = None
    rubric: str = ""

    def to_dict(self) -> dict:
        if self.mode == "exact_set":
            return {"mode": self.mode, "accepted": list(self.accepted)}
        if self.mode == "numeric":
            numeric: dict = {"value": str(self.numeric_value)}
            if self.tolerance is not None:
                numeric["tolerance"] = str(self.tolerance)
            return {"mode": self.mode, "numeric": numeric}
        return {"mode": self.mode, "rubric": self.rubric}

    @classmethod
    def from_dict(cls, data: dict) -> "GradingSpec":
        mode = data.get("mode")
        if mode not in GRADING_MODES:
            raise BankParseError(f"unknown grading mode {mode!r}")
        if mode == "exact_set":
            accepted = tuple(str(a) for a in data.get("accepted", []))
            return cls(mode=mode, accepted=accepted)
        if mode == "numeric":
            numeric = data.get("numeric", {})
            try:
                value = Decimal(str(numeric["value"]))
                tolerance = Decimal(str(numeric["tolerance"])) if "tolerance" in numeric else None
            except (KeyError, InvalidOperation) as exc:
                raise BankParseError(f"bad numeric grading spec: {numeric!r}") from exc
            return cls(mode=mode, numeric_value=value, tolerance=tolerance)
        return cls(mode=mode, rubric=str(data.get("rubric", "")))


@dataclass(frozen=True)
class Question:
    """One test item."""

    id: str
    subtest_index: int
    prompt: str
    prompt_modality: str
    response_modality: str
    grading: GradingSpec
    language_tag: str = "en"
    prompt_asset: str | None = None
    nonoriginal: bool = False

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "subtest": self.subtest_index,
            "prompt": self.prompt,
            "prompt_modality": self.prompt_modality,
            "response_modality": self.response_modality,
            "language": self.language_tag,
            "grading": self.grading.to_dict(),
        }
        if self.prompt_asset:
            out["prompt_asset"] = self.prompt_asset
        if self.nonoriginal:
            out["nonoriginal"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Question":
        return cls(
            id=str(data["id"]),
            subtest_index=int(data["subtest"]),
            prompt=str(data["prompt"]),
            prompt_modality=str(data["prompt_modality"]),
            response_modality=str(data["response_modality"]),
            grading=GradingSpec.from_dict(data["grading"]),
            language_tag=str(data.get("language", "en")),
            prompt_asset=data.get("prompt_asset"),
            nonoriginal=bool(data.get("nonoriginal", False)),
        )


@dataclass(frozen=True)
class QuestionBank:
    id: str
    scale_id: str
    questions: tuple[Question, ...]
    _by_id: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {q.id: q for q in self.questions})

    def question(self, question_id: str) -> Question:
        try:
            return self._by_id[question_id]
        except KeyError:
            raise KeyError(f"bank {self.id!r} has no question {question_id!r}") from None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "scale_id": self.scale_id,
            "questions": [q.to_dict() for q in self.questions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuestionBank":
        return cls(
            id=str(data["id"]),
            scale_id=str(data["scale_id"]),
            questions=tuple(Question.from_dict(q) for q in data["questions"]),
        )


def load_bank(source: str | Path | IO[str] | dict, scale: Scale | None = None) -> QuestionBank:
    """Load a bank from a JSON path, open file, or dict; optionally check it against a scale.

    Raises BankParseError for malformed documents and, when a scale is given,
    for per-subtest question counts that disagree with the scale.
    """
    if isinstance(source, dict):
        data = source
    else:
        try:
            if isinstance(source, (str, Path)):
                with open(source, "r", encoding="utf-8") as fh:
                    data = json.load(fh)
            else:
                data = json.load(source)
        except json.JSONDecodeError as exc:
            raise BankParseError(f"bank document is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "questions" not in data:
        raise BankParseError("bank document must be a JSON object with a 'questions' list")
    try:
        bank = QuestionBank.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, BankParseError):
            raise
        raise BankParseError(f"bank document missing or bad field: {exc}") from exc

    if scale is not None:
        if bank.scale_id != scale.id:
            raise BankParseError(f"bank references unknown scale {bank.scale_id!r} (expected {scale.id!r})")
        violations = validate_bank(bank, scale)
        counts = [v for v in violations if "question count" in v or "unknown subtest" in v]
        if counts:
            raise BankParseError("; ".join(counts))
    return bank


def bundled_bank() -> QuestionBank:
    """The bundled 2014 question bank."""
    text = resources.files("uiq.fixtures").joinpath("bank_internet_2014.json").read_text("utf-8")
    return QuestionBank.from_dict(json.loads(text))


def bundled_asset_path(relative: str) -> Path:
    """Resolve a bank asset reference against the bundled fixture directory."""
    base = resources.files("uiq.fixtures")
    return Path(str(base.joinpath(relative)))


def validate_bank(bank: QuestionBank, scale: Scale) -> list[str]:
    """Check bank invariants against a scale; returns violation messages (empty means ok)."""
    violations: list[str] = []
    if bank.scale_id != scale.id:
        violations.append(f"bank scale_id {bank.scale_id!r} does not match scale {scale.id!r}")

    known = {st.index: st for st in scale.subtests}
    per_subtest: dict[int, int] = {}
    seen_ids: set[str] = set()
    for q in bank.questions:
        if q.id in seen_ids:
            violations.append(f"duplicate question id {q.id!r}")
        seen_ids.add(q.id)
        if not q.prompt.strip():
            violations.append(f"question {q.id}: empty prompt")
        if q.prompt_modality not in MODALITIES:
            violations.append(f"question {q.id}: bad prompt modality {q.prompt_modality!r}")
        if q.response_modality not in MODALITIES:
            violations.append(f"question {q.id}: bad response modality {q.response_modality!r}")
        if q.subtest_index not in known:
            violations.append(f"question {q.id}: unknown subtest {q.subtest_index}")
            continue
        per_subtest[q.subtest_index] = per_subtest.get(q.subtest_index, 0) + 1
        spec = q.grading
        if spec.mode == "exact_set" and not spec.accepted:
            violations.append(f"question {q.id}: exact_set grading needs at least one accepted answer")
        if spec.mode == "manual" and not spec.rubric.strip():
            violations.append(f"question {q.id}: manual grading needs a rubric")
        if spec.mode == "numeric" and spec.numeric_value is None:
            violations.append(f"question {q.id}: numeric grading needs a value")

    for index, st in known.items():
        got = per_subtest.get(index, 0)
        if got != st.question_count:
            violations.append(
                f"subtest {index} ({st.name}): question count mismatch, bank has {got}, scale declares {st.question_count}"
            )

    order = [q.subtest_index for q in bank.questions]
    if order != sorted(order):
        violations.append("questions are not ordered by subtest index")

    return violations


def questions_for(bank: QuestionBank, subtest_index: int) -> list[Question]:
    """All of one subtest's questions, in bank order."""
    if not any(q.subtest_index == subtest_index for q in bank.questions):
        raise ValueError(f"subtest index {subtest_index} out of range for bank {bank.id!r}")
    return [q for q in bank.questions if q.subtest_index == subtest_index]
