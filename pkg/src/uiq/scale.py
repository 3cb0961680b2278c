"""Weighted subtest scale and the general-IQ aggregation formula.

A scale is a fixed list of 15 weighted subtests grouped into four ability
categories. The general IQ of a subject is the weighted sum of its
per-subtest scores. All arithmetic is exact: weights are integer percents,
scores are integers in {0, 25, 50, 75, 100}, and IQ values are Decimals
carrying whole hundredths, so published score tables reproduce bit-for-bit.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import IO, Iterable

ALLOWED_SCORES = (0, 25, 50, 75, 100)

_CENT = Decimal("0.01")


class Category(enum.Enum):
    """The four first-class ability indices."""

    ACQUISITION = "Acquisition"
    MASTERY = "Mastery"
    INNOVATION = "Innovation"
    FEEDBACK = "Feedback"

    @property
    def label(self) -> str:
        return _CATEGORY_LABELS[self]


_CATEGORY_LABELS = {
    Category.ACQUISITION: "Knowledge acquisition",
    Category.MASTERY: "Knowledge mastery",
    Category.INNOVATION: "Knowledge innovation",
    Category.FEEDBACK: "Knowledge feedback",
}


@dataclass(frozen=True)
class SubTestDef:
    """One second-class index: a named, weighted subtest."""

    index: int
    name: str
    category: Category
    weight_percent: int
    question_count: int
    description: str = ""


@dataclass(frozen=True)
class Scale:
    """An ordered list of subtest definitions whose weights sum to 100%."""

    id: str
    version: str
    subtests: tuple[SubTestDef, ...]

    def subtest(self, index: int) -> SubTestDef:
        for st in self.subtests:
            if st.index == index:
                return st
        raise ValueError(f"scale {self.id!r} has no subtest {index}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "version": self.version,
            "subtests": [
                {
                    "index": st.index,
                    "name": st.name,
                    "category": st.category.value,
                    "weight_percent": st.weight_percent,
                    "question_count": st.question_count,
                    "description": st.description,
                }
                for st in self.subtests
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scale":
        subtests = tuple(
            SubTestDef(
                index=int(item["index"]),
                name=str(item["name"]),
                category=Category(item["category"]),
                weight_percent=int(item["weight_percent"]),
                question_count=int(item["question_count"]),
                description=str(item.get("description", "")),
            )
            for item in data["subtests"]
        )
        return cls(id=str(data["id"]), version=str(data.get("version", "")), subtests=subtests)


@dataclass(frozen=True)
class SubTestScoreVector:
    """Per-subtest scores for one subject, in subtest-index order."""

    scale_id: str
    values: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"scale_id": self.scale_id, "values": list(self.values)}

    @classmethod
    def from_dict(cls, data: dict) -> "SubTestScoreVector":
        return cls(scale_id=str(data["scale_id"]), values=tuple(int(v) for v in data["values"]))


def load_scale(source: str | Path | IO[str] | dict) -> Scale:
    """Load a scale from a JSON file path, open file, or parsed dict."""
    if isinstance(source, dict):
        return Scale.from_dict(source)
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return Scale.from_dict(json.load(fh))
    return Scale.from_dict(json.load(source))


def bundled_scale() -> Scale:
    """The bundled 2014 internet intelligence scale."""
    text = resources.files("uiq.fixtures").joinpath("scale_internet_2014.json").read_text("utf-8")
    return Scale.from_dict(json.loads(text))


def validate_scale(scale: Scale) -> list[str]:
    """Check all scale invariants; returns violation messages (empty means ok)."""
    violations: list[str] = []
    n = len(scale.subtests)
    if n == 0:
        return ["scale has no subtests"]

    seen: set[int] = set()
    for st in scale.subtests:
        if st.index in seen:
            violations.append(f"duplicate subtest index {st.index}")
        seen.add(st.index)
        if st.weight_percent <= 0:
            violations.append(f"subtest {st.index} ({st.name}): weight must be > 0")
        if st.question_count < 1:
            violations.append(f"subtest {st.index} ({st.name}): question_count must be >= 1")

    expected = set(range(1, n + 1))
    if seen != expected:
        missing = sorted(expected - seen)
        extra = sorted(seen - expected)
        if missing:
            violations.append(f"missing subtest indices {missing}")
        if extra:
            violations.append(f"unexpected subtest indices {extra}")

    indices = [st.index for st in scale.subtests]
    if indices != sorted(indices):
        violations.append("subtests are not ordered by index ascending")

    total = sum(st.weight_percent for st in scale.subtests)
    if total != 100:
        violations.append(f"weights sum != 100 (got {total})")

    return violations


def validate_vector(scale: Scale, scores: SubTestScoreVector) -> list[str]:
    """Check a score vector against a scale; returns violation messages."""
    violations: list[str] = []
    if scores.scale_id != scale.id:
        violations.append(f"scale id mismatch: vector is for {scores.scale_id!r}, scale is {scale.id!r}")
    if len(scores.values) != len(scale.subtests):
        violations.append(
            f"wrong vector length: got {len(scores.values)}, scale has {len(scale.subtests)} subtests"
        )
        return violations
    for st, value in zip(scale.subtests, scores.values):
        if value not in ALLOWED_SCORES:
            violations.append(f"subtest {st.index}: score {value} not in {ALLOWED_SCORES}")
        elif st.question_count == 1 and value not in (0, 100):
            violations.append(f"subtest {st.index}: single-question subtest scored {value}, must be 0 or 100")
    return violations


def _require_valid(scale: Scale, scores: SubTestScoreVector) -> None:
    violations = validate_vector(scale, scores)
    if violations:
        raise ValueError("; ".join(violations))


def compute_iq(scale: Scale, scores: SubTestScoreVector) -> Decimal:
    """Weighted-sum general IQ, exact to the hundredth.

    Each subtest contributes score x weight; with integer-percent weights the
    products are whole hundredths of an IQ point, so the sum never rounds.
    """
    _require_valid(scale, scores)
    hundredths = sum(v * st.weight_percent for v, st in zip(scores.values, scale.subtests))
    return (Decimal(hundredths) * _CENT).quantize(_CENT)


def category_breakdown(scale: Scale, scores: SubTestScoreVector) -> dict[Category, Decimal]:
    """Per-category contribution to the IQ; the four values sum to compute_iq exactly."""
    _require_valid(scale, scores)
    cents: dict[Category, int] = {c: 0 for c in Category}
    for v, st in zip(scores.values, scale.subtests):
        cents[st.category] += v * st.weight_percent
    return {c: (Decimal(n) * _CENT).quantize(_CENT) for c, n in cents.items()}


def category_maxima(scale: Scale) -> dict[Category, Decimal]:
    """Largest possible contribution per category (all subtests at 100)."""
    cents: dict[Category, int] = {c: 0 for c in Category}
    for st in scale.subtests:
        cents[st.category] += 100 * st.weight_percent
    return {c: (Decimal(n) * _CENT).quantize(_CENT) for c, n in cents.items()}


def vector_from_values(scale: Scale, values: Iterable[int]) -> SubTestScoreVector:
    """Build a vector for `scale` from raw values, validating as it goes."""
    vec = SubTestScoreVector(scale_id=scale.id, values=tuple(int(v) for v in values))
    _require_valid(scale, vec)
    return vec
