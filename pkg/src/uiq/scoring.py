"""From graded transcripts (or published raw rows) to IQ reports and leaderboards.

Two entry paths produce the same IQReport: scoring a completed session
transcript, and batch-scoring raw score vectors loaded from fixture files.
The second path exists so published result tables reproduce without
probing endpoints that no longer exist.

Ranking is IQ-descending with a deterministic tie-break: case-folded
display name, then subject id. IQ values are exact decimals end to end.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import IO

from uiq.bank import QuestionBank
from uiq.errors import PendingGradingError
from uiq.grading import subtest_score
from uiq.scale import Category, Scale, SubTestScoreVector, category_breakdown, compute_iq
from uiq.session import SessionTranscript, SubjectDescriptor


def format_iq(value: Decimal) -> str:
    """Exact decimal rendered without trailing zeros: 26.50 -> '26.5', 97.00 -> '97'."""
    text = str(value)
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


@dataclass(frozen=True)
class IQReport:
    subject: SubjectDescriptor
    vector: SubTestScoreVector
    iq: Decimal
    categories: dict[Category, Decimal]
    run_id: str = ""
    computed_at_ms: int = 0
    session_id: str | None = None

    def to_dict(self) -> dict:
        out = {
            "subject": self.subject.to_dict(),
            "vector": self.vector.to_dict(),
            "iq": str(self.iq),
            "categories": {c.value: str(v) for c, v in self.categories.items()},
            "run_id": self.run_id,
            "computed_at_ms": self.computed_at_ms,
        }
        if self.session_id:
            out["session_id"] = self.session_id
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "IQReport":
        return cls(
            subject=SubjectDescriptor.from_dict(data["subject"]),
            vector=SubTestScoreVector.from_dict(data["vector"]),
            iq=Decimal(data["iq"]),
            categories={Category(k): Decimal(v) for k, v in data["categories"].items()},
            run_id=str(data.get("run_id", "")),
            computed_at_ms=int(data.get("computed_at_ms", 0)),
            session_id=data.get("session_id"),
        )


@dataclass(frozen=True)
class Ranking:
    run_id: str
    entries: tuple[tuple[int, IQReport], ...]  # (rank, report), rank 1..n


def vector_from_transcript(transcript: SessionTranscript, bank: QuestionBank, scale: Scale) -> SubTestScoreVector:
    """Aggregate a complete transcript's verdicts into the 15-score vector."""
    if transcript.status == "in_progress":
        raise ValueError(f"transcript {transcript.session_id} is incomplete")
    if transcript.status == "pending_grading":
        raise PendingGradingError(
            f"transcript {transcript.session_id} has {transcript.pending_manual_count()} pending manual verdicts"
        )
    values = []
    for st in scale.subtests:
        verdicts = [
            transcript.entry_for(q.id).verdict
            for q in bank.questions
            if q.subtest_index == st.index
        ]
        values.append(subtest_score(st, verdicts))
    return SubTestScoreVector(scale_id=scale.id, values=tuple(values))


def score_vector(
    subject: SubjectDescriptor,
    vector: SubTestScoreVector,
    scale: Scale,
    *,
    run_id: str = "",
    computed_at_ms: int = 0,
    session_id: str | None = None,
) -> IQReport:
    return IQReport(
        subject=subject,
        vector=vector,
        iq=compute_iq(scale, vector),
        categories=category_breakdown(scale, vector),
        run_id=run_id,
        computed_at_ms=computed_at_ms,
        session_id=session_id,
    )


def score_transcript(
    transcript: SessionTranscript,
    bank: QuestionBank,
    scale: Scale,
    *,
    run_id: str = "",
    computed_at_ms: int = 0,
) -> IQReport:
    vector = vector_from_transcript(transcript, bank, scale)
    return score_vector(
        transcript.subject,
        vector,
        scale,
        run_id=run_id,
        computed_at_ms=computed_at_ms,
        session_id=transcript.session_id,
    )


def score_matrix(
    rows: list[tuple[SubjectDescriptor, SubTestScoreVector]],
    scale: Scale,
    *,
    run_id: str = "",
    computed_at_ms: int = 0,
) -> list[IQReport]:
    """Batch-score raw vectors: the published-table reproduction path."""
    return [
        score_vector(subject, vector, scale, run_id=run_id, computed_at_ms=computed_at_ms)
        for subject, vector in rows
    ]


def rank_subjects(reports: list[IQReport], *, run_id: str = "") -> Ranking:
    """Leaderboard: IQ descending, ties by case-folded name then subject id."""
    scales = {r.vector.scale_id for r in reports}
    if len(scales) > 1:
        raise ValueError(f"cannot rank reports from mixed scales: {sorted(scales)}")
    ordered = sorted(
        reports,
        key=lambda r: (-r.iq, r.subject.display_name.casefold(), r.subject.id),
    )
    entries = tuple((i + 1, report) for i, report in enumerate(ordered))
    return Ranking(run_id=run_id or (reports[0].run_id if reports else ""), entries=entries)


# -- fixture-file loading ------------------------------------------------------

def load_matrix_rows(
    source: str | Path | IO[str] | dict, scale: Scale
) -> list[tuple[SubjectDescriptor, SubTestScoreVector]]:
    """Rows of a raw-score fixture file -> (subject, vector) pairs.

    Human rows (region "Human") carry an age-group name; all other rows are
    search engines keyed by country + name.
    """
    if isinstance(source, dict):
        data = source
    elif isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = json.load(source)
    scale_id = data.get("scale_id", scale.id)
    if scale_id != scale.id:
        raise ValueError(f"fixture is for scale {scale_id!r}, expected {scale.id!r}")
    rows = []
    for row in data["rows"]:
        region = str(row.get("region", ""))
        human = region == "Human"
        group = str(row.get("group", row.get("country", "")))
        subject = SubjectDescriptor(
            id=str(row["subject_id"]),
            display_name=str(row["name"]),
            kind="human" if human else "http_search",
            group=group,
            region=region,
            capabilities=frozenset({"text", "audio", "image"}) if human else frozenset({"text"}),
        )
        vector = SubTestScoreVector(scale_id=scale.id, values=tuple(int(v) for v in row["values"]))
        rows.append((subject, vector))
    return rows


# -- output formats ------------------------------------------------------------

CSV_COLUMNS = [
    "rank", "name", "group", "iq",
    "cat_acquisition", "cat_mastery", "cat_innovation", "cat_feedback",
]


def ranking_to_csv(ranking: Ranking) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rank, report in ranking.entries:
        writer.writerow(
            [
                rank,
                report.subject.display_name,
                report.subject.group,
                format_iq(report.iq),
                format_iq(report.categories[Category.ACQUISITION]),
                format_iq(report.categories[Category.MASTERY]),
                format_iq(report.categories[Category.INNOVATION]),
                format_iq(report.categories[Category.FEEDBACK]),
            ]
        )
    return buf.getvalue()


def ranking_to_table(ranking: Ranking) -> str:
    """Plain-text leaderboard: rank, region, group, name, IQ."""
    rows = [("rank", "region", "group", "name", "IQ")]
    for rank, report in ranking.entries:
        rows.append(
            (str(rank), report.subject.region, report.subject.group, report.subject.display_name, format_iq(report.iq))
        )
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[j] for j in range(5)))
    return "\n".join(lines) + "\n"


def ranking_to_json(ranking: Ranking) -> dict:
    return {
        "run_id": ranking.run_id,
        "entries": [
            {
                "rank": rank,
                "subject_id": report.subject.id,
                "name": report.subject.display_name,
                "group": report.subject.group,
                "region": report.subject.region,
                "iq": format_iq(report.iq),
                "categories": {c.value: format_iq(v) for c, v in report.categories.items()},
            }
            for rank, report in ranking.entries
        ],
    }
