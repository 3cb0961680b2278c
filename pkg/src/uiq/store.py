"""File-backed results store: scales, banks, sessions, runs, reports, verdicts.

One directory per entity kind; one UTF-8 JSON document per record, wrapped
with a sha256 checksum over the canonical payload. Writes go to a temp
file in the same directory, are fsynced, then renamed into place — an
interrupted write at any byte leaves the previous version readable.

Layout:
    <root>/scales/<id>.json      <root>/banks/<id>.json
    <root>/sessions/<id>.json    <root>/runs/<id>.json
    <root>/reports/<run:subject>.json
    <root>/verdicts/<answer id>.json   (append-only version list)

Single writer, many readers: in-process writes are serialized by a lock,
cross-process by a lock file. Readers only ever see committed records.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock

from uiq.errors import ConflictError, CorruptRecordError, NotFoundError

KINDS = ("scales", "banks", "sessions", "runs", "reports", "verdicts")

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._:\-]*$")


def canonical_json(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def checksum(payload: dict) -> str:
    return hashlib.sha256(canonical_json(payload)).hexdigest()


@dataclass
class TestRun:
    """One administration of a bank to a cohort, identified for year-over-year comparison."""

    __test__ = False  # despite the name, not a pytest class

    run_id: str
    label: str
    scale_id: str
    bank_id: str
    created_at_ms: int
    report_ids: list[str] = field(default_factory=list)  # subject ids scored in this run

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "label": self.label,
            "scale_id": self.scale_id,
            "bank_id": self.bank_id,
            "created_at_ms": self.created_at_ms,
            "report_ids": list(self.report_ids),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestRun":
        return cls(
            run_id=str(data["run_id"]),
            label=str(data["label"]),
            scale_id=str(data["scale_id"]),
            bank_id=str(data.get("bank_id", "")),
            created_at_ms=int(data["created_at_ms"]),
            report_ids=[str(r) for r in data.get("report_ids", [])],
        )


def session_persister(store: "ResultsStore"):
    """Callback for SessionRunner/GradingQueue: write the session back on every change."""

    def persist(session) -> None:
        store.save("sessions", session.session_id, session.to_dict(), overwrite=True)

    return persist


class ResultsStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        for kind in KINDS:
            (self.root / kind).mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._file_lock = FileLock(str(self.root / ".writer.lock"))

    # -- low-level records -------------------------------------------------

    def _path(self, kind: str, entity_id: str) -> Path:
        if kind not in KINDS:
            raise ValueError(f"unknown entity kind {kind!r}")
        if not _ID_RE.match(entity_id):
            raise ValueError(f"unsafe entity id {entity_id!r}")
        return self.root / kind / f"{entity_id}.json"

    def _write_atomic(self, path: Path, data: bytes) -> None:
        fd, tmp_name = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp_name, path)
        finally:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)

    def save(self, kind: str, entity_id: str, payload: dict, *, overwrite: bool = False) -> None:
        path = self._path(kind, entity_id)
        record = {"kind": kind, "id": entity_id, "payload": payload, "checksum": checksum(payload)}
        data = json.dumps(record, ensure_ascii=False, indent=1).encode("utf-8")
        with self._lock, self._file_lock:
            if path.exists() and not overwrite:
                raise ConflictError(f"{kind} record {entity_id!r} already exists")
            self._write_atomic(path, data)

    def load(self, kind: str, entity_id: str) -> dict:
        path = self._path(kind, entity_id)
        if not path.exists():
            raise NotFoundError(f"no {kind} record {entity_id!r}")
        try:
            record = json.loads(path.read_text("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorruptRecordError(f"{kind}/{entity_id}: cannot decode record: {exc}") from exc
        payload = record.get("payload")
        if not isinstance(payload, dict) or record.get("checksum") != checksum(payload):
            raise CorruptRecordError(f"{kind}/{entity_id}: checksum mismatch")
        return payload

    def try_load(self, kind: str, entity_id: str) -> dict | None:
        try:
            return self.load(kind, entity_id)
        except NotFoundError:
            return None

    def exists(self, kind: str, entity_id: str) -> bool:
        return self._path(kind, entity_id).exists()

    def list_ids(self, kind: str) -> list[str]:
        if kind not in KINDS:
            raise ValueError(f"unknown entity kind {kind!r}")
        return sorted(p.stem for p in (self.root / kind).glob("*.json"))

    # -- verdict history (append-only) --------------------------------------

    def append_verdict(self, answer_id: str, verdict: dict) -> None:
        """Record a verdict version; earlier versions are kept for audit."""
        safe = answer_id.replace(":", "_")
        with self._lock, self._file_lock:
            existing = self.try_load("verdicts", safe) or {"answer_id": answer_id, "versions": []}
            existing["versions"].append(verdict)
            record = {
                "kind": "verdicts",
                "id": safe,
                "payload": existing,
                "checksum": checksum(existing),
            }
            self._write_atomic(self._path("verdicts", safe), json.dumps(record, ensure_ascii=False, indent=1).encode("utf-8"))

    def verdict_history(self, answer_id: str) -> list[dict]:
        payload = self.try_load("verdicts", answer_id.replace(":", "_"))
        return payload["versions"] if payload else []

    # -- runs, reports, trends -----------------------------------------------

    @staticmethod
    def report_id(run_id: str, subject_id: str) -> str:
        return f"{run_id}:{subject_id}"

    def save_run(self, run: TestRun, reports: list[dict], *, overwrite: bool = False) -> None:
        """Persist a run and its reports together; the run record is the commit point."""
        for report in reports:
            sid = report["subject"]["id"]
            self.save("reports", self.report_id(run.run_id, sid), report, overwrite=overwrite)
        self.save("runs", run.run_id, run.to_dict(), overwrite=overwrite)

    def load_run(self, run_id: str) -> TestRun:
        return TestRun.from_dict(self.load("runs", run_id))

    def run_reports(self, run_id: str) -> list[dict]:
        run = self.load_run(run_id)
        return [self.load("reports", self.report_id(run_id, sid)) for sid in run.report_ids]

    def runs_by_time(self) -> list[TestRun]:
        runs = [self.load_run(run_id) for run_id in self.list_ids("runs")]
        return sorted(runs, key=lambda r: (r.created_at_ms, r.run_id))

    def latest_run_id(self) -> str | None:
        runs = self.runs_by_time()
        return runs[-1].run_id if runs else None

    def trend(self, subject_id: str, metric: str = "iq") -> list[tuple[str, str]]:
        """(run label, value) series for one subject, ordered by run creation time.

        metric is "iq" or "category:<Name>". Runs the subject skipped are
        omitted, not zero-filled.
        """
        category = None
        if metric.startswith("category:"):
            category = metric.split(":", 1)[1]
        elif metric != "iq":
            raise ValueError(f"unknown metric {metric!r}")
        series: list[tuple[str, str]] = []
        seen = False
        for run in self.runs_by_time():
            payload = self.try_load("reports", self.report_id(run.run_id, subject_id))
            if payload is None:
                continue
            seen = True
            if category is None:
                series.append((run.label, payload["iq"]))
            else:
                try:
                    series.append((run.label, payload["categories"][category]))
                except KeyError:
                    raise ValueError(f"unknown category {category!r}") from None
        if not seen:
            raise NotFoundError(f"subject {subject_id!r} appears in no run")
        return series

    # -- archive -----------------------------------------------------------

    def export_run(self, run_id: str, out_path: str | Path) -> Path:
        """Bundle a run, its reports, and any referenced sessions into one JSON archive."""
        run = self.load_run(run_id)
        reports = self.run_reports(run_id)
        sessions = []
        for report in reports:
            session_id = report.get("session_id")
            if session_id:
                payload = self.try_load("sessions", session_id)
                if payload is not None:
                    sessions.append(payload)
        archive = {
            "format": "uiq-run-archive",
            "version": 1,
            "run": run.to_dict(),
            "reports": reports,
            "sessions": sessions,
        }
        out = Path(out_path)
        out.write_text(json.dumps(archive, ensure_ascii=False, indent=1), encoding="utf-8")
        return out

    def import_run(self, archive_path: str | Path, *, overwrite: bool = False) -> TestRun:
        data = json.loads(Path(archive_path).read_text("utf-8"))
        if data.get("format") != "uiq-run-archive":
            raise ValueError("not a run archive")
        run = TestRun.from_dict(data["run"])
        self.save_run(run, data.get("reports", []), overwrite=overwrite)
        for session in data.get("sessions", []):
            self.save("sessions", session["session_id"], session, overwrite=overwrite)
        return run
