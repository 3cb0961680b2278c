"""Command-line interface: validate, run, score, rank, grade, trend, serve.

Exit codes are part of the contract: 0 success, 1 validation failure
(scale/bank violations, bad adapter config, pending grading), 2 runtime
error (unreadable files, unknown ids).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import uuid
from decimal import Decimal
from pathlib import Path

from uiq.adapters import ScriptedAdapter, apply_scripted_manual_verdicts, load_adapter_config
from uiq.bank import BankParseError, bundled_bank, load_bank, validate_bank
from uiq.errors import ConflictError, NotFoundError, PendingGradingError, UiqError
from uiq.grading import DEFAULT_TIMEOUT_MS, GradingQueue
from uiq.scale import bundled_scale, load_scale, validate_scale
from uiq.scoring import (
    IQReport,
    format_iq,
    load_matrix_rows,
    rank_subjects,
    ranking_to_csv,
    ranking_to_json,
    ranking_to_table,
    score_matrix,
    score_transcript,
)
from uiq.session import SessionRunner, SessionTranscript
from uiq.store import ResultsStore, TestRun, session_persister

DEFAULT_STORE_ENV = "UIQ_STORE"
DEFAULT_STORE_DIR = "uiq-store"


def _store_from(args) -> ResultsStore:
    root = args.store or os.environ.get(DEFAULT_STORE_ENV) or DEFAULT_STORE_DIR
    return ResultsStore(root)


def _load_scale_bank(args):
    scale = load_scale(args.scale) if args.scale else bundled_scale()
    bank = load_bank(args.bank, scale) if args.bank else bundled_bank()
    return scale, bank


def _now_ms(args) -> int:
    return 0 if getattr(args, "deterministic", False) else int(time.time() * 1000)


def cmd_validate(args) -> int:
    try:
        scale = load_scale(args.scale) if args.scale else bundled_scale()
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read scale: {exc}", file=sys.stderr)
        return 2
    problems = validate_scale(scale)
    try:
        bank = load_bank(args.bank) if args.bank else bundled_bank()
        problems += validate_bank(bank, scale)
    except OSError as exc:
        print(f"error: cannot read bank: {exc}", file=sys.stderr)
        return 2
    except BankParseError as exc:
        problems += [str(exc)]
    if problems:
        for problem in problems:
            print(f"violation: {problem}")
        return 1
    print(f"ok: scale {scale.id!r} and bank validate ({len(bank.questions)} questions)")
    return 0


def cmd_run(args) -> int:
    scale, bank = _load_scale_bank(args)
    try:
        adapter = load_adapter_config(args.subject)
    except OSError as exc:
        print(f"error: cannot read adapter config: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: invalid adapter config: {exc}", file=sys.stderr)
        return 1

    # persist sessions unless the caller asked for a transcript file only
    use_store = args.store is not None or args.out is None
    store = _store_from(args) if use_store else None
    runner = SessionRunner(bank, scale, store=store, timeout_ms=args.timeout_ms)
    session = runner.run_adapter_session(adapter)

    applied = 0
    if args.apply_scripted_verdicts and isinstance(adapter, ScriptedAdapter):
        queue = GradingQueue(persist=session_persister(store) if store else None)
        queue.register_session(session, bank)
        applied = apply_scripted_manual_verdicts(queue, adapter, session.session_id)

    if args.out:
        Path(args.out).write_text(
            json.dumps(session.to_dict(), ensure_ascii=False, indent=1), encoding="utf-8"
        )
        print(f"transcript written to {args.out}")
    print(f"session {session.session_id}: status {session.status}")
    if applied:
        print(f"scripted manual verdicts applied: {applied}")
    print(f"pending manual verdicts: {session.pending_manual_count()}")
    return 0


def _reports_from_transcripts(paths, bank, scale, computed_at_ms) -> list[IQReport]:
    reports = []
    blocked = []
    for path in paths:
        transcript = SessionTranscript.from_dict(json.loads(Path(path).read_text("utf-8")))
        try:
            reports.append(score_transcript(transcript, bank, scale, computed_at_ms=computed_at_ms))
        except PendingGradingError as exc:
            blocked.append((path, str(exc)))
    if blocked:
        for path, reason in blocked:
            print(f"blocked: {path}: {reason}", file=sys.stderr)
        raise PendingGradingError(f"{len(blocked)} transcript(s) await manual grading")
    return reports


def cmd_score(args) -> int:
    scale, bank = _load_scale_bank(args)
    computed_at = _now_ms(args)
    try:
        if args.from_matrix:
            rows = []
            for path in args.from_matrix:
                rows.extend(load_matrix_rows(path, scale))
            reports = score_matrix(rows, scale, computed_at_ms=computed_at)
        else:
            reports = _reports_from_transcripts(args.from_transcripts, bank, scale, computed_at)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PendingGradingError:
        return 1

    run_id = args.run_id or (args.label if args.deterministic else f"run-{uuid.uuid4().hex[:10]}")
    run = TestRun(
        run_id=run_id,
        label=args.label,
        scale_id=scale.id,
        bank_id=bank.id,
        created_at_ms=computed_at,
        report_ids=[r.subject.id for r in reports],
    )
    store = _store_from(args)
    store.save_run(run, [r.to_dict() for r in reports], overwrite=args.overwrite)
    print(f"run {run.run_id}: scored {len(reports)} subject(s)")
    for report in reports:
        print(f"  {report.subject.display_name}: {format_iq(report.iq)}")
    return 0


def cmd_rank(args) -> int:
    store = _store_from(args)
    run_id = args.run_id or store.latest_run_id()
    if run_id is None:
        print("rank,name,group,iq" if args.format == "csv" else "(no runs in store)")
        return 0
    reports = [IQReport.from_dict(d) for d in store.run_reports(run_id)]
    ranking = rank_subjects(reports, run_id=run_id)
    if args.format == "csv":
        output = ranking_to_csv(ranking)
    elif args.format == "json":
        output = json.dumps(ranking_to_json(ranking), ensure_ascii=False, indent=1) + "\n"
    else:
        output = ranking_to_table(ranking)
    if args.out:
        Path(args.out).write_text(output, encoding="utf-8")
        print(f"ranking written to {args.out}")
    else:
        print(output, end="")
    return 0


def _queue_over_store(store, bank) -> GradingQueue:
    queue = GradingQueue(persist=session_persister(store))
    for session_id in store.list_ids("sessions"):
        session = SessionTranscript.from_dict(store.load("sessions", session_id))
        queue.register_session(session, bank)
    return queue


def cmd_grade(args) -> int:
    scale, bank = _load_scale_bank(args)
    store = _store_from(args)
    queue = _queue_over_store(store, bank)
    if args.action == "list":
        items = queue.pending()
        if not items:
            print("grading queue is empty")
            return 0
        for item in items:
            print(f"{item.answer_id}")
            print(f"  question: {item.prompt}")
            print(f"  rubric:   {item.rubric}")
            print(f"  answer:   {item.answer!r}")
        print(f"{len(items)} pending verdict(s)")
        return 0
    verdict = queue.record_manual_verdict(args.answer_id, args.action == "pass", args.note)
    store.append_verdict(args.answer_id, verdict.to_dict())
    print(f"{args.answer_id}: {verdict.state}")
    return 0


def cmd_trend(args) -> int:
    store = _store_from(args)
    series = store.trend(args.subject_id, args.metric)
    for label, value in series:
        print(f"{label}\t{format_iq(Decimal(value))}")
    return 0


def cmd_serve(args) -> int:
    from uiq.service import create_app, serve

    scale, bank = _load_scale_bank(args)
    store = _store_from(args)
    app = create_app(
        store=store,
        bank=bank,
        scale=scale,
        timeout_ms=args.timeout_ms,
        ui_dir=args.ui,
    )
    print(f"serving on http://{args.host}:{args.port} (store: {store.root})")
    serve(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uiq", description="weighted universal-IQ benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, store=True):
        p.add_argument("--scale", help="scale JSON (default: bundled 2014 scale)")
        p.add_argument("--bank", help="bank JSON (default: bundled 2014 bank)")
        if store:
            p.add_argument("--store", help=f"store directory (default: ${DEFAULT_STORE_ENV} or ./{DEFAULT_STORE_DIR})")

    p = sub.add_parser("validate", help="validate a scale and question bank")
    common(p, store=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run one subject through the bank headlessly")
    common(p)
    p.add_argument("--subject", required=True, help="adapter config JSON")
    p.add_argument("--timeout-ms", type=int, default=DEFAULT_TIMEOUT_MS)
    p.add_argument("--out", help="write the transcript to this file")
    p.add_argument(
        "--apply-scripted-verdicts",
        action="store_true",
        help="clear pending manual verdicts from the scripted fixture's manual_verdicts map",
    )
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score transcripts or raw score-matrix fixtures into a run")
    common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--from-transcripts", nargs="+", metavar="TRANSCRIPT")
    src.add_argument("--from-matrix", nargs="+", metavar="MATRIX")
    p.add_argument("--run-id", help="run id (default: random, or the label with --deterministic)")
    p.add_argument("--label", default="2014", help="run label for trend reporting")
    p.add_argument("--overwrite", action="store_true", help="replace an existing run with the same id")
    p.add_argument("--deterministic", action="store_true", help="pin clock fields for byte-identical output")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rank", help="print the leaderboard for a run")
    p.add_argument("run_id", nargs="?", help="run id (default: most recent run)")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--out", help="write output to this file")
    p.add_argument("--store", help="store directory")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("grade", help="list or clear the manual grading queue")
    common(p)
    p.add_argument("action", choices=("list", "pass", "fail"))
    p.add_argument("answer_id", nargs="?", help="answer id (session:question), for pass/fail")
    p.add_argument("--note", default="", help="grader note")
    p.set_defaults(func=cmd_grade)

    p = sub.add_parser("trend", help="year-over-year series for one subject")
    p.add_argument("subject_id")
    p.add_argument("--metric", default="iq", help="iq or category:<Name>")
    p.add_argument("--store", help="store directory")
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("serve", help="start the HTTP service (sessions, grading, leaderboard)")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8340)
    p.add_argument("--timeout-ms", type=int, default=DEFAULT_TIMEOUT_MS)
    p.add_argument("--ui", help="directory of built UI assets to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "grade" and args.action in ("pass", "fail") and not args.answer_id:
        print("error: pass/fail needs an answer id", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ConflictError, PendingGradingError, BankParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, UiqError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
