"""Headless administration and reproduction tool.

All commands are deterministic under scripted mode: a ticking clock with
a fixed start, counter-derived identifiers, and hash-keyed provider
replay make stdout and persisted state byte-stable across machines.

Exit codes: 0 success, 1 parse/provider, 2 validation, 3 storage.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .clock import DEFAULT_SCRIPTED_START, SystemClock, TickingClock
from .core import plan_to_json
from .engine import Engine
from .errors import (
    LearnmateError,
    ParseError,
    ProviderError,
    ProviderUnavailable,
    StorageFailure,
)
from .jsonutil import canonical_dumps, parse_utc
from .provider import LiveHttpProvider, scripted_load
from .studymate import Tier

EXIT_PARSE_OR_PROVIDER = 1
EXIT_VALIDATION = 2
EXIT_STORAGE = 3


class _DeferredLiveProvider:
    """Connects lazily so data-only commands never need provider env vars."""

    name = "live"

    def __init__(self):
        self._inner = None

    def generate(self, envelope, attempt, feedback):
        if self._inner is None:
            self._inner = LiveHttpProvider()
        return self._inner.generate(envelope, attempt, feedback)


def _exit_code(error: LearnmateError) -> int:
    if isinstance(error, StorageFailure):
        return EXIT_STORAGE
    if isinstance(error, (ParseError, ProviderError)):
        return EXIT_PARSE_OR_PROVIDER
    return EXIT_VALIDATION


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LearnmateError as exc:
            click.echo(f"error: {exc.code}: {exc.message}", err=True)
            if exc.detail is not None:
                click.echo(canonical_dumps(exc.detail), err=True)
            sys.exit(_exit_code(exc))
        except FileNotFoundError as exc:
            click.echo(f"error: FileNotFound: {exc}", err=True)
            sys.exit(EXIT_PARSE_OR_PROVIDER)

    return wrapper


@click.group()
@click.option("--data-dir", default="learnmate-data", show_default=True, help="State directory.")
@click.option("--script", default=None, help="Scripted-provider fixture file (replay mode).")
@click.option(
    "--format", "output_format", type=click.Choice(["text", "json"]), default="text",
    show_default=True,
)
@click.option(
    "--clock-start",
    default=None,
    help="Deterministic clock start (ISO-8601, scripted mode only).",
)
@click.pass_context
def main(ctx, data_dir, script, output_format, clock_start):
    """Workflow engine for personalized plan/study/quiz/adapt loops."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = Path(data_dir)
    ctx.obj["format"] = output_format
    if script is not None:
        if not Path(script).is_file():
            click.echo(f"error: ParseError: script file {script!r} does not exist", err=True)
            sys.exit(EXIT_PARSE_OR_PROVIDER)
        ctx.obj["provider"] = scripted_load(script)
        start = parse_utc(clock_start) if clock_start else DEFAULT_SCRIPTED_START
        ctx.obj["clock"] = TickingClock(start)
    else:
        ctx.obj["provider"] = _DeferredLiveProvider()
        ctx.obj["clock"] = SystemClock()


def _engine(ctx) -> Engine:
    return Engine(ctx.obj["data_dir"], ctx.obj["provider"], ctx.obj["clock"])


def _emit(ctx, payload: dict, text_lines: list[str]) -> None:
    if ctx.obj["format"] == "json":
        click.echo(canonical_dumps(payload))
    else:
        for line in text_lines:
            click.echo(line)


@main.command()
@click.option("--manifest", required=True, type=click.Path(), help="Course manifest JSON.")
@click.option("--transcripts", default=None, type=click.Path(), help="Transcript directory.")
@click.pass_context
@handle_errors
def ingest(ctx, manifest, transcripts):
    """Validate a course and copy it into the data directory."""
    engine = _engine(ctx)
    course_id = engine.ingest_course(manifest, transcripts)
    _emit(ctx, {"course_id": course_id}, [f"course {course_id} ingested"])


@main.command()
@click.option("--profile", "profile_file", required=True, type=click.Path())
@click.option("--course", "course_id", required=True)
@click.option("--horizon-weeks", default=None, type=int)
@click.pass_context
@handle_errors
def plan(ctx, profile_file, course_id, horizon_weeks):
    """Generate and persist a study plan from a profile file."""
    engine = _engine(ctx)
    with open(profile_file, "rb") as fh:
        try:
            profile_json = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"profile file is not valid JSON: {exc.msg}")
    profile = engine.create_profile(profile_json)
    new_plan = engine.create_plan(profile.learner_id, course_id, horizon_weeks=horizon_weeks)
    lines = [f"plan {new_plan.plan_id} created: {len(new_plan.sessions)} sessions"]
    for s in new_plan.sessions:
        lines.append(
            f"  {s.session_id}: {s.start.isoformat()} .. {s.end.isoformat()} "
            f"unit {s.unit_id} [{', '.join(s.lesson_ids)}]"
        )
    _emit(ctx, {"plan": plan_to_json(new_plan)}, lines)


@main.command("export-ics")
@click.option("--plan", "plan_id", required=True)
@click.option("--version", default=None, type=int)
@click.option("--output", "-o", default=None, type=click.Path())
@click.pass_context
@handle_errors
def export_ics(ctx, plan_id, version, output):
    """Write the plan's calendar as RFC 5545 bytes (stdout by default)."""
    engine = _engine(ctx)
    data = engine.plan_ics(plan_id, version)
    if output:
        Path(output).write_bytes(data)
        _emit(ctx, {"written": output, "bytes": len(data)}, [f"wrote {len(data)} bytes to {output}"])
    else:
        sys.stdout.buffer.write(data)


@main.command()
@click.option("--plan", "plan_id", required=True)
@click.option("--session", "session_id", required=True)
@click.option("--questions", "questions_file", required=True, type=click.Path())
@click.pass_context
@handle_errors
def simulate(ctx, plan_id, session_id, questions_file):
    """Run start -> questions -> end -> quiz -> digest for one session."""
    engine = _engine(ctx)
    with open(questions_file, "rb") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"questions file is not valid JSON: {exc.msg}")

    session = engine.start_session(session_id)
    if session.plan_id != plan_id:
        raise ParseError(f"session {session_id!r} belongs to plan {session.plan_id!r}")
    lines = [f"session {session_id} started", f"guidance: {session.guidance}"]
    json_out: dict = {"session_id": session_id, "guidance": session.guidance, "questions": []}

    for q in spec.get("questions", []):
        answer = engine.ask_question(session_id, q["text"])
        lines.append(f"q: {q['text']}")
        lines.append(f"a [{answer.scope_flag.value}]: {answer.text}")
        for c in answer.citations:
            lines.append(f"  cite: {c.lesson_id}@{int(c.start_s)}s")
        entry = {"text": q["text"], "answer": answer.to_json(), "expansions": []}
        for tier_name in q.get("expand", []):
            content = engine.expand_answer(session_id, answer.answer_id, Tier(tier_name))
            lines.append(f"  expanded {tier_name}")
            entry["expansions"].append(content.to_json())
        json_out["questions"].append(entry)

    quiz = engine.end_session(session_id)
    lines.append(f"quiz {quiz.quiz_id}: {len(quiz.questions)} questions")
    result, report = engine.submit_quiz(session_id, spec.get("quiz_answers", []))
    lines.append(f"score: {result.score_display} ({result.correct}/{result.total})")
    lines.append(f"analysis: {report.narrative}")
    digest = engine.session_digest(session_id)
    lines.append(digest.text)
    json_out.update(
        {
            "quiz": quiz.to_json(include_answers=False),
            "result": result.to_json(),
            "report": report.to_json(),
            "digest": digest.to_json(),
        }
    )
    _emit(ctx, json_out, lines)


@main.command()
@click.option("--plan", "plan_id", required=True)
@click.pass_context
@handle_errors
def history(ctx, plan_id):
    """Print the plan's version lineage with decisions."""
    engine = _engine(ctx)
    entries = engine.plan_history(plan_id)
    lines = []
    for e in entries:
        version = f"v{e['version']}" if e["version"] is not None else "(no version)"
        action = f" [{e['action']}]" if e.get("action") else ""
        summary = f" {e['rationale_summary']}" if e.get("rationale_summary") else ""
        lines.append(f"{version} {e['provenance'] or '-'}{action} at {e['decided_at']}{summary}")
    _emit(ctx, {"history": entries}, lines)


@main.command()
@click.option("--session", "session_id", required=True)
@click.pass_context
@handle_errors
def report(ctx, session_id):
    """Print the persisted quiz report for a session."""
    engine = _engine(ctx)
    quiz_report = engine.quiz_report(session_id)
    lines = [
        f"quiz {quiz_report.quiz_id}: {quiz_report.score_display} "
        f"({quiz_report.correct}/{quiz_report.total})",
    ]
    for w in quiz_report.weak_concepts:
        lines.append(f"  weak: {w.concept_tag} (questions {', '.join(map(str, w.evidence))})")
    lines.append(f"narrative: {quiz_report.narrative}")
    _emit(ctx, {"report": quiz_report.to_json()}, lines)


@main.command()
@click.option("--plan", "plan_id", required=True)
@click.option("--accept", "action", flag_value="accept")
@click.option("--reject", "action", flag_value="reject")
@click.option("--modify-file", default=None, type=click.Path(), help="JSON {ops, rationales}.")
@click.pass_context
@handle_errors
def adapt(ctx, plan_id, action, modify_file):
    """Generate an adaptation proposal and optionally decide on it."""
    engine = _engine(ctx)
    proposal = engine.propose_adaptation(plan_id)
    lines = [f"proposal {proposal.proposal_id} against v{proposal.base_version}:"]
    for op, why in zip(proposal.ops, proposal.rationales):
        lines.append(f"  {op.kind.value}: {canonical_dumps(op.to_json())}")
        lines.append(f"    rationale: {why}")
    if not proposal.ops:
        lines.append("  (no changes proposed)")
    payload: dict = {"proposal": proposal.to_json()}

    if modify_file is not None:
        with open(modify_file, "rb") as fh:
            edited = json.load(fh)
        head = engine.decide(
            proposal.proposal_id, "modify", edited.get("ops"), edited.get("rationales")
        )
        lines.append(f"modified: head is now v{head.version}")
        payload["plan"] = plan_to_json(head)
    elif action is not None:
        head = engine.decide(proposal.proposal_id, action)
        lines.append(f"{action}ed: head is now v{head.version}")
        payload["plan"] = plan_to_json(head)
    _emit(ctx, payload, lines)


@main.command()
@click.option("--plan", "plan_id", required=True)
@click.pass_context
@handle_errors
def undo(ctx, plan_id):
    """Append a version restoring the head's parent content."""
    engine = _engine(ctx)
    head = engine.undo_plan(plan_id)
    _emit(
        ctx,
        {"plan": plan_to_json(head)},
        [f"undone: head is now v{head.version} (content of v{head.version - 2})"],
    )


@main.command()
@click.pass_context
@handle_errors
def serve(ctx):  # pragma: no cover - manual entry point
    """Serve the HTTP API (LISTEN_ADDR controls the bind address)."""
    from .api import serve as _serve

    _serve(_engine(ctx))


if __name__ == "__main__":
    main()
