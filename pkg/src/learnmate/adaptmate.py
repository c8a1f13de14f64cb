"""Performance-driven plan adaptation with learner-controlled application.

Quiz analysis and signal building are deterministic; only the proposal
narrative and the raw adaptation ops come from agents.  Candidate plans
always pass through the shared validate/repair pipeline, so accepted ops
are feasible by construction.  Plans are never mutated in place: accept,
modify, and undo all append new versions to an immutable lineage.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta
from enum import Enum
from zoneinfo import ZoneInfo

from .core import (
    DEFAULT_HORIZON_WEEKS,
    LearnerProfile,
    PlannedSession,
    Provenance,
    StudyPlan,
    normalize_availability,
    plan_to_json,
    profile_to_json,
    session_from_json,
    session_to_json,
    sessions_content_json,
)
from .corpus import CourseManifest
from .errors import (
    InvalidEdit,
    LineageMismatch,
    Mismatch,
    NothingToUndo,
    StaleProposal,
)
from .jsonutil import canonical_dumps, utc_isoformat
from .planmate import deterministic_repair, place_session, validate_plan, repair_plan
from .provider import ContextBlock, ModelProvider, PromptEnvelope, complete
from .studymate import EventKind, InteractionEvent, QuizResult, QuizSpec


# --- quiz report ---------------------------------------------------------------


@dataclass(frozen=True)
class WeakConcept:
    concept_tag: str
    evidence: tuple[int, ...]  # indices of missed questions bearing the tag


@dataclass(frozen=True)
class QuizReport:
    quiz_id: str
    score_display: str
    correct: int
    total: int
    weak_concepts: tuple[WeakConcept, ...]
    narrative: str

    def to_json(self) -> dict:
        return {
            "quiz_id": self.quiz_id,
            "score_display": self.score_display,
            "score": {"correct": self.correct, "total": self.total},
            "weak_concepts": [
                {"concept_tag": w.concept_tag, "evidence": list(w.evidence)}
                for w in self.weak_concepts
            ],
            "narrative": self.narrative,
        }


def weak_concepts_from(result: QuizResult, spec: QuizSpec) -> tuple[WeakConcept, ...]:
    """Any-miss rule: a concept is weak iff any question tagged with it was missed."""
    missed: dict[str, list[int]] = {}
    for i, (q, a) in enumerate(zip(spec.questions, result.answers)):
        if a != q.correct_index:
            missed.setdefault(q.concept_tag, []).append(i)
    return tuple(
        WeakConcept(tag, tuple(indices)) for tag, indices in sorted(missed.items())
    )


def build_analysis_envelope(
    result: QuizResult, spec: QuizSpec, weak: tuple[WeakConcept, ...]
) -> PromptEnvelope:
    weak_tags = [w.concept_tag for w in weak]
    user = (
        f"The learner scored {result.score_display} ({result.correct}/{result.total}).\n"
        f"Weak concepts (computed, do not invent others): {', '.join(weak_tags) or 'none'}\n"
        "Write a short narrative explaining the result and what to focus on next. "
        "If there are no weak concepts, congratulate the learner."
    )
    questions = [
        {"stem": q.stem, "concept_tag": q.concept_tag, "correct": a == q.correct_index}
        for q, a in zip(spec.questions, result.answers)
    ]
    return PromptEnvelope(
        agent="QuizAnalysis",
        system_text=(
            "You analyze quiz outcomes for learners. Reply with JSON only: "
            "{\"narrative\": \"...\"}. Mention only the listed weak concepts."
        ),
        user_text=user,
        context_blocks=(ContextBlock("questions", canonical_dumps(questions)),),
        response_schema_id="quiz_analysis.v1",
    )


def analyze_quiz(
    result: QuizResult,
    spec: QuizSpec,
    log: list[InteractionEvent],
    provider: ModelProvider,
) -> QuizReport:
    """Deterministic weak-concept computation plus an agent-written narrative."""
    if result.quiz_id != spec.quiz_id:
        raise Mismatch(f"result {result.quiz_id!r} does not belong to quiz {spec.quiz_id!r}")
    weak = weak_concepts_from(result, spec)
    weak_tags = {w.concept_tag for w in weak}
    other_tags = {q.concept_tag for q in spec.questions} - weak_tags

    def narrative_check(payload) -> list[str]:
        text = payload["narrative"]
        problems = []
        for tag in sorted(other_tags):
            if re.search(rf"\b{re.escape(tag)}\b", text, flags=re.IGNORECASE):
                problems.append(
                    f"$.narrative: mentions {tag!r}, which is not a weak concept"
                )
        return problems

    envelope = build_analysis_envelope(result, spec, weak)
    response = complete(provider, envelope, post_validate=narrative_check)
    return QuizReport(
        quiz_id=spec.quiz_id,
        score_display=result.score_display,
        correct=result.correct,
        total=result.total,
        weak_concepts=weak,
        narrative=response.payload["narrative"],
    )


# --- adaptation signal -----------------------------------------------------------


@dataclass(frozen=True)
class CompletionEntry:
    outcome: str  # "completed" | "abandoned"
    elapsed_minutes: int
    planned_minutes: int


@dataclass(frozen=True)
class AdaptationSignal:
    weak_concepts: tuple[WeakConcept, ...]
    question_frequency: dict[str, int]
    completion: dict[str, CompletionEntry]
    studied_lessons: tuple[str, ...]
    planned_lessons: tuple[str, ...]
    profile_snapshot: dict

    def to_json(self) -> dict:
        return {
            "weak_concepts": [
                {"concept_tag": w.concept_tag, "evidence": list(w.evidence)}
                for w in self.weak_concepts
            ],
            "question_frequency": dict(sorted(self.question_frequency.items())),
            "completion": {
                sid: {
                    "outcome": c.outcome,
                    "elapsed_minutes": c.elapsed_minutes,
                    "planned_minutes": c.planned_minutes,
                }
                for sid, c in sorted(self.completion.items())
            },
            "coverage": {
                "studied": list(self.studied_lessons),
                "planned": list(self.planned_lessons),
            },
            "profile": self.profile_snapshot,
        }

    def is_empty(self) -> bool:
        """Nothing to adapt: no weak concepts, clean completions, full coverage."""
        if self.weak_concepts:
            return False
        for entry in self.completion.values():
            if entry.outcome != "completed" or entry.elapsed_minutes > entry.planned_minutes:
                return False
        return set(self.planned_lessons) <= set(self.studied_lessons)


def build_signal(
    report: QuizReport | None,
    logs: list[InteractionEvent],
    plan: StudyPlan,
    manifest: CourseManifest,
    profile: LearnerProfile,
) -> AdaptationSignal:
    """Deterministic aggregation of quiz, interaction, and coverage data."""
    sessions = {s.session_id: s for s in plan.sessions}
    frequency: dict[str, int] = {}
    completion: dict[str, CompletionEntry] = {}
    studied: list[str] = []
    known_lessons = manifest.lesson_index()

    for event in logs:
        if event.session_id not in sessions:
            raise LineageMismatch(
                f"event references session {event.session_id!r} not in plan "
                f"{plan.plan_id!r} v{plan.version}"
            )
        if event.kind is EventKind.QUESTION_ASKED:
            lid = event.detail.get("top_lesson_id")
            if lid:
                frequency[lid] = frequency.get(lid, 0) + 1
        elif event.kind is EventKind.SESSION_ENDED:
            session = sessions[event.session_id]
            completion[event.session_id] = CompletionEntry(
                outcome=event.detail.get("outcome", "completed"),
                elapsed_minutes=int(event.detail.get("elapsed_minutes", 0)),
                planned_minutes=session.duration_minutes,
            )
            if event.detail.get("outcome") == "completed":
                for lid in session.lesson_ids:
                    if lid in known_lessons and lid not in studied:
                        studied.append(lid)

    planned: list[str] = []
    for s in plan.sessions:
        for lid in s.lesson_ids:
            if lid not in planned:
                planned.append(lid)

    return AdaptationSignal(
        weak_concepts=report.weak_concepts if report else (),
        question_frequency=frequency,
        completion=completion,
        studied_lessons=tuple(studied),
        planned_lessons=tuple(planned),
        profile_snapshot=profile_to_json(profile),
    )


# --- proposals --------------------------------------------------------------------


class OpKind(str, Enum):
    ADD_SESSION = "AddSession"
    REMOVE_SESSION = "RemoveSession"
    MOVE_SESSION = "MoveSession"
    RESIZE_SESSION = "ResizeSession"
    REPLACE_CONTENT = "ReplaceContent"


@dataclass(frozen=True)
class PlanOp:
    kind: OpKind
    session_id: str | None = None
    session: PlannedSession | None = None  # AddSession payload
    new_start: datetime | None = None
    new_end: datetime | None = None
    lesson_ids: tuple[str, ...] = ()

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.session_id is not None:
            out["session_id"] = self.session_id
        if self.session is not None:
            out["session"] = session_to_json(self.session)
        if self.new_start is not None:
            out["new_start"] = utc_isoformat(self.new_start)
        if self.new_end is not None:
            out["new_end"] = utc_isoformat(self.new_end)
        if self.lesson_ids:
            out["lesson_ids"] = list(self.lesson_ids)
        return out


def op_from_json(data: dict) -> PlanOp:
    from .jsonutil import parse_utc

    kind = OpKind(data["kind"])
    session = session_from_json(data["session"]) if data.get("session") else None
    new_start = parse_utc(data["new_start"]) if data.get("new_start") else None
    new_end = parse_utc(data["new_end"]) if data.get("new_end") else None
    if session is not None:
        zone = ZoneInfo(session.timezone)
        if new_start:
            new_start = new_start.astimezone(zone)
        if new_end:
            new_end = new_end.astimezone(zone)
    return PlanOp(
        kind=kind,
        session_id=data.get("session_id"),
        session=session,
        new_start=new_start,
        new_end=new_end,
        lesson_ids=tuple(data.get("lesson_ids") or ()),
    )


@dataclass(frozen=True)
class AdaptationProposal:
    proposal_id: str
    base_version: int
    ops: tuple[PlanOp, ...]
    rationales: tuple[str, ...]
    created_at: datetime

    def to_json(self) -> dict:
        return {
            "proposal_id": self.proposal_id,
            "base_version": self.base_version,
            "ops": [op.to_json() for op in self.ops],
            "rationales": list(self.rationales),
            "created_at": utc_isoformat(self.created_at),
        }


def proposal_from_json(data: dict) -> AdaptationProposal:
    from .jsonutil import parse_utc

    return AdaptationProposal(
        proposal_id=data["proposal_id"],
        base_version=int(data["base_version"]),
        ops=tuple(op_from_json(o) for o in data["ops"]),
        rationales=tuple(data["rationales"]),
        created_at=parse_utc(data["created_at"]),
    )


class DecisionAction(str, Enum):
    ACCEPT = "accept"
    MODIFY = "modify"
    REJECT = "reject"


@dataclass(frozen=True)
class Decision:
    action: DecisionAction
    decided_at: datetime
    ops: tuple[PlanOp, ...] | None = None  # Modify only
    rationales: tuple[str, ...] | None = None


@dataclass(frozen=True)
class DecisionRecord:
    proposal_id: str
    action: str
    decided_at: datetime
    resulting_version: int | None
    rationale_summary: str

    def to_json(self) -> dict:
        return {
            "proposal_id": self.proposal_id,
            "action": self.action,
            "decided_at": utc_isoformat(self.decided_at),
            "resulting_version": self.resulting_version,
            "rationale_summary": self.rationale_summary,
        }


@dataclass
class PlanHistory:
    """Append-only plan lineage: versions plus the decisions that drove them."""

    plan_id: str
    versions: list[StudyPlan] = field(default_factory=list)
    decisions: list[DecisionRecord] = field(default_factory=list)

    @property
    def head(self) -> StudyPlan:
        return self.versions[-1]

    def version(self, number: int) -> StudyPlan | None:
        for plan in self.versions:
            if plan.version == number:
                return plan
        return None


# --- applying ops -----------------------------------------------------------------


def apply_ops(
    sessions: tuple[PlannedSession, ...], ops: tuple[PlanOp, ...], manifest: CourseManifest
) -> tuple[PlannedSession, ...]:
    """Apply ops in list order; referencing a missing session is an InvalidEdit."""
    current: dict[str, PlannedSession] = {s.session_id: s for s in sessions}
    unit_of = manifest.unit_of_lesson()
    for op in ops:
        if op.kind is OpKind.ADD_SESSION:
            if op.session is None:
                raise InvalidEdit("AddSession op carries no session")
            if op.session.session_id in current:
                raise InvalidEdit(f"session {op.session.session_id!r} already exists")
            current[op.session.session_id] = op.session
            continue
        if op.session_id is None or op.session_id not in current:
            raise InvalidEdit(f"op {op.kind.value} references unknown session {op.session_id!r}")
        target = current[op.session_id]
        zone = ZoneInfo(target.timezone)
        if op.kind is OpKind.REMOVE_SESSION:
            del current[op.session_id]
        elif op.kind is OpKind.MOVE_SESSION:
            if op.new_start is None or op.new_end is None:
                raise InvalidEdit("MoveSession needs new_start and new_end")
            current[op.session_id] = replace(
                target,
                start=op.new_start.astimezone(zone),
                end=op.new_end.astimezone(zone),
            )
        elif op.kind is OpKind.RESIZE_SESSION:
            if op.new_end is None:
                raise InvalidEdit("ResizeSession needs new_end")
            current[op.session_id] = replace(target, end=op.new_end.astimezone(zone))
        elif op.kind is OpKind.REPLACE_CONTENT:
            if not op.lesson_ids:
                raise InvalidEdit("ReplaceContent needs lesson_ids")
            unit_id = unit_of.get(op.lesson_ids[0], target.unit_id)
            current[op.session_id] = replace(
                target, lesson_ids=op.lesson_ids, unit_id=unit_id
            )
    return tuple(sorted(current.values(), key=lambda s: (s.start, s.session_id)))


# --- proposal generation ------------------------------------------------------------


def build_adaptation_envelope(
    signal: AdaptationSignal, plan: StudyPlan, manifest: CourseManifest
) -> PromptEnvelope:
    user = (
        "Propose targeted adjustments to the study plan based on the adaptation "
        "signal. Allowed op kinds: add_session, remove_session, move_session, "
        "resize_session, replace_content. Every op needs a rationale that cites "
        "at least one element of the signal (a weak concept tag, a lesson id, or "
        "a session id). Prefer small, surgical changes; add review sessions for "
        "weak concepts. Reply with JSON only."
    )
    return PromptEnvelope(
        agent="Adaptation",
        system_text=(
            "You adjust study schedules from formative assessment evidence. Reply "
            "with JSON only matching the adaptation ops schema."
        ),
        user_text=user,
        context_blocks=(
            ContextBlock("signal", canonical_dumps(signal.to_json())),
            ContextBlock("current_plan", canonical_dumps(plan_to_json(plan))),
            ContextBlock("course_outline", manifest.outline()),
        ),
        response_schema_id="adaptation.v1",
    )


def _signal_elements(signal: AdaptationSignal) -> set[str]:
    elements = {w.concept_tag for w in signal.weak_concepts}
    elements.update(signal.question_frequency)
    elements.update(signal.completion)
    elements.update(signal.studied_lessons)
    elements.update(signal.planned_lessons)
    return {e for e in elements if e}


def _next_session_id(sessions) -> str:
    highest = 0
    for s in sessions:
        m = re.fullmatch(r"s(\d+)", s.session_id)
        if m:
            highest = max(highest, int(m.group(1)))
    return f"s{highest + 1}"


def _materialize_agent_ops(
    raw_ops: list[dict],
    plan: StudyPlan,
    profile: LearnerProfile,
    manifest: CourseManifest,
    now: datetime,
) -> tuple[tuple[PlanOp, ...], tuple[str, ...]]:
    """Turn wire-form agent ops into concrete PlanOps against the plan."""
    start_date = min((s.start.date() for s in plan.sessions), default=now.date())
    windows = normalize_availability(profile, start_date, DEFAULT_HORIZON_WEEKS)
    occupied = [(s.start, s.end) for s in plan.sessions]
    sessions = {s.session_id: s for s in plan.sessions}
    working = list(plan.sessions)

    ops: list[PlanOp] = []
    rationales: list[str] = []
    for raw in raw_ops:
        kind = raw["kind"]
        rationale = raw["rationale"]
        if kind == "add_session":
            placed = place_session(
                windows,
                occupied,
                raw["day"],
                time.fromisoformat(raw["start_time"]) if raw.get("start_time") else None,
                int(raw.get("duration_minutes", 30)),
                profile.max_session_minutes,
            )
            if placed is None:
                continue  # nowhere to put it; repair cannot help an unplaceable add
            start, end, tz = placed
            occupied.append((start, end))
            objectives = list(raw.get("objectives") or ())
            title = raw.get("title")
            if title and title not in objectives:
                objectives.insert(0, title)
            session = PlannedSession(
                session_id=_next_session_id(working),
                start=start,
                end=end,
                timezone=tz,
                unit_id=raw["unit_id"],
                lesson_ids=tuple(dict.fromkeys(raw.get("lesson_ids") or ())),
                objectives=tuple(objectives),
                tips=tuple(raw.get("tips") or ()),
            )
            working.append(session)
            ops.append(PlanOp(kind=OpKind.ADD_SESSION, session=session))
        else:
            sid = raw.get("session_id", "")
            target = sessions.get(sid)
            if target is None:
                continue  # screened by post-validation; defensive skip
            if kind == "remove_session":
                ops.append(PlanOp(kind=OpKind.REMOVE_SESSION, session_id=sid))
            elif kind == "move_session":
                zone = ZoneInfo(target.timezone)
                day = date.fromisoformat(raw["day"]) if "-" in raw["day"] else None
                if day is None:
                    continue
                new_start = datetime.combine(
                    day, time.fromisoformat(raw["start_time"]), tzinfo=zone
                )
                duration = target.end - target.start
                ops.append(
                    PlanOp(
                        kind=OpKind.MOVE_SESSION,
                        session_id=sid,
                        new_start=new_start,
                        new_end=new_start + duration,
                    )
                )
            elif kind == "resize_session":
                minutes = int(raw["duration_minutes"])
                ops.append(
                    PlanOp(
                        kind=OpKind.RESIZE_SESSION,
                        session_id=sid,
                        new_end=target.start + timedelta(minutes=minutes),
                    )
                )
            elif kind == "replace_content":
                ops.append(
                    PlanOp(
                        kind=OpKind.REPLACE_CONTENT,
                        session_id=sid,
                        lesson_ids=tuple(dict.fromkeys(raw.get("lesson_ids") or ())),
                    )
                )
        rationales.append(rationale)
    # Keep rationale list aligned with materialized ops.
    if len(rationales) > len(ops):
        rationales = rationales[: len(ops)]
    return tuple(ops), tuple(rationales)


def _diff_ops(
    base: tuple[PlannedSession, ...],
    candidate: tuple[PlannedSession, ...],
    origin_rationales: dict[str, str],
) -> tuple[tuple[PlanOp, ...], tuple[str, ...]]:
    """Express candidate-vs-base as ops; repair-induced changes get stock text."""
    base_by_id = {s.session_id: s for s in base}
    cand_by_id = {s.session_id: s for s in candidate}
    ops: list[PlanOp] = []
    rationales: list[str] = []

    def rationale_for(sid: str, fallback: str) -> str:
        return origin_rationales.get(sid, fallback)

    for sid in sorted(base_by_id.keys() - cand_by_id.keys()):
        ops.append(PlanOp(kind=OpKind.REMOVE_SESSION, session_id=sid))
        rationales.append(rationale_for(sid, "removed while reconciling the schedule"))
    for s in candidate:
        if s.session_id not in base_by_id:
            ops.append(PlanOp(kind=OpKind.ADD_SESSION, session=s))
            rationales.append(rationale_for(s.session_id, "added while reconciling the schedule"))
            continue
        old = base_by_id[s.session_id]
        if (old.lesson_ids, old.unit_id) != (s.lesson_ids, s.unit_id):
            ops.append(
                PlanOp(kind=OpKind.REPLACE_CONTENT, session_id=s.session_id, lesson_ids=s.lesson_ids)
            )
            rationales.append(rationale_for(s.session_id, "content updated to fit progression"))
        if old.start != s.start:
            ops.append(
                PlanOp(
                    kind=OpKind.MOVE_SESSION,
                    session_id=s.session_id,
                    new_start=s.start,
                    new_end=s.end,
                )
            )
            rationales.append(
                rationale_for(s.session_id, "rescheduled to satisfy availability")
            )
        elif old.end != s.end:
            ops.append(PlanOp(kind=OpKind.RESIZE_SESSION, session_id=s.session_id, new_end=s.end))
            rationales.append(rationale_for(s.session_id, "resized to fit the window"))
    return tuple(ops), tuple(rationales)


def propose_adaptation(
    signal: AdaptationSignal,
    plan: StudyPlan,
    manifest: CourseManifest,
    provider: ModelProvider,
    *,
    profile: LearnerProfile,
    proposal_id: str,
    now: datetime,
) -> AdaptationProposal:
    """Agent ops -> feasible candidate -> diff back into guaranteed-good ops."""
    if signal.is_empty():
        return AdaptationProposal(
            proposal_id=proposal_id,
            base_version=plan.version,
            ops=(),
            rationales=(),
            created_at=now,
        )

    elements = _signal_elements(signal)
    past_ids = {s.session_id for s in plan.sessions if s.end < now}
    known_ids = {s.session_id for s in plan.sessions}

    def ops_check(payload) -> list[str]:
        problems = []
        for i, raw in enumerate(payload["ops"]):
            rationale = raw.get("rationale", "")
            if elements and not any(e in rationale for e in elements):
                problems.append(
                    f"$.ops[{i}].rationale: must cite at least one signal element"
                )
            sid = raw.get("session_id")
            if raw["kind"] != "add_session":
                if not sid or sid not in known_ids:
                    problems.append(f"$.ops[{i}].session_id: unknown session {sid!r}")
                elif sid in past_ids:
                    problems.append(
                        f"$.ops[{i}].session_id: session {sid!r} already ended; "
                        "past sessions are immutable"
                    )
        return problems

    envelope = build_adaptation_envelope(signal, plan, manifest)
    response = complete(provider, envelope, post_validate=ops_check)

    agent_ops, agent_rationales = _materialize_agent_ops(
        response.payload["ops"], plan, profile, manifest, now
    )
    candidate_sessions = apply_ops(plan.sessions, agent_ops, manifest)
    candidate = replace(
        plan, sessions=candidate_sessions, provenance=Provenance.ADAPTED
    )
    report = validate_plan(candidate, profile, manifest)
    if not report.ok:
        candidate = repair_plan(candidate, report, profile, manifest, provider)

    origin: dict[str, str] = {}
    for op, rationale in zip(agent_ops, agent_rationales):
        sid = op.session_id or (op.session.session_id if op.session else None)
        if sid:
            origin[sid] = rationale
    ops, rationales = _diff_ops(plan.sessions, candidate.sessions, origin)
    return AdaptationProposal(
        proposal_id=proposal_id,
        base_version=plan.version,
        ops=ops,
        rationales=rationales,
        created_at=now,
    )


# --- decisions and undo ----------------------------------------------------------


def _summarize(rationales: tuple[str, ...]) -> str:
    joined = "; ".join(rationales)
    return joined if len(joined) <= 160 else joined[:157] + "..."


def apply_decision(
    history: PlanHistory,
    proposal: AdaptationProposal,
    decision: Decision,
    *,
    profile: LearnerProfile,
    manifest: CourseManifest,
    now: datetime,
) -> StudyPlan:
    """Apply accept/modify/reject against the head; returns the new head.

    Modify edits are revalidated and rejected atomically; past-dated
    sessions are immutable relative to the proposal's creation time.
    """
    head = history.head
    if proposal.base_version != head.version:
        raise StaleProposal(
            f"proposal targets v{proposal.base_version}, head is v{head.version}"
        )

    if decision.action is DecisionAction.REJECT:
        history.decisions.append(
            DecisionRecord(proposal.proposal_id, "reject", decision.decided_at, None, "")
        )
        return head

    if decision.action is DecisionAction.ACCEPT:
        ops, rationales = proposal.ops, proposal.rationales
    else:
        if decision.ops is None:
            raise InvalidEdit("modify decision carries no ops")
        ops = decision.ops
        rationales = decision.rationales or tuple("" for _ in ops)
        if len(rationales) != len(ops):
            raise InvalidEdit("modify decision needs one rationale per op")
        if any(not r for r in rationales):
            raise InvalidEdit("every op needs a rationale")

    base_ids = {s.session_id for s in head.sessions}
    past_ids = {s.session_id for s in head.sessions if s.end < proposal.created_at}
    for op in ops:
        if op.kind is not OpKind.ADD_SESSION:
            if op.session_id not in base_ids:
                raise InvalidEdit(
                    f"op {op.kind.value} references unknown session {op.session_id!r}"
                )
            if op.session_id in past_ids:
                raise InvalidEdit(
                    f"session {op.session_id!r} ended before the proposal; it is immutable"
                )

    new_sessions = apply_ops(head.sessions, ops, manifest)
    new_plan = StudyPlan(
        plan_id=head.plan_id,
        version=head.version + 1,
        parent_version=head.version,
        provenance=Provenance.ADAPTED,
        sessions=new_sessions,
        created_at=now,
    )
    report = validate_plan(new_plan, profile, manifest)
    if not report.ok:
        raise InvalidEdit("edited ops produce an infeasible plan", report=report.to_json())

    history.versions.append(new_plan)
    history.decisions.append(
        DecisionRecord(
            proposal.proposal_id,
            decision.action.value,
            decision.decided_at,
            new_plan.version,
            _summarize(rationales),
        )
    )
    return new_plan


def undo(history: PlanHistory, *, now: datetime) -> StudyPlan:
    """Append a new head whose session content equals the head's parent's."""
    head = history.head
    if head.version == 0:
        raise NothingToUndo("plan is at its initial version")
    parent = history.version(head.parent_version if head.parent_version is not None else -1)
    if parent is None:
        raise NothingToUndo(f"parent version {head.parent_version} not found")
    new_plan = StudyPlan(
        plan_id=head.plan_id,
        version=head.version + 1,
        parent_version=head.version,
        provenance=Provenance.UNDO,
        sessions=parent.sessions,
        created_at=now,
    )
    assert canonical_dumps(sessions_content_json(new_plan)) == canonical_dumps(
        sessions_content_json(parent)
    )
    history.versions.append(new_plan)
    history.decisions.append(
        DecisionRecord(
            "",
            "undo",
            now,
            new_plan.version,
            f"reverted to the content of v{parent.version}",
        )
    )
    return new_plan
