"""Study-session runtime: state machine, grounded Q&A, quizzes, digest.

A session walks Scheduled -> Active -> Quizzing -> Completed (or Active ->
Abandoned).  Answers are grounded by lexical retrieval over the session's
lessons plus already-completed ones; when the best match falls below the
scope threshold the learner still gets an answer, explicitly flagged as
out of scope.  Tier expansions are cached per answer and never regenerated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction

from .corpus import (
    PROVENANCE_LOW_CONFIDENCE,
    Corpus,
    SegmentRef,
    retrieve_segments,
    SCOPE_THRESHOLD,
)
from .errors import (
    EmptyQuery,
    IllegalState,
    IllegalTransition,
    IndexOutOfRange,
    LengthMismatch,
    TierAlreadyFilled,
    UnknownAnswer,
    UnknownSession,
)
from .jsonutil import canonical_dumps, utc_isoformat
from .provider import ContextBlock, ModelProvider, PromptEnvelope, complete
from .schemas import DEFAULT_QUIZ_QUESTIONS, QUIZ_OPTIONS
from .core import PlannedSession, StudyPlan

OUT_OF_SCOPE_NOTICE = (
    "Note: this question falls outside the current session's learning content."
)

RETRIEVAL_K = 3


class SessionState(str, Enum):
    SCHEDULED = "Scheduled"
    ACTIVE = "Active"
    QUIZZING = "Quizzing"
    COMPLETED = "Completed"
    ABANDONED = "Abandoned"


class Tier(str, Enum):
    MORE_DETAILS = "MoreDetails"
    PRACTICE_QUESTIONS = "PracticeQuestions"
    EXTERNAL_RESOURCES = "ExternalResources"


EXPANDABLE_TIERS = (Tier.MORE_DETAILS, Tier.PRACTICE_QUESTIONS, Tier.EXTERNAL_RESOURCES)


class EventKind(str, Enum):
    SESSION_STARTED = "SessionStarted"
    QUESTION_ASKED = "QuestionAsked"
    TIER_EXPANDED = "TierExpanded"
    SESSION_ENDED = "SessionEnded"
    QUIZ_ANSWERED = "QuizAnswered"


@dataclass(frozen=True)
class InteractionEvent:
    timestamp: datetime
    session_id: str
    kind: EventKind
    detail: dict

    def to_json(self) -> dict:
        return {
            "timestamp": utc_isoformat(self.timestamp),
            "session_id": self.session_id,
            "kind": self.kind.value,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class TierResource:
    url: str
    label: str
    provenance_label: str


@dataclass(frozen=True)
class TierContent:
    tier: Tier
    text: str | None = None
    items: tuple[dict, ...] = ()
    resources: tuple[TierResource, ...] = ()

    def to_json(self) -> dict:
        return {
            "tier": self.tier.value,
            "text": self.text,
            "items": [dict(i) for i in self.items],
            "resources": [
                {"url": r.url, "label": r.label, "provenance_label": r.provenance_label}
                for r in self.resources
            ],
        }


class ScopeFlag(str, Enum):
    IN_SCOPE = "InScope"
    OUT_OF_SCOPE = "OutOfScope"


@dataclass
class GroundedAnswer:
    answer_id: str
    text: str
    citations: tuple[SegmentRef, ...]
    scope_flag: ScopeFlag
    expansions: dict[Tier, TierContent] = field(default_factory=dict)

    @property
    def expandable(self) -> tuple[Tier, ...]:
        return EXPANDABLE_TIERS

    def to_json(self) -> dict:
        return {
            "answer_id": self.answer_id,
            "text": self.text,
            "citations": [c.to_json() for c in self.citations],
            "scope_flag": self.scope_flag.value,
            "expandable": [t.value for t in self.expandable],
            "expansions": {t.value: c.to_json() for t, c in self.expansions.items()},
        }


@dataclass(frozen=True)
class QuizQuestion:
    stem: str
    options: tuple[str, ...]
    correct_index: int
    concept_tag: str
    source_refs: tuple[SegmentRef, ...]


@dataclass(frozen=True)
class QuizSpec:
    quiz_id: str
    session_id: str
    questions: tuple[QuizQuestion, ...]

    def to_json(self, include_answers: bool = True) -> dict:
        out = {
            "quiz_id": self.quiz_id,
            "session_id": self.session_id,
            "questions": [
                {
                    "stem": q.stem,
                    "options": list(q.options),
                    "concept_tag": q.concept_tag,
                    "source_refs": [r.to_json() for r in q.source_refs],
                    **({"correct_index": q.correct_index} if include_answers else {}),
                }
                for q in self.questions
            ],
        }
        return out


@dataclass(frozen=True)
class QuizResult:
    quiz_id: str
    answers: tuple[int, ...]
    score_fraction: Fraction
    per_concept: dict[str, dict[str, int]]

    @property
    def correct(self) -> int:
        return sum(v["correct"] for v in self.per_concept.values())

    @property
    def total(self) -> int:
        return len(self.answers)

    @property
    def score_display(self) -> str:
        return format_percent(self.score_fraction)

    def to_json(self) -> dict:
        return {
            "quiz_id": self.quiz_id,
            "answers": list(self.answers),
            "score": {"correct": self.correct, "total": self.total},
            "score_display": self.score_display,
            "per_concept": {k: dict(v) for k, v in sorted(self.per_concept.items())},
        }


def format_percent(fraction: Fraction) -> str:
    """Percentage with one decimal, round-half-up: Fraction(3, 7) -> '42.9%'."""
    value = Decimal(fraction.numerator * 100) / Decimal(fraction.denominator)
    return f"{value.quantize(Decimal('0.1'), rounding=ROUND_HALF_UP)}%"


@dataclass
class SessionContext:
    session_id: str
    plan_id: str
    plan_version: int
    state: SessionState
    lesson_ids: tuple[str, ...]
    history_lesson_ids: tuple[str, ...] = ()
    started_at: datetime | None = None
    ended_at: datetime | None = None
    guidance: str = ""
    answers: dict[str, GroundedAnswer] = field(default_factory=dict)
    events: list[InteractionEvent] = field(default_factory=list)
    quiz: QuizSpec | None = None
    result: QuizResult | None = None
    _answer_seq: int = 0

    def log(self, kind: EventKind, detail: dict, now: datetime) -> InteractionEvent:
        event = InteractionEvent(now, self.session_id, kind, detail)
        self.events.append(event)
        return event

    def scope(self) -> list[str]:
        seen: list[str] = []
        for lid in (*self.lesson_ids, *self.history_lesson_ids):
            if lid not in seen:
                seen.append(lid)
        return seen

    def export_log(self) -> bytes:
        """Newline-delimited JSON, one event per line, replay-ready."""
        lines = [canonical_dumps(e.to_json()) for e in self.events]
        return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


# --- prompt builders ----------------------------------------------------------


def build_guidance_envelope(
    session: PlannedSession, corpus: Corpus, pace_level: str, goals_text: str
) -> PromptEnvelope:
    unit = corpus.manifest.unit_by_id(session.unit_id)
    lessons = corpus.manifest.lesson_index()
    lesson_titles = [
        lessons[lid].title if lid in lessons else lid for lid in session.lesson_ids
    ]
    slot = (
        f"Unit {session.unit_id}: {unit.title if unit else session.unit_id} / "
        + "; ".join(lesson_titles)
    )
    user = (
        f"The learner is starting the study session '{slot}' "
        f"({session.duration_minutes} minutes, pace {pace_level}).\n"
        f"Learner goals: {goals_text}\n"
        f"Objectives: {'; '.join(session.objectives) or 'cover the listed lessons'}"
    )
    return PromptEnvelope(
        agent="QA",
        system_text=(
            "You open study sessions with short, specific guidance. Reply with JSON "
            "only: {\"guidance\": \"...\"}. Mention the unit, what to focus on, and "
            "how to split the available time."
        ),
        user_text=user,
        context_blocks=(),
        response_schema_id="guidance.v1",
    )


def build_qa_envelope(question: str, citations: tuple[SegmentRef, ...], corpus: Corpus) -> PromptEnvelope:
    blocks = []
    for ref in citations:
        transcript = corpus.transcript_for(ref.lesson_id)
        cue = transcript.cues[ref.cue_index]
        blocks.append(
            ContextBlock(
                f"{ref.lesson_id}@{int(ref.start_s)}s",
                cue.text,
            )
        )
    system = (
        "You answer course questions concisely, grounded strictly in the provided "
        "transcript excerpts. Reply with JSON only: {\"answer\": \"...\"}."
        if blocks
        else "You answer general questions concisely. The question is outside the "
        "current course scope; answer anyway. Reply with JSON only: "
        "{\"answer\": \"...\"}."
    )
    return PromptEnvelope(
        agent="QA",
        system_text=system,
        user_text=question,
        context_blocks=tuple(blocks),
        response_schema_id="answer.v1",
    )


_TIER_SCHEMA = {
    Tier.MORE_DETAILS: "tier_details.v1",
    Tier.PRACTICE_QUESTIONS: "tier_practice.v1",
    Tier.EXTERNAL_RESOURCES: "tier_resources.v1",
}

_TIER_INSTRUCTION = {
    Tier.MORE_DETAILS: (
        "Expand the answer with a deeper explanation. Reply with JSON only: "
        "{\"text\": \"...\"}."
    ),
    Tier.PRACTICE_QUESTIONS: (
        "Write practice multiple-choice questions (exactly 4 options each) that "
        "test the answer's concepts. Reply with JSON only: {\"items\": [{\"stem\", "
        "\"options\", \"correct_index\"}]}."
    ),
    Tier.EXTERNAL_RESOURCES: (
        "Suggest further reading beyond the course. Reply with JSON only: "
        "{\"resources\": [{\"url\", \"label\"}]}."
    ),
}


def build_tier_envelope(answer: GroundedAnswer, tier: Tier) -> PromptEnvelope:
    blocks = [ContextBlock("base_answer", answer.text)]
    for t in EXPANDABLE_TIERS:
        if t in answer.expansions and t != tier:
            filled = answer.expansions[t]
            blocks.append(
                ContextBlock(f"tier_{t.value}", filled.text or canonical_dumps(filled.to_json()))
            )
    return PromptEnvelope(
        agent="TierExpand",
        system_text=_TIER_INSTRUCTION[tier],
        user_text=f"Expand tier {tier.value}; each tier builds on everything above.",
        context_blocks=tuple(blocks),
        response_schema_id=_TIER_SCHEMA[tier],
    )


def build_quiz_envelope(ctx: SessionContext, corpus: Corpus, question_count: int) -> PromptEnvelope:
    blocks = []
    for lid in ctx.scope():
        transcript = corpus.transcript_for(lid)
        if transcript.cues:
            text = " ".join(c.text for c in transcript.cues)
            blocks.append(ContextBlock(f"transcript:{lid}", text))
    asked = [
        e.detail.get("question", "")
        for e in ctx.events
        if e.kind is EventKind.QUESTION_ASKED
    ]
    user = (
        f"Create exactly {question_count} multiple-choice questions (4 options each, "
        "one correct_index, a concept_tag per question, and sources citing "
        "lesson_id + cue_index from the transcripts) covering this session.\n"
        f"Lessons in scope: {', '.join(ctx.lesson_ids)}\n"
        f"Learner questions during the session: {'; '.join(q for q in asked if q) or 'none'}"
    )
    return PromptEnvelope(
        agent="QuizGen",
        system_text=(
            "You write formative assessment quizzes from course transcripts. Reply "
            "with JSON only matching the quiz schema."
        ),
        user_text=user,
        context_blocks=tuple(blocks),
        response_schema_id="quiz.v1",
    )


# --- operations -----------------------------------------------------------------


def start_session(
    plan: StudyPlan,
    session_id: str,
    corpus: Corpus,
    provider: ModelProvider,
    *,
    now: datetime,
    pace_level: str = "standard",
    goals_text: str = "",
    history_lesson_ids: tuple[str, ...] = (),
    existing_state: SessionState | None = None,
) -> SessionContext:
    """Open a Scheduled session: guidance + SessionStarted log entry."""
    session = next((s for s in plan.sessions if s.session_id == session_id), None)
    if session is None:
        raise UnknownSession(f"session {session_id!r} is not in plan {plan.plan_id!r}")
    if existing_state is not None and existing_state is not SessionState.SCHEDULED:
        raise IllegalTransition(f"cannot start session in state {existing_state.value}")

    envelope = build_guidance_envelope(session, corpus, pace_level, goals_text)
    response = complete(provider, envelope)

    ctx = SessionContext(
        session_id=session_id,
        plan_id=plan.plan_id,
        plan_version=plan.version,
        state=SessionState.ACTIVE,
        lesson_ids=session.lesson_ids,
        history_lesson_ids=history_lesson_ids,
        started_at=now,
        guidance=response.payload["guidance"],
    )
    ctx.log(
        EventKind.SESSION_STARTED,
        {
            "plan_id": plan.plan_id,
            "plan_version": plan.version,
            "lesson_ids": list(session.lesson_ids),
        },
        now,
    )
    return ctx


def answer_question(
    ctx: SessionContext,
    question: str,
    corpus: Corpus,
    provider: ModelProvider,
    *,
    now: datetime,
    k: int = RETRIEVAL_K,
    scope_threshold: float = SCOPE_THRESHOLD,
) -> GroundedAnswer:
    """Grounded Q&A with scope detection; always answers, always logs."""
    if ctx.state is not SessionState.ACTIVE:
        raise IllegalState(f"cannot answer questions in state {ctx.state.value}")
    transcripts = corpus.scoped_transcripts(ctx.scope())
    refs = retrieve_segments(question, transcripts, k)
    in_scope = bool(refs) and refs[0].score >= scope_threshold

    citations = tuple(refs) if in_scope else ()
    envelope = build_qa_envelope(question, citations, corpus)
    response = complete(provider, envelope)
    text = response.payload["answer"]
    if not in_scope:
        text = f"{OUT_OF_SCOPE_NOTICE} {text}"

    ctx._answer_seq += 1
    answer = GroundedAnswer(
        answer_id=f"a{ctx._answer_seq}",
        text=text,
        citations=citations,
        scope_flag=ScopeFlag.IN_SCOPE if in_scope else ScopeFlag.OUT_OF_SCOPE,
    )
    ctx.answers[answer.answer_id] = answer
    ctx.log(
        EventKind.QUESTION_ASKED,
        {
            "question": question,
            "answer_id": answer.answer_id,
            "top_lesson_id": refs[0].lesson_id if in_scope else None,
            "scope": answer.scope_flag.value,
        },
        now,
    )
    return answer


def expand_answer(
    ctx: SessionContext,
    answer_id: str,
    tier: Tier,
    corpus: Corpus,
    provider: ModelProvider,
    *,
    now: datetime,
) -> TierContent:
    """Fill one disclosure tier, once; curated resources come before agent ones."""
    if ctx.state is not SessionState.ACTIVE:
        raise IllegalState(f"cannot expand answers in state {ctx.state.value}")
    answer = ctx.answers.get(answer_id)
    if answer is None:
        raise UnknownAnswer(f"answer {answer_id!r} does not exist in this session")
    if tier in answer.expansions:
        raise TierAlreadyFilled(f"tier {tier.value} already expanded for {answer_id}")

    envelope = build_tier_envelope(answer, tier)
    response = complete(provider, envelope)

    if tier is Tier.MORE_DETAILS:
        content = TierContent(tier=tier, text=response.payload["text"])
    elif tier is Tier.PRACTICE_QUESTIONS:
        content = TierContent(tier=tier, items=tuple(response.payload["items"]))
    else:
        curated: list[TierResource] = []
        lesson_order = [r.lesson_id for r in answer.citations] or list(ctx.lesson_ids)
        lessons = corpus.manifest.lesson_index()
        seen: set[str] = set()
        for lid in lesson_order:
            if lid in seen or lid not in lessons:
                continue
            seen.add(lid)
            for res in lessons[lid].curated_resources:
                curated.append(TierResource(res.url, res.label, res.provenance_label))
        agent_resources = [
            TierResource(r["url"], r["label"], PROVENANCE_LOW_CONFIDENCE)
            for r in response.payload["resources"]
        ]
        content = TierContent(tier=tier, resources=tuple(curated + agent_resources))

    answer.expansions[tier] = content
    ctx.log(EventKind.TIER_EXPANDED, {"answer_id": answer_id, "tier": tier.value}, now)
    return content


def end_session(
    ctx: SessionContext,
    corpus: Corpus,
    provider: ModelProvider,
    *,
    now: datetime,
    question_count: int = DEFAULT_QUIZ_QUESTIONS,
) -> QuizSpec:
    """Close the study phase and generate the formative quiz."""
    if ctx.state is not SessionState.ACTIVE:
        raise IllegalTransition(f"cannot end session in state {ctx.state.value}")

    scope = set(ctx.scope())

    def check_sources(payload) -> list[str]:
        problems = []
        for qi, q in enumerate(payload["questions"]):
            for ref in q["sources"]:
                lid = ref["lesson_id"]
                if lid not in scope:
                    problems.append(
                        f"$.questions[{qi}]: source lesson {lid!r} outside session scope"
                    )
                    continue
                cue_count = len(corpus.transcript_for(lid).cues)
                if ref["cue_index"] >= cue_count:
                    problems.append(
                        f"$.questions[{qi}]: cue_index {ref['cue_index']} out of range "
                        f"for lesson {lid!r}"
                    )
        return problems

    envelope = build_quiz_envelope(ctx, corpus, question_count)
    response = complete(provider, envelope, post_validate=check_sources)

    questions = []
    for q in response.payload["questions"]:
        refs = []
        for ref in q["sources"]:
            transcript = corpus.transcript_for(ref["lesson_id"])
            cue = transcript.cues[ref["cue_index"]]
            refs.append(SegmentRef(ref["lesson_id"], ref["cue_index"], cue.start_s, 0.0))
        questions.append(
            QuizQuestion(
                stem=q["stem"],
                options=tuple(q["options"]),
                correct_index=q["correct_index"],
                concept_tag=q["concept_tag"],
                source_refs=tuple(refs),
            )
        )
    quiz = QuizSpec(
        quiz_id=f"{ctx.session_id}-quiz",
        session_id=ctx.session_id,
        questions=tuple(questions),
    )

    ctx.state = SessionState.QUIZZING
    ctx.ended_at = now
    elapsed = 0
    if ctx.started_at is not None:
        elapsed = int((now - ctx.started_at).total_seconds() // 60)
    ctx.log(
        EventKind.SESSION_ENDED,
        {"outcome": "completed", "elapsed_minutes": elapsed},
        now,
    )
    ctx.quiz = quiz
    return quiz


def abandon_session(ctx: SessionContext, *, now: datetime) -> None:
    """Leave an Active session without taking the quiz."""
    if ctx.state is not SessionState.ACTIVE:
        raise IllegalTransition(f"cannot abandon session in state {ctx.state.value}")
    ctx.state = SessionState.ABANDONED
    ctx.ended_at = now
    elapsed = 0
    if ctx.started_at is not None:
        elapsed = int((now - ctx.started_at).total_seconds() // 60)
    ctx.log(
        EventKind.SESSION_ENDED,
        {"outcome": "abandoned", "elapsed_minutes": elapsed},
        now,
    )


def score_quiz(
    spec: QuizSpec,
    answers: list[int],
    ctx: SessionContext | None = None,
    *,
    now: datetime | None = None,
) -> QuizResult:
    """Score chosen indices against the quiz key; optionally complete the session."""
    if len(answers) != len(spec.questions):
        raise LengthMismatch(
            f"expected {len(spec.questions)} answers, got {len(answers)}"
        )
    for i, a in enumerate(answers):
        if not 0 <= a < QUIZ_OPTIONS:
            raise IndexOutOfRange(f"answer {i} is {a}, must be 0..{QUIZ_OPTIONS - 1}")

    per_concept: dict[str, dict[str, int]] = {}
    correct = 0
    for q, a in zip(spec.questions, answers):
        tally = per_concept.setdefault(q.concept_tag, {"asked": 0, "correct": 0})
        tally["asked"] += 1
        if a == q.correct_index:
            tally["correct"] += 1
            correct += 1
    result = QuizResult(
        quiz_id=spec.quiz_id,
        answers=tuple(answers),
        score_fraction=Fraction(correct, len(spec.questions)),
        per_concept=per_concept,
    )
    if ctx is not None:
        if ctx.state is not SessionState.QUIZZING:
            raise IllegalTransition(f"cannot submit quiz in state {ctx.state.value}")
        if now is None:
            raise ValueError("now is required when completing a session")
        ctx.state = SessionState.COMPLETED
        ctx.result = result
        ctx.log(
            EventKind.QUIZ_ANSWERED,
            {
                "quiz_id": spec.quiz_id,
                "correct": correct,
                "total": len(spec.questions),
                "score_display": result.score_display,
            },
            now,
        )
    return result


@dataclass(frozen=True)
class SessionDigest:
    text: str
    summary: dict

    def to_json(self) -> dict:
        return {"text": self.text, "summary": self.summary}


def session_digest(ctx: SessionContext, result: QuizResult | None = None) -> SessionDigest:
    """Deterministic end-of-session summary rendered from logged data only."""
    if ctx.state not in (SessionState.COMPLETED, SessionState.ABANDONED):
        raise IllegalState(f"digest requires a finished session, state is {ctx.state.value}")
    result = result or ctx.result
    questions = [e for e in ctx.events if e.kind is EventKind.QUESTION_ASKED]
    lessons = list(ctx.lesson_ids)

    lines = [f"Session {ctx.session_id} digest:"]
    lines.append("Lessons covered: " + (", ".join(lessons) or "none"))
    lines.append(f"Questions asked: {len(questions)}")
    weak: list[str] = []
    if ctx.state is SessionState.COMPLETED and result is not None:
        weak = sorted(
            tag for tag, t in result.per_concept.items() if t["correct"] < t["asked"]
        )
        lines.append(
            f"Quiz score: {result.score_display} ({result.correct}/{result.total})"
        )
        if weak:
            lines.append("Areas to review: " + ", ".join(weak))
            next_step = "Review the flagged concepts before the next session."
        else:
            next_step = "All concepts solid; continue with the next scheduled session."
    else:
        lines.append("Session ended early; no quiz taken.")
        next_step = "Reschedule this session to finish the remaining material."
    lines.append("Next step: " + next_step)

    summary = {
        "session_id": ctx.session_id,
        "completed": ctx.state is SessionState.COMPLETED,
        "lessons": lessons,
        "questions_asked": len(questions),
        "score_display": result.score_display
        if (ctx.state is SessionState.COMPLETED and result)
        else None,
        "weak_concepts": weak,
        "next_step": next_step,
    }
    return SessionDigest(text="\n".join(lines), summary=summary)
