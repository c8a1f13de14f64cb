"""Workflow facade tying the modules to durable storage.

Both the HTTP service and the CLI drive this one object, so a golden run
over either surface folds to the same persisted events.  All mutation is
serialized behind a single lock (desk-scale deployment); identifiers are
counters derived from store state, which keeps scripted runs reproducible.
"""

from __future__ import annotations

import shutil
import threading
from fractions import Fraction
from pathlib import Path

from . import adaptmate, planmate, studymate
from .adaptmate import (
    AdaptationProposal,
    Decision,
    DecisionAction,
    PlanHistory,
    QuizReport,
    proposal_from_json,
)
from .clock import Clock, SystemClock
from .core import (
    LearnerProfile,
    StudyPlan,
    profile_from_json,
    profile_to_json,
    validate_profile,
)
from .corpus import Corpus, parse_manifest, parse_transcript
from .errors import (
    IllegalState,
    InvalidEdit,
    NotFound,
    UnknownSession,
    ValidationFailed,
)
from .ics import emit_ics
from .jsonutil import parse_utc
from .persistence import (
    EventStore,
    list_history,
    persist_decision,
    persist_plan_version,
)
from .provider import ModelProvider
from .studymate import (
    EventKind,
    InteractionEvent,
    QuizResult,
    QuizSpec,
    SessionContext,
    SessionState,
)

PROFILE_STREAM_PREFIX = "profile/"


class Engine:
    def __init__(self, data_dir: str | Path, provider: ModelProvider, clock: Clock | None = None):
        self.data_dir = Path(data_dir)
        self.provider = provider
        self.clock = clock or SystemClock()
        self.store = EventStore(self.data_dir / "events.log")
        self.corpora: dict[str, Corpus] = {}
        self.profiles: dict[str, LearnerProfile] = {}
        self.histories: dict[str, PlanHistory] = {}
        self.plan_meta: dict[str, dict] = {}
        self.proposals: dict[str, AdaptationProposal] = {}
        self.live_sessions: dict[str, SessionContext] = {}
        self._persisted_events: dict[str, int] = {}
        self._lock = threading.RLock()
        self._load_courses()
        self._fold_store()

    # --- bootstrapping -----------------------------------------------------

    def _load_courses(self) -> None:
        courses_dir = self.data_dir / "courses"
        if not courses_dir.is_dir():
            return
        for course_dir in sorted(courses_dir.iterdir()):
            manifest_file = course_dir / "manifest.json"
            if not manifest_file.is_file():
                continue
            manifest = parse_manifest(manifest_file.read_bytes())
            corpus = Corpus(manifest=manifest)
            for lesson in manifest.lesson_index().values():
                transcript_file = course_dir / lesson.transcript_ref
                if transcript_file.is_file():
                    corpus.transcripts[lesson.lesson_id] = parse_transcript(
                        transcript_file.read_bytes(), lesson.lesson_id
                    )
            self.corpora[manifest.course_id] = corpus

    def _fold_store(self) -> None:
        for stream_id in self.store.streams():
            events = self.store.read_stream(stream_id)
            if stream_id.startswith(PROFILE_STREAM_PREFIX):
                for e in events:
                    if e.kind == "profile_saved":
                        profile = profile_from_json(e.payload["profile"])
                        self.profiles[profile.learner_id] = profile
                continue
            for e in events:
                if e.kind == "plan_meta":
                    self.plan_meta[stream_id] = e.payload
                elif e.kind == "plan_version":
                    from .core import plan_from_json

                    plan = plan_from_json(e.payload["plan"])
                    history = self.histories.setdefault(stream_id, PlanHistory(stream_id))
                    history.versions.append(plan)
                elif e.kind == "proposal":
                    proposal = proposal_from_json(e.payload)
                    self.proposals[proposal.proposal_id] = proposal

    # --- lookup helpers ------------------------------------------------------

    def _history(self, plan_id: str) -> PlanHistory:
        history = self.histories.get(plan_id)
        if history is None or not history.versions:
            raise NotFound(f"plan {plan_id!r} not found")
        return history

    def _profile_for_plan(self, plan_id: str) -> LearnerProfile:
        meta = self.plan_meta.get(plan_id)
        if meta is None:
            raise NotFound(f"plan {plan_id!r} has no metadata")
        profile = self.profiles.get(meta["learner_id"])
        if profile is None:
            raise NotFound(f"learner {meta['learner_id']!r} not found")
        return profile

    def _corpus_for_plan(self, plan_id: str) -> Corpus:
        meta = self.plan_meta.get(plan_id)
        if meta is None or meta["course_id"] not in self.corpora:
            raise NotFound(f"course for plan {plan_id!r} not found")
        return self.corpora[meta["course_id"]]

    def _plan_of_session(self, session_id: str) -> str:
        for plan_id, history in self.histories.items():
            for version in history.versions:
                if any(s.session_id == session_id for s in version.sessions):
                    return plan_id
        raise UnknownSession(f"session {session_id!r} not found")

    # --- course ingestion ------------------------------------------------------

    def ingest_course(self, manifest_path: str | Path, transcripts_dir: str | Path | None = None) -> str:
        """Validate and copy a course into the data directory."""
        manifest_path = Path(manifest_path)
        manifest = parse_manifest(manifest_path.read_bytes())
        source_dir = Path(transcripts_dir) if transcripts_dir else manifest_path.parent
        corpus = Corpus(manifest=manifest)
        for lesson in manifest.lesson_index().values():
            transcript_file = source_dir / lesson.transcript_ref
            if transcript_file.is_file():
                corpus.transcripts[lesson.lesson_id] = parse_transcript(
                    transcript_file.read_bytes(), lesson.lesson_id
                )
        target = self.data_dir / "courses" / manifest.course_id
        target.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(manifest_path, target / "manifest.json")
        for lesson in manifest.lesson_index().values():
            transcript_file = source_dir / lesson.transcript_ref
            if transcript_file.is_file():
                destination = target / lesson.transcript_ref
                destination.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(transcript_file, destination)
        self.corpora[manifest.course_id] = corpus
        return manifest.course_id

    # --- profiles ------------------------------------------------------------------

    def create_profile(self, profile_json: dict) -> LearnerProfile:
        profile = profile_from_json(profile_json)
        report = validate_profile(profile)
        if not report.ok:
            raise ValidationFailed("profile failed validation", detail=report.to_json())
        with self._lock:
            self.store.append_event(
                PROFILE_STREAM_PREFIX + profile.learner_id,
                "profile_saved",
                {"profile": profile_to_json(profile)},
                now=self.clock.now(),
            )
            self.profiles[profile.learner_id] = profile
        return profile

    # --- plans ------------------------------------------------------------------------

    def create_plan(self, learner_id: str, course_id: str, horizon_weeks: int | None = None) -> StudyPlan:
        profile = self.profiles.get(learner_id)
        if profile is None:
            raise NotFound(f"learner {learner_id!r} not found")
        corpus = self.corpora.get(course_id)
        if corpus is None:
            raise NotFound(f"course {course_id!r} not found")
        with self._lock:
            plan_id = f"p{len(self.histories) + 1}"
            now = self.clock.now()
            kwargs = {"plan_id": plan_id, "now": now}
            if horizon_weeks is not None:
                kwargs["horizon_weeks"] = horizon_weeks
            plan = planmate.generate_plan(profile, corpus.manifest, self.provider, **kwargs)
            self.store.append_event(
                plan_id,
                "plan_meta",
                {"learner_id": learner_id, "course_id": course_id},
                now=now,
            )
            persist_plan_version(self.store, plan, now=now)
            self.plan_meta[plan_id] = {"learner_id": learner_id, "course_id": course_id}
            self.histories[plan_id] = PlanHistory(plan_id, versions=[plan])
        return plan

    def get_plan(self, plan_id: str, version: int | None = None) -> StudyPlan:
        history = self._history(plan_id)
        if version is None:
            return history.head
        plan = history.version(version)
        if plan is None:
            raise NotFound(f"plan {plan_id!r} has no version {version}")
        return plan

    def plan_history(self, plan_id: str) -> list[dict]:
        self._history(plan_id)
        return list_history(self.store, plan_id)

    def plan_ics(self, plan_id: str, version: int | None = None) -> bytes:
        plan = self.get_plan(plan_id, version)
        corpus = self._corpus_for_plan(plan_id)
        events = planmate.plan_to_events(plan, corpus.manifest)
        return emit_ics(events, f"{corpus.manifest.title} study plan")

    # --- sessions --------------------------------------------------------------------------

    def _persist_new_events(self, ctx: SessionContext) -> None:
        done = self._persisted_events.get(ctx.session_id, 0)
        for event in ctx.events[done:]:
            self.store.append_event(
                ctx.session_id, event.kind.value, event.to_json(), now=event.timestamp
            )
        self._persisted_events[ctx.session_id] = len(ctx.events)

    def _stored_session_events(self, session_id: str) -> list[InteractionEvent]:
        events = []
        for stored in self.store.read_stream(session_id):
            if stored.kind in EventKind._value2member_map_:
                payload = stored.payload
                events.append(
                    InteractionEvent(
                        timestamp=parse_utc(payload["timestamp"]),
                        session_id=payload["session_id"],
                        kind=EventKind(payload["kind"]),
                        detail=payload["detail"],
                    )
                )
        return events

    def _derived_state(self, session_id: str) -> SessionState:
        ctx = self.live_sessions.get(session_id)
        if ctx is not None:
            return ctx.state
        events = self._stored_session_events(session_id)
        state = SessionState.SCHEDULED
        for e in events:
            if e.kind is EventKind.SESSION_STARTED:
                state = SessionState.ACTIVE
            elif e.kind is EventKind.SESSION_ENDED:
                state = (
                    SessionState.ABANDONED
                    if e.detail.get("outcome") == "abandoned"
                    else SessionState.QUIZZING
                )
            elif e.kind is EventKind.QUIZ_ANSWERED:
                state = SessionState.COMPLETED
        return state

    def _rehydrate(self, session_id: str) -> SessionContext:
        """Rebuild a context from stored events (answers are not recoverable)."""
        plan_id = self._plan_of_session(session_id)
        head = self._history(plan_id).head
        session = next((s for s in head.sessions if s.session_id == session_id), None)
        events = self._stored_session_events(session_id)
        state = self._derived_state(session_id)
        ctx = SessionContext(
            session_id=session_id,
            plan_id=plan_id,
            plan_version=head.version,
            state=state,
            lesson_ids=session.lesson_ids if session else (),
            started_at=next(
                (e.timestamp for e in events if e.kind is EventKind.SESSION_STARTED), None
            ),
            ended_at=next(
                (e.timestamp for e in reversed(events) if e.kind is EventKind.SESSION_ENDED),
                None,
            ),
        )
        ctx.events = events
        ctx._answer_seq = sum(1 for e in events if e.kind is EventKind.QUESTION_ASKED)
        for stored in self.store.read_stream(session_id):
            if stored.kind == "quiz_spec":
                ctx.quiz = _quiz_from_json(stored.payload)
            elif stored.kind == "quiz_result":
                ctx.result = _result_from_json(stored.payload)
        self.live_sessions[session_id] = ctx
        self._persisted_events[session_id] = len(events)
        return ctx

    def _ctx(self, session_id: str) -> SessionContext:
        ctx = self.live_sessions.get(session_id)
        if ctx is None:
            ctx = self._rehydrate(session_id)
        return ctx

    def start_session(self, session_id: str) -> SessionContext:
        with self._lock:
            plan_id = self._plan_of_session(session_id)
            head = self._history(plan_id).head
            profile = self._profile_for_plan(plan_id)
            corpus = self._corpus_for_plan(plan_id)
            state = self._derived_state(session_id)
            # one active session per learner at a time (live contexts only;
            # a process restart clears the slate)
            learner_id = self.plan_meta[plan_id]["learner_id"]
            for other in self.live_sessions.values():
                if other.session_id == session_id:
                    continue
                meta = self.plan_meta.get(other.plan_id)
                if (
                    meta
                    and meta["learner_id"] == learner_id
                    and other.state in (SessionState.ACTIVE, SessionState.QUIZZING)
                ):
                    raise IllegalState(
                        f"session {other.session_id!r} is still {other.state.value}; "
                        "finish or abandon it first"
                    )
            history_lessons: list[str] = []
            for s in sorted(head.sessions, key=lambda s: (s.start, s.session_id)):
                if s.session_id == session_id:
                    continue
                if self._derived_state(s.session_id) is SessionState.COMPLETED:
                    for lid in s.lesson_ids:
                        if lid not in history_lessons:
                            history_lessons.append(lid)
            ctx = studymate.start_session(
                head,
                session_id,
                corpus,
                self.provider,
                now=self.clock.now(),
                pace_level=profile.pace.value,
                goals_text=profile.goals_text,
                history_lesson_ids=tuple(history_lessons),
                existing_state=state,
            )
            self.live_sessions[session_id] = ctx
            self._persisted_events[session_id] = 0
            self._persist_new_events(ctx)
        return ctx

    def ask_question(self, session_id: str, question: str):
        with self._lock:
            ctx = self._ctx(session_id)
            corpus = self._corpus_for_plan(ctx.plan_id)
            answer = studymate.answer_question(
                ctx, question, corpus, self.provider, now=self.clock.now()
            )
            self._persist_new_events(ctx)
        return answer

    def expand_answer(self, session_id: str, answer_id: str, tier: studymate.Tier):
        with self._lock:
            ctx = self._ctx(session_id)
            corpus = self._corpus_for_plan(ctx.plan_id)
            content = studymate.expand_answer(
                ctx, answer_id, tier, corpus, self.provider, now=self.clock.now()
            )
            self._persist_new_events(ctx)
        return content

    def end_session(self, session_id: str) -> QuizSpec:
        with self._lock:
            ctx = self._ctx(session_id)
            corpus = self._corpus_for_plan(ctx.plan_id)
            quiz = studymate.end_session(ctx, corpus, self.provider, now=self.clock.now())
            self._persist_new_events(ctx)
            self.store.append_event(
                session_id, "quiz_spec", quiz.to_json(include_answers=True), now=self.clock.now()
            )
        return quiz

    def abandon_session(self, session_id: str) -> None:
        with self._lock:
            ctx = self._ctx(session_id)
            studymate.abandon_session(ctx, now=self.clock.now())
            self._persist_new_events(ctx)

    def submit_quiz(self, session_id: str, answers: list[int]) -> tuple[QuizResult, QuizReport]:
        with self._lock:
            ctx = self._ctx(session_id)
            if ctx.quiz is None:
                raise IllegalState("no quiz has been generated for this session")
            result = studymate.score_quiz(ctx.quiz, answers, ctx, now=self.clock.now())
            self._persist_new_events(ctx)
            self.store.append_event(
                session_id, "quiz_result", result.to_json(), now=self.clock.now()
            )
            report = adaptmate.analyze_quiz(result, ctx.quiz, ctx.events, self.provider)
            self.store.append_event(
                session_id, "quiz_report", report.to_json(), now=self.clock.now()
            )
        return result, report

    def session_digest(self, session_id: str):
        ctx = self._ctx(session_id)
        return studymate.session_digest(ctx)

    def quiz_report(self, session_id: str) -> QuizReport:
        for stored in reversed(self.store.read_stream(session_id)):
            if stored.kind == "quiz_report":
                return _report_from_json(stored.payload)
        raise NotFound(f"no quiz report for session {session_id!r}")

    # --- adaptation --------------------------------------------------------------------------

    def _latest_report(self, plan_id: str) -> QuizReport | None:
        head = self._history(plan_id).head
        session_ids = {s.session_id for s in head.sessions}
        latest: QuizReport | None = None
        for event in self.store.all_events():
            if event.kind == "quiz_report" and event.stream_id in session_ids:
                latest = _report_from_json(event.payload)
        return latest

    def _plan_logs(self, plan_id: str) -> list[InteractionEvent]:
        head = self._history(plan_id).head
        logs: list[InteractionEvent] = []
        for s in sorted(head.sessions, key=lambda s: (s.start, s.session_id)):
            ctx = self.live_sessions.get(s.session_id)
            if ctx is not None:
                logs.extend(ctx.events)
            else:
                logs.extend(self._stored_session_events(s.session_id))
        return logs

    def propose_adaptation(
        self,
        plan_id: str,
        manual_ops: list[dict] | None = None,
        manual_rationales: list[str] | None = None,
    ) -> AdaptationProposal:
        """Agent proposal by default; learner-authored single ops when given.

        Manual ops are validated without repair so an infeasible drag lands
        back on the caller as InvalidEdit rather than being silently moved.
        """
        with self._lock:
            history = self._history(plan_id)
            head = history.head
            profile = self._profile_for_plan(plan_id)
            corpus = self._corpus_for_plan(plan_id)
            now = self.clock.now()
            existing = sum(1 for e in self.store.read_stream(plan_id) if e.kind == "proposal")
            proposal_id = f"{plan_id}-prop{existing + 1}"

            if manual_ops is not None:
                ops = tuple(adaptmate.op_from_json(o) for o in manual_ops)
                rationales = tuple(manual_rationales or ())
                if len(rationales) != len(ops) or any(not r for r in rationales):
                    raise InvalidEdit("every op needs a rationale")
                candidate_sessions = adaptmate.apply_ops(head.sessions, ops, corpus.manifest)
                from dataclasses import replace as _replace

                candidate = _replace(head, sessions=candidate_sessions)
                report = planmate.validate_plan(candidate, profile, corpus.manifest)
                if not report.ok:
                    raise InvalidEdit(
                        "requested change produces an infeasible plan", report=report.to_json()
                    )
                proposal = AdaptationProposal(
                    proposal_id=proposal_id,
                    base_version=head.version,
                    ops=ops,
                    rationales=rationales,
                    created_at=now,
                )
            else:
                report = self._latest_report(plan_id)
                if report is None:
                    raise NotFound(f"plan {plan_id!r} has no quiz report to adapt from")
                logs = self._plan_logs(plan_id)
                signal = adaptmate.build_signal(report, logs, head, corpus.manifest, profile)
                proposal = adaptmate.propose_adaptation(
                    signal,
                    head,
                    corpus.manifest,
                    self.provider,
                    profile=profile,
                    proposal_id=proposal_id,
                    now=now,
                )
            self.store.append_event(plan_id, "proposal", proposal.to_json(), now=now)
            self.proposals[proposal.proposal_id] = proposal
        return proposal

    def decide(
        self,
        proposal_id: str,
        action: str,
        ops: list[dict] | None = None,
        rationales: list[str] | None = None,
    ) -> StudyPlan:
        with self._lock:
            proposal = self.proposals.get(proposal_id)
            if proposal is None:
                raise NotFound(f"proposal {proposal_id!r} not found")
            plan_id = proposal_id.rsplit("-prop", 1)[0]
            history = self._history(plan_id)
            profile = self._profile_for_plan(plan_id)
            corpus = self._corpus_for_plan(plan_id)
            decision = Decision(
                action=DecisionAction(action),
                decided_at=self.clock.now(),
                ops=tuple(adaptmate.op_from_json(o) for o in ops) if ops is not None else None,
                rationales=tuple(rationales) if rationales is not None else None,
            )
            before = len(history.versions)
            head = adaptmate.apply_decision(
                history,
                proposal,
                decision,
                profile=profile,
                manifest=corpus.manifest,
                now=self.clock.now(),
            )
            record = history.decisions[-1]
            persist_decision(self.store, plan_id, record.to_json(), now=record.decided_at)
            if len(history.versions) > before:
                persist_plan_version(self.store, head, now=head.created_at)
        return head

    def undo_plan(self, plan_id: str) -> StudyPlan:
        with self._lock:
            history = self._history(plan_id)
            head = adaptmate.undo(history, now=self.clock.now())
            record = history.decisions[-1]
            persist_decision(self.store, plan_id, record.to_json(), now=record.decided_at)
            persist_plan_version(self.store, head, now=head.created_at)
        return head


# --- stored-artifact rebuilding ------------------------------------------------


def _quiz_from_json(data: dict) -> QuizSpec:
    from .corpus import SegmentRef
    from .studymate import QuizQuestion

    return QuizSpec(
        quiz_id=data["quiz_id"],
        session_id=data["session_id"],
        questions=tuple(
            QuizQuestion(
                stem=q["stem"],
                options=tuple(q["options"]),
                correct_index=q["correct_index"],
                concept_tag=q["concept_tag"],
                source_refs=tuple(
                    SegmentRef(r["lesson_id"], r["cue_index"], r["start_s"], r["score"])
                    for r in q["source_refs"]
                ),
            )
            for q in data["questions"]
        ),
    )


def _result_from_json(data: dict) -> QuizResult:
    return QuizResult(
        quiz_id=data["quiz_id"],
        answers=tuple(data["answers"]),
        score_fraction=Fraction(data["score"]["correct"], max(1, data["score"]["total"])),
        per_concept={k: dict(v) for k, v in data["per_concept"].items()},
    )


def _report_from_json(data: dict) -> QuizReport:
    from .adaptmate import WeakConcept

    return QuizReport(
        quiz_id=data["quiz_id"],
        score_display=data["score_display"],
        correct=data["score"]["correct"],
        total=data["score"]["total"],
        weak_concepts=tuple(
            WeakConcept(w["concept_tag"], tuple(w["evidence"])) for w in data["weak_concepts"]
        ),
        narrative=data["narrative"],
    )
