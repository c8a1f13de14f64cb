"""End-to-end workflow through the engine facade, including restarts."""

from __future__ import annotations

import json

import pytest

from learnmate.clock import DEFAULT_SCRIPTED_START, TickingClock
from learnmate.engine import Engine
from learnmate.errors import (
    IllegalState,
    IllegalTransition,
    InvalidEdit,
    NotFound,
    StaleProposal,
    ValidationFailed,
)
from learnmate.provider import ScriptedProvider
from learnmate.studymate import ScopeFlag, SessionState, Tier

from conftest import COURSE_DIR, FIXTURES
from synth import GOLDEN_ADAPT, SynthAgents


@pytest.fixture()
def engine(tmp_path, corpus):
    provider = ScriptedProvider(fill=SynthAgents(corpus=corpus, adapt_payload=GOLDEN_ADAPT))
    eng = Engine(tmp_path, provider, TickingClock(DEFAULT_SCRIPTED_START))
    eng.ingest_course(COURSE_DIR / "manifest.json")
    eng.create_profile(json.loads((FIXTURES / "profile_alex.json").read_text()))
    return eng


class TestPlanningFlow:
    def test_create_plan_and_export(self, engine):
        plan = engine.create_plan("alex", "world-history-project")
        assert plan.plan_id == "p1"
        assert len(plan.sessions) == 6
        ics = engine.plan_ics("p1")
        assert ics.startswith(b"BEGIN:VCALENDAR\r\n")
        assert b"p1-v0-s1@learnmate" in ics
        history = engine.plan_history("p1")
        assert [h["version"] for h in history] == [0]

    def test_unknown_learner_or_course(self, engine):
        with pytest.raises(NotFound):
            engine.create_plan("nobody", "world-history-project")
        with pytest.raises(NotFound):
            engine.create_plan("alex", "no-course")

    def test_invalid_profile_rejected_with_report(self, engine):
        bad = json.loads((FIXTURES / "profile_alex.json").read_text())
        bad["pace"]["max_session_minutes"] = 5
        with pytest.raises(ValidationFailed) as excinfo:
            engine.create_profile(bad)
        assert excinfo.value.detail["ok"] is False


class TestSessionFlow:
    def test_full_study_loop(self, engine):
        engine.create_plan("alex", "world-history-project")
        ctx = engine.start_session("s1")
        assert ctx.state is SessionState.ACTIVE
        answer = engine.ask_question("s1", "How did the New Stone Age society form?")
        assert answer.scope_flag is ScopeFlag.IN_SCOPE
        engine.expand_answer("s1", answer.answer_id, Tier.MORE_DETAILS)
        quiz = engine.end_session("s1")
        assert len(quiz.questions) == 4
        result, report = engine.submit_quiz("s1", [1, 2, 1, 0])
        assert result.total == 4
        assert report.quiz_id == quiz.quiz_id
        digest = engine.session_digest("s1")
        assert "Quiz score" in digest.text
        stored = engine.quiz_report("s1")
        assert stored.narrative == report.narrative

    def test_one_active_session_per_learner(self, engine):
        engine.create_plan("alex", "world-history-project")
        engine.start_session("s1")
        with pytest.raises(IllegalState):
            engine.start_session("s2")
        engine.abandon_session("s1")
        assert engine.start_session("s2").state is SessionState.ACTIVE

    def test_session_state_survives_restart(self, tmp_path, corpus):
        provider = ScriptedProvider(fill=SynthAgents(corpus=corpus))
        eng1 = Engine(tmp_path, provider, TickingClock(DEFAULT_SCRIPTED_START))
        eng1.ingest_course(COURSE_DIR / "manifest.json")
        eng1.create_profile(json.loads((FIXTURES / "profile_alex.json").read_text()))
        eng1.create_plan("alex", "world-history-project")
        eng1.start_session("s1")
        eng1.end_session("s1")
        eng1.submit_quiz("s1", [0, 1, 2, 3])

        eng2 = Engine(tmp_path, provider, TickingClock(DEFAULT_SCRIPTED_START))
        with pytest.raises(IllegalTransition):
            eng2.start_session("s1")
        digest = eng2.session_digest("s1")
        assert digest.summary["completed"] is True
        # untouched sessions still start normally after a restart
        ctx = eng2.start_session("s2")
        assert ctx.state is SessionState.ACTIVE
        assert ctx.history_lesson_ids == ("era2-overview",)


class TestAdaptationFlow:
    def _complete_session(self, engine):
        engine.create_plan("alex", "world-history-project")
        engine.start_session("s1")
        engine.ask_question("s1", "Why did farming create food surpluses?")
        engine.end_session("s1")
        engine.submit_quiz("s1", [1, 2, 1, 0])

    def test_propose_accept_undo(self, engine):
        self._complete_session(engine)
        proposal = engine.propose_adaptation("p1")
        assert proposal.proposal_id == "p1-prop1"
        assert proposal.ops
        head = engine.decide("p1-prop1", "accept")
        assert head.version == 1
        assert any(s.session_id == "s7" for s in head.sessions)
        undone = engine.undo_plan("p1")
        assert undone.version == 2
        history = engine.plan_history("p1")
        assert [h["provenance"] for h in history] == ["initial", "adapted", "undo"]

    def test_stale_decision_after_undo(self, engine):
        self._complete_session(engine)
        engine.propose_adaptation("p1")
        engine.decide("p1-prop1", "accept")
        engine.undo_plan("p1")
        with pytest.raises(StaleProposal):
            engine.decide("p1-prop1", "accept")

    def test_manual_single_op_proposal(self, engine):
        self._complete_session(engine)
        # s6 is a review session (repeat content), so moving it cannot break
        # the sequential-order rule
        move = {
            "kind": "MoveSession",
            "session_id": "s6",
            "new_start": "2025-10-05T20:00:00-05:00",
            "new_end": "2025-10-05T21:00:00-05:00",
        }
        proposal = engine.propose_adaptation("p1", [move], ["moved by learner drag"])
        head = engine.decide(proposal.proposal_id, "modify", ops=[move], rationales=["moved by learner drag"])
        assert head.version == 1
        moved = next(s for s in head.sessions if s.session_id == "s6")
        assert moved.start.isoformat().startswith("2025-10-05T20:00")

    def test_manual_proposal_to_invalid_slot_is_rejected(self, engine):
        self._complete_session(engine)
        move = {
            "kind": "MoveSession",
            "session_id": "s3",
            "new_start": "2025-10-06T09:00:00-05:00",  # Monday: no window
            "new_end": "2025-10-06T10:00:00-05:00",
        }
        with pytest.raises(InvalidEdit) as excinfo:
            engine.propose_adaptation("p1", [move], ["bad drag"])
        assert excinfo.value.report["ok"] is False

    def test_adaptation_without_quiz_report_is_not_found(self, engine):
        engine.create_plan("alex", "world-history-project")
        with pytest.raises(NotFound):
            engine.propose_adaptation("p1")

    def test_proposals_survive_restart(self, tmp_path, corpus, engine):
        self._complete_session(engine)
        engine.propose_adaptation("p1")
        fresh = Engine(
            engine.data_dir,
            ScriptedProvider(fill=SynthAgents(corpus=corpus, adapt_payload=GOLDEN_ADAPT)),
            TickingClock(DEFAULT_SCRIPTED_START),
        )
        head = fresh.decide("p1-prop1", "accept")
        assert head.version == 1
