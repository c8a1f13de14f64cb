"""Quiz analysis, adaptation signals, proposals, decisions, undo."""

from __future__ import annotations

import random
from dataclasses import replace
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from zoneinfo import ZoneInfo

import pytest

from learnmate.adaptmate import (
    AdaptationProposal,
    Decision,
    DecisionAction,
    OpKind,
    PlanHistory,
    PlanOp,
    analyze_quiz,
    apply_decision,
    apply_ops,
    build_signal,
    op_from_json,
    propose_adaptation,
    undo,
    weak_concepts_from,
)
from learnmate.core import Provenance, sessions_content_json
from learnmate.errors import (
    InvalidEdit,
    LineageMismatch,
    Mismatch,
    NothingToUndo,
    SchemaError,
    StaleProposal,
)
from learnmate.jsonutil import canonical_dumps, parse_utc, utc_isoformat
from learnmate.planmate import generate_plan
from learnmate.provider import ScriptedProvider
from learnmate.studymate import (
    EventKind,
    InteractionEvent,
    QuizQuestion,
    QuizSpec,
    end_session,
    score_quiz,
    start_session,
)

from oracles import plan_feasibility_problems
from synth import GOLDEN_ADAPT, SynthAgents

NOW = datetime(2025, 9, 1, 0, 0, 0, tzinfo=timezone.utc)
CHICAGO = ZoneInfo("America/Chicago")


@pytest.fixture()
def golden_plan(corpus, alex_profile, fill_provider):
    return generate_plan(alex_profile, corpus.manifest, fill_provider, plan_id="p1", now=NOW)


def spec_with_tags(tags: list[str]) -> QuizSpec:
    questions = tuple(
        QuizQuestion(f"q{i}", ("a", "b", "c", "d"), i % 4, tag, ())
        for i, tag in enumerate(tags)
    )
    return QuizSpec(quiz_id="qz", session_id="s1", questions=questions)


class TestAnalyzeQuiz:
    def test_three_of_seven_lists_three_areas(self, fill_provider):
        spec = spec_with_tags(["foragers", "foragers", "farmers", "farmers", "sources", "sources", "cases"])
        answers = [q.correct_index for q in spec.questions]
        # miss one farmers, one sources, one cases question -> 3 weak areas
        for i in (2, 4, 6):
            answers[i] = (answers[i] + 1) % 4
        result = score_quiz(spec, answers)
        assert result.correct == 4
        report = analyze_quiz(result, spec, [], fill_provider)
        assert len(report.weak_concepts) == 3
        assert {w.concept_tag for w in report.weak_concepts} == {"farmers", "sources", "cases"}
        assert report.weak_concepts[0].evidence  # indices of missed questions

    def test_perfect_result_has_no_weak_concepts(self, fill_provider):
        spec = spec_with_tags(["a-tag", "b-tag", "c-tag", "d-tag"])
        result = score_quiz(spec, [q.correct_index for q in spec.questions])
        report = analyze_quiz(result, spec, [], fill_provider)
        assert report.weak_concepts == ()
        assert "Perfect" in report.narrative

    def test_mismatched_result_rejected(self, fill_provider):
        spec = spec_with_tags(["x"] * 4)
        result = score_quiz(spec, [0, 1, 2, 3])
        other = replace(result, quiz_id="other")
        with pytest.raises(Mismatch):
            analyze_quiz(other, spec, [], fill_provider)

    def test_narrative_citing_non_weak_concept_is_rejected(self, corpus):
        spec = spec_with_tags(["alpha", "beta", "gamma", "delta"])
        answers = [q.correct_index for q in spec.questions]
        answers[0] = (answers[0] + 1) % 4  # only alpha is weak

        class ChattyAgents(SynthAgents):
            def _analysis(self, envelope):
                return {"narrative": "Work on alpha, and beta was great."}

        provider = ScriptedProvider(fill=ChattyAgents(corpus=corpus))
        with pytest.raises(SchemaError):
            analyze_quiz(score_quiz(spec, answers), spec, [], provider)

    def test_random_results_match_recount_oracle(self, fill_provider):
        rng = random.Random(11)
        for _ in range(50):
            tags = [rng.choice(["t1", "t2", "t3"]) for _ in range(4)]
            spec = spec_with_tags(tags)
            answers = [rng.randrange(0, 4) for _ in range(4)]
            weak = weak_concepts_from(score_quiz(spec, answers), spec)
            expected = {
                t
                for t in set(tags)
                if any(
                    a != q.correct_index and q.concept_tag == t
                    for q, a in zip(spec.questions, answers)
                )
            }
            assert {w.concept_tag for w in weak} == expected


def ended_event(session_id, outcome, elapsed, at):
    return InteractionEvent(at, session_id, EventKind.SESSION_ENDED, {"outcome": outcome, "elapsed_minutes": elapsed})


def asked_event(session_id, lesson, at):
    return InteractionEvent(
        at, session_id, EventKind.QUESTION_ASKED, {"question": "q", "top_lesson_id": lesson, "scope": "InScope"}
    )


class TestBuildSignal:
    def test_question_frequency_counts_by_lesson(self, golden_plan, corpus, alex_profile):
        logs = [asked_event("s1", "era2-overview", NOW + timedelta(seconds=i)) for i in range(5)]
        signal = build_signal(None, logs, golden_plan, corpus.manifest, alex_profile)
        assert signal.question_frequency == {"era2-overview": 5}

    def test_empty_logs_give_empty_signal_with_profile(self, golden_plan, corpus, alex_profile):
        signal = build_signal(None, [], golden_plan, corpus.manifest, alex_profile)
        assert signal.question_frequency == {}
        assert signal.completion == {}
        assert signal.studied_lessons == ()
        assert signal.profile_snapshot["learner_id"] == "alex"

    def test_foreign_session_raises_lineage_mismatch(self, golden_plan, corpus, alex_profile):
        logs = [asked_event("sX", "era2-overview", NOW)]
        with pytest.raises(LineageMismatch):
            build_signal(None, logs, golden_plan, corpus.manifest, alex_profile)

    def test_random_logs_match_event_fold_oracle(self, golden_plan, corpus, alex_profile):
        rng = random.Random(23)
        lesson_ids = list(corpus.manifest.lesson_index())
        session_ids = [s.session_id for s in golden_plan.sessions]
        for _ in range(40):
            logs = []
            t = NOW
            for _ in range(rng.randrange(0, 15)):
                t += timedelta(seconds=1)
                sid = rng.choice(session_ids)
                if rng.random() < 0.6:
                    logs.append(asked_event(sid, rng.choice(lesson_ids + [None]), t))
                else:
                    logs.append(
                        ended_event(sid, rng.choice(["completed", "abandoned"]), rng.randrange(0, 90), t)
                    )
            signal = build_signal(None, logs, golden_plan, corpus.manifest, alex_profile)

            freq = {}
            for e in logs:
                if e.kind is EventKind.QUESTION_ASKED and e.detail["top_lesson_id"]:
                    freq[e.detail["top_lesson_id"]] = freq.get(e.detail["top_lesson_id"], 0) + 1
            assert signal.question_frequency == freq

            last_end = {}
            for e in logs:
                if e.kind is EventKind.SESSION_ENDED:
                    last_end[e.session_id] = e
            assert set(signal.completion) == set(last_end)
            for sid, e in last_end.items():
                assert signal.completion[sid].outcome == e.detail["outcome"]
                assert signal.completion[sid].elapsed_minutes == e.detail["elapsed_minutes"]


class TestProposeAdaptation:
    def _signal(self, golden_plan, corpus, alex_profile, fill_provider):
        ctx = start_session(golden_plan, "s1", corpus, fill_provider, now=NOW)
        quiz = end_session(ctx, corpus, fill_provider, now=NOW + timedelta(minutes=30))
        wrong = [(q.correct_index + 1) % 4 for q in quiz.questions]
        result = score_quiz(quiz, wrong, ctx, now=NOW + timedelta(minutes=31))
        report = analyze_quiz(result, quiz, ctx.events, fill_provider)
        return build_signal(report, ctx.events, golden_plan, corpus.manifest, alex_profile)

    def test_weak_farming_yields_targeted_review_session(self, golden_plan, corpus, alex_profile):
        provider = ScriptedProvider(fill=SynthAgents(corpus=corpus, adapt_payload=GOLDEN_ADAPT))
        signal = self._signal(golden_plan, corpus, alex_profile, provider)
        proposal = propose_adaptation(
            signal, golden_plan, corpus.manifest, provider,
            profile=alex_profile, proposal_id="p1-prop1", now=NOW,
        )
        adds = [op for op in proposal.ops if op.kind is OpKind.ADD_SESSION]
        assert adds
        assert adds[0].session.objectives[0] == "Targeted Review: Food Surplus & The Rise of Farming"
        assert adds[0].session.lesson_ids == ("farming",)
        assert len(proposal.ops) == len(proposal.rationales)
        assert all(proposal.rationales)

    def test_empty_signal_short_circuits_without_agent_call(self, golden_plan, corpus, alex_profile):
        from test_planmate import CountingProvider

        provider = CountingProvider(ScriptedProvider(fill=SynthAgents(corpus=corpus)))
        logs = []
        t = NOW
        for s in golden_plan.sessions:
            t += timedelta(seconds=1)
            logs.append(ended_event(s.session_id, "completed", s.duration_minutes, t))
        signal = build_signal(None, logs, golden_plan, corpus.manifest, alex_profile)
        assert signal.is_empty()
        proposal = propose_adaptation(
            signal, golden_plan, corpus.manifest, provider,
            profile=alex_profile, proposal_id="p1-prop1", now=NOW,
        )
        assert proposal.ops == ()
        assert provider.by_agent["Adaptation"] == 0

    def test_random_agent_ops_yield_feasible_accepted_plans(self, golden_plan, corpus, alex_profile):
        rng = random.Random(501)
        free_days = [
            "2025-10-05", "2025-10-08", "2025-10-12", "2025-10-15",
            "2025-10-19", "2025-10-22", "2025-10-26", "2025-10-29",
        ]
        lesson_unit = corpus.manifest.unit_of_lesson()
        for round_no in range(30):
            days = list(free_days)
            rng.shuffle(days)
            ops = []
            for _ in range(rng.randrange(1, 4)):
                kind = rng.choice(["add_session", "move_session", "resize_session", "remove_session", "replace_content"])
                rationale = f"address weak concept farming (round {round_no})"
                if kind == "add_session":
                    lid = rng.choice(list(lesson_unit))
                    ops.append({
                        "kind": kind, "rationale": rationale, "day": days.pop(),
                        "start_time": "20:00", "duration_minutes": rng.choice([30, 45, 60]),
                        "unit_id": lesson_unit[lid], "lesson_ids": [lid],
                    })
                elif kind == "move_session":
                    ops.append({
                        "kind": kind, "rationale": rationale,
                        "session_id": rng.choice(["s3", "s4", "s5", "s6"]),
                        "day": days.pop(), "start_time": "20:00",
                    })
                elif kind == "resize_session":
                    ops.append({
                        "kind": kind, "rationale": rationale,
                        "session_id": rng.choice(["s2", "s3", "s4"]),
                        "duration_minutes": rng.choice([15, 30, 45]),
                    })
                elif kind == "remove_session":
                    ops.append({"kind": kind, "rationale": rationale, "session_id": "s6"})
                else:
                    lid = rng.choice(list(lesson_unit))
                    ops.append({
                        "kind": kind, "rationale": rationale, "session_id": "s5",
                        "lesson_ids": [lid],
                    })
            provider = ScriptedProvider(
                fill=SynthAgents(corpus=corpus, adapt_payload={"ops": ops})
            )
            signal = self._signal(golden_plan, corpus, alex_profile, provider)
            proposal = propose_adaptation(
                signal, golden_plan, corpus.manifest, provider,
                profile=alex_profile, proposal_id=f"p1-prop{round_no}", now=NOW,
            )
            history = PlanHistory("p1", versions=[golden_plan])
            head = apply_decision(
                history, proposal, Decision(DecisionAction.ACCEPT, NOW),
                profile=alex_profile, manifest=corpus.manifest, now=NOW,
            )
            assert plan_feasibility_problems(head, alex_profile, corpus.manifest) == []


def single_add_proposal(golden_plan, base_version=0, created_at=NOW) -> AdaptationProposal:
    from learnmate.core import PlannedSession

    session = PlannedSession(
        session_id="s7",
        start=datetime(2025, 9, 28, 20, 0, tzinfo=CHICAGO),
        end=datetime(2025, 9, 28, 20, 45, tzinfo=CHICAGO),
        timezone="America/Chicago",
        unit_id="2.1",
        lesson_ids=("farming",),
        objectives=("Targeted Review: Food Surplus & The Rise of Farming",),
    )
    return AdaptationProposal(
        proposal_id="p1-prop1",
        base_version=base_version,
        ops=(PlanOp(kind=OpKind.ADD_SESSION, session=session),),
        rationales=("missed farming, add review",),
        created_at=created_at,
    )


class TestApplyDecision:
    def test_accept_increments_version_with_parent(self, golden_plan, corpus, alex_profile):
        history = PlanHistory("p1", versions=[golden_plan])
        head = apply_decision(
            history, single_add_proposal(golden_plan), Decision(DecisionAction.ACCEPT, NOW),
            profile=alex_profile, manifest=corpus.manifest, now=NOW,
        )
        assert head.version == 1
        assert head.parent_version == 0
        assert head.provenance is Provenance.ADAPTED
        assert len(head.sessions) == 7
        assert history.decisions[-1].action == "accept"

    def test_reject_is_a_noop_on_content(self, golden_plan, corpus, alex_profile):
        history = PlanHistory("p1", versions=[golden_plan])
        before = canonical_dumps(sessions_content_json(history.head))
        head = apply_decision(
            history, single_add_proposal(golden_plan), Decision(DecisionAction.REJECT, NOW),
            profile=alex_profile, manifest=corpus.manifest, now=NOW,
        )
        assert head.version == 0
        assert canonical_dumps(sessions_content_json(head)) == before
        assert history.decisions[-1].action == "reject"
        assert len(history.versions) == 1

    def test_modify_equals_naive_interpreter(self, golden_plan, corpus, alex_profile):
        # proposal with two ops; learner drops the second (a resize of s6)
        proposal = AdaptationProposal(
            proposal_id="p1-prop1",
            base_version=0,
            ops=(
                single_add_proposal(golden_plan).ops[0],
                PlanOp(
                    kind=OpKind.RESIZE_SESSION,
                    session_id="s6",
                    new_end=golden_plan.sessions[-1].start + timedelta(minutes=45),
                ),
            ),
            rationales=("missed farming, add review", "shorten s6 for balance"),
            created_at=NOW,
        )
        history = PlanHistory("p1", versions=[golden_plan])
        edited = proposal.ops[:1]
        head = apply_decision(
            history,
            proposal,
            Decision(DecisionAction.MODIFY, NOW, ops=edited, rationales=("missed farming, add review",)),
            profile=alex_profile, manifest=corpus.manifest, now=NOW,
        )

        # naive dict-level interpreter over serialized sessions
        base = sessions_content_json(golden_plan)
        naive = list(base)
        for op in edited:
            doc = op.to_json()
            if doc["kind"] == "AddSession":
                naive.append(doc["session"])
        naive.sort(key=lambda s: (parse_utc(s["start"]), s["session_id"]))
        assert canonical_dumps(sessions_content_json(head)) == canonical_dumps(naive)

    def test_modify_with_infeasible_edit_rejected_atomically(self, golden_plan, corpus, alex_profile):
        history = PlanHistory("p1", versions=[golden_plan])
        bad_move = PlanOp(
            kind=OpKind.MOVE_SESSION,
            session_id="s2",
            new_start=golden_plan.sessions[0].start,  # collide with s1
            new_end=golden_plan.sessions[0].end,
        )
        with pytest.raises(InvalidEdit) as excinfo:
            apply_decision(
                history,
                single_add_proposal(golden_plan),
                Decision(DecisionAction.MODIFY, NOW, ops=(bad_move,), rationales=("x",)),
                profile=alex_profile, manifest=corpus.manifest, now=NOW,
            )
        assert excinfo.value.report is not None
        assert len(history.versions) == 1  # nothing applied

    def test_stale_proposal_rejected(self, golden_plan, corpus, alex_profile):
        history = PlanHistory("p1", versions=[golden_plan])
        proposal = single_add_proposal(golden_plan)
        apply_decision(
            history, proposal, Decision(DecisionAction.ACCEPT, NOW),
            profile=alex_profile, manifest=corpus.manifest, now=NOW,
        )
        with pytest.raises(StaleProposal):
            apply_decision(
                history, proposal, Decision(DecisionAction.ACCEPT, NOW),
                profile=alex_profile, manifest=corpus.manifest, now=NOW,
            )

    def test_past_sessions_are_immutable(self, golden_plan, corpus, alex_profile):
        history = PlanHistory("p1", versions=[golden_plan])
        late = datetime(2025, 10, 30, tzinfo=timezone.utc)  # after every session
        proposal = AdaptationProposal(
            proposal_id="p1-prop1",
            base_version=0,
            ops=(PlanOp(kind=OpKind.REMOVE_SESSION, session_id="s1"),),
            rationales=("drop s1",),
            created_at=late,
        )
        with pytest.raises(InvalidEdit):
            apply_decision(
                history, proposal, Decision(DecisionAction.ACCEPT, late),
                profile=alex_profile, manifest=corpus.manifest, now=late,
            )


class TestUndo:
    def test_undo_restores_parent_content_bytes(self, golden_plan, corpus, alex_profile):
        history = PlanHistory("p1", versions=[golden_plan])
        apply_decision(
            history, single_add_proposal(golden_plan), Decision(DecisionAction.ACCEPT, NOW),
            profile=alex_profile, manifest=corpus.manifest, now=NOW,
        )
        head = undo(history, now=NOW)
        assert head.version == 2
        assert head.parent_version == 1
        assert head.provenance is Provenance.UNDO
        assert canonical_dumps(sessions_content_json(head)) == canonical_dumps(
            sessions_content_json(golden_plan)
        )

    def test_undo_on_initial_version_fails(self, golden_plan):
        history = PlanHistory("p1", versions=[golden_plan])
        with pytest.raises(NothingToUndo):
            undo(history, now=NOW)

    def test_accept_undo_accept_is_stale(self, golden_plan, corpus, alex_profile):
        history = PlanHistory("p1", versions=[golden_plan])
        proposal = single_add_proposal(golden_plan)
        apply_decision(
            history, proposal, Decision(DecisionAction.ACCEPT, NOW),
            profile=alex_profile, manifest=corpus.manifest, now=NOW,
        )
        undo(history, now=NOW)
        with pytest.raises(StaleProposal):
            apply_decision(
                history, proposal, Decision(DecisionAction.ACCEPT, NOW),
                profile=alex_profile, manifest=corpus.manifest, now=NOW,
            )

    def test_undo_of_undo_restores_adapted_content(self, golden_plan, corpus, alex_profile):
        history = PlanHistory("p1", versions=[golden_plan])
        apply_decision(
            history, single_add_proposal(golden_plan), Decision(DecisionAction.ACCEPT, NOW),
            profile=alex_profile, manifest=corpus.manifest, now=NOW,
        )
        v1 = history.head
        undo(history, now=NOW)
        head = undo(history, now=NOW)
        assert head.version == 3
        assert canonical_dumps(sessions_content_json(head)) == canonical_dumps(
            sessions_content_json(v1)
        )


class TestOpSerialization:
    def test_ops_round_trip_json(self, golden_plan):
        proposal = single_add_proposal(golden_plan)
        for op in proposal.ops:
            again = op_from_json(op.to_json())
            assert canonical_dumps(again.to_json()) == canonical_dumps(op.to_json())

    def test_apply_ops_rejects_unknown_targets(self, golden_plan, corpus):
        with pytest.raises(InvalidEdit):
            apply_ops(
                golden_plan.sessions,
                (PlanOp(kind=OpKind.REMOVE_SESSION, session_id="sZZ"),),
                corpus.manifest,
            )
