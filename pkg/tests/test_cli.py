"""CLI behavior: exit codes, formats, scripted-mode determinism hooks."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

import learnmate.cli as cli_module
from learnmate.provider import ScriptedProvider

from conftest import FIXTURES, load_course_corpus
from synth import GOLDEN_ADAPT, GOLDEN_QUIZ, SynthAgents


@pytest.fixture()
def runner(tmp_path, monkeypatch, corpus):
    provider = ScriptedProvider(
        fill=SynthAgents(corpus=corpus, quiz_payload=GOLDEN_QUIZ, adapt_payload=GOLDEN_ADAPT)
    )
    monkeypatch.setattr(cli_module, "scripted_load", lambda path: provider)
    stub = tmp_path / "stub.json"
    stub.write_text("{}")
    cli_runner = CliRunner()

    def invoke(*args):
        return cli_runner.invoke(
            cli_module.main,
            ["--data-dir", str(tmp_path / "data"), "--script", str(stub), *args],
            catch_exceptions=False,
        )

    invoke.data_dir = tmp_path / "data"
    return invoke


def setup_course_and_plan(invoke):
    assert invoke("ingest", "--manifest", str(FIXTURES / "course" / "manifest.json")).exit_code == 0
    result = invoke(
        "plan", "--profile", str(FIXTURES / "profile_alex.json"),
        "--course", "world-history-project",
    )
    assert result.exit_code == 0, result.output
    return result


class TestExitCodes:
    def test_missing_manifest_path_is_exit_1(self, runner):
        result = runner("ingest", "--manifest", "/nonexistent/manifest.json")
        assert result.exit_code == 1

    def test_profile_without_availability_is_exit_2(self, runner, tmp_path):
        runner("ingest", "--manifest", str(FIXTURES / "course" / "manifest.json"))
        profile = json.loads((FIXTURES / "profile_alex.json").read_text())
        profile["availability"] = []
        bad = tmp_path / "bad_profile.json"
        bad.write_text(json.dumps(profile))
        result = runner("plan", "--profile", str(bad), "--course", "world-history-project")
        assert result.exit_code == 2
        assert "NoAvailability" in result.stderr

    def test_quiz_answer_length_mismatch_is_exit_2(self, runner, tmp_path):
        setup_course_and_plan(runner)
        questions = {"questions": [], "quiz_answers": [0]}
        qfile = tmp_path / "short.json"
        qfile.write_text(json.dumps(questions))
        result = runner("simulate", "--plan", "p1", "--session", "s1", "--questions", str(qfile))
        assert result.exit_code == 2
        assert "LengthMismatch" in result.stderr

    def test_simulate_on_completed_session_is_exit_2(self, runner):
        setup_course_and_plan(runner)
        qfile = FIXTURES / "golden_questions.json"
        first = runner("simulate", "--plan", "p1", "--session", "s1", "--questions", str(qfile))
        assert first.exit_code == 0, first.output
        second = runner("simulate", "--plan", "p1", "--session", "s1", "--questions", str(qfile))
        assert second.exit_code == 2
        assert "IllegalTransition" in second.stderr

    def test_unknown_plan_is_exit_2(self, runner):
        runner("ingest", "--manifest", str(FIXTURES / "course" / "manifest.json"))
        result = runner("history", "--plan", "p9")
        assert result.exit_code == 2
        assert "NotFound" in result.stderr

    def test_missing_script_file_is_exit_1(self, tmp_path, corpus):
        cli_runner = CliRunner()
        result = cli_runner.invoke(
            cli_module.main,
            ["--data-dir", str(tmp_path), "--script", str(tmp_path / "nope.json"), "history", "--plan", "p1"],
        )
        assert result.exit_code == 1


class TestOutputs:
    def test_plan_prints_id_and_session_count(self, runner):
        result = setup_course_and_plan(runner)
        assert "plan p1 created: 6 sessions" in result.output

    def test_json_format_is_canonical(self, runner, tmp_path, monkeypatch, corpus):
        setup_course_and_plan(runner)
        provider = ScriptedProvider(fill=SynthAgents(corpus=corpus))
        monkeypatch.setattr(cli_module, "scripted_load", lambda path: provider)
        stub = tmp_path / "stub.json"
        cli_runner = CliRunner()
        result = cli_runner.invoke(
            cli_module.main,
            [
                "--data-dir", str(runner.data_dir), "--script", str(stub),
                "--format", "json", "history", "--plan", "p1",
            ],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["history"][0]["version"] == 0

    def test_export_ics_writes_crlf_bytes(self, runner, tmp_path):
        setup_course_and_plan(runner)
        out = tmp_path / "plan.ics"
        result = runner("export-ics", "--plan", "p1", "-o", str(out))
        assert result.exit_code == 0
        data = out.read_bytes()
        assert data.startswith(b"BEGIN:VCALENDAR\r\n")
        assert b"SUMMARY:Unit 2.1: Cities\\, Societies\\, and Empires" in data

    def test_simulate_prints_digest(self, runner):
        setup_course_and_plan(runner)
        result = runner(
            "simulate", "--plan", "p1", "--session", "s1",
            "--questions", str(FIXTURES / "golden_questions.json"),
        )
        assert result.exit_code == 0
        assert "Session s1 digest:" in result.output
        assert "score: 50.0% (2/4)" in result.output

    def test_adapt_reject_leaves_head(self, runner):
        setup_course_and_plan(runner)
        runner(
            "simulate", "--plan", "p1", "--session", "s1",
            "--questions", str(FIXTURES / "golden_questions.json"),
        )
        result = runner("adapt", "--plan", "p1", "--reject")
        assert result.exit_code == 0
        assert "rejected: head is now v0" in result.output
