"""Shared fixtures: the World History corpus, Alex's profile, fill providers."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "deterministic",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")

from learnmate.core import profile_from_json  # noqa: E402
from learnmate.corpus import Corpus, parse_manifest, parse_transcript  # noqa: E402
from learnmate.provider import ScriptedProvider  # noqa: E402

from synth import SynthAgents  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
COURSE_DIR = FIXTURES / "course"


def load_course_corpus() -> Corpus:
    manifest = parse_manifest((COURSE_DIR / "manifest.json").read_bytes())
    corpus = Corpus(manifest=manifest)
    for lesson in manifest.lesson_index().values():
        path = COURSE_DIR / lesson.transcript_ref
        corpus.transcripts[lesson.lesson_id] = parse_transcript(
            path.read_bytes(), lesson.lesson_id
        )
    return corpus


@pytest.fixture(scope="session")
def corpus() -> Corpus:
    return load_course_corpus()


@pytest.fixture()
def alex_profile():
    import json

    return profile_from_json(json.loads((FIXTURES / "profile_alex.json").read_text()))


@pytest.fixture()
def fill_provider(corpus):
    """Scripted provider that synthesizes-and-records golden-style responses."""
    return ScriptedProvider(fill=SynthAgents(corpus=corpus))
