"""Seeded random generators for profiles, manifests, and cooperative drafts."""

from __future__ import annotations

import random
from datetime import date, time, timedelta, timezone, datetime

from learnmate.core import LearnerProfile, Pace, PathMode, WeeklyWindow
from learnmate.corpus import CourseManifest, Lesson, Unit

ZONES = ["UTC", "America/Chicago", "Europe/Berlin"]
WEEKDAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


def random_profile(rng: random.Random) -> LearnerProfile:
    windows = []
    zone = rng.choice(ZONES)
    for _ in range(rng.randrange(1, 5)):
        start_minutes = rng.randrange(6 * 60, 20 * 60, 15)
        length = rng.choice([30, 45, 60, 90, 120, 180])
        end_minutes = min(start_minutes + length, 23 * 60 + 45)
        windows.append(
            WeeklyWindow(
                weekday=rng.randrange(0, 7),
                start_time=time(start_minutes // 60, start_minutes % 60),
                end_time=time(end_minutes // 60, end_minutes % 60),
                timezone=zone,
            )
        )
    return LearnerProfile(
        learner_id=f"learner-{rng.randrange(1000)}",
        goals_text="finish the course",
        target_date=None,
        availability=tuple(windows),
        pace=rng.choice(list(Pace)),
        max_session_minutes=rng.choice([30, 45, 60, 90]),
        path_mode=PathMode.SEQUENTIAL,
        path_unit_ids=(),
    )


def random_manifest(rng: random.Random) -> CourseManifest:
    units = []
    lesson_counter = 0
    for u in range(rng.randrange(1, 4)):
        lessons = []
        for _ in range(rng.randrange(1, 5)):
            lesson_counter += 1
            lessons.append(
                Lesson(
                    lesson_id=f"lesson-{lesson_counter}",
                    title=f"Lesson {lesson_counter}",
                    transcript_ref=f"lesson-{lesson_counter}.vtt",
                    est_minutes=rng.choice([10, 20, 30, 45]),
                )
            )
        units.append(
            Unit(unit_id=f"unit-{u + 1}", title=f"Unit {u + 1}", order=u + 1, lessons=tuple(lessons))
        )
    return CourseManifest(course_id="random-course", title="Random Course", units=tuple(units))


def cooperative_draft(
    rng: random.Random, profile: LearnerProfile, manifest: CourseManifest, start: date
) -> dict:
    """A draft whose lesson order follows the manifest; times are arbitrary.

    Materialization and repair must cope with any requested times, but a
    cooperative planner never proposes out-of-order or unknown content.
    """
    ordered = [
        (u.unit_id, lesson.lesson_id)
        for u in sorted(manifest.units, key=lambda u: u.order)
        for lesson in u.lessons
    ]
    sessions = []
    cursor = 0
    while cursor < len(ordered) and len(sessions) < rng.randrange(2, 9):
        unit_id, _ = ordered[cursor]
        chunk = [ordered[cursor][1]]
        cursor += 1
        while (
            cursor < len(ordered)
            and ordered[cursor][0] == unit_id
            and rng.random() < 0.4
        ):
            chunk.append(ordered[cursor][1])
            cursor += 1
        if rng.random() < 0.5:
            day = rng.choice(WEEKDAY_NAMES)
        else:
            day = (start + timedelta(days=rng.randrange(0, 28))).isoformat()
        sessions.append(
            {
                "day": day,
                "start_time": f"{rng.randrange(6, 22):02d}:{rng.choice(['00', '15', '30', '45'])}",
                "duration_minutes": rng.choice([15, 30, 45, 60, 90, 120]),
                "unit_id": unit_id,
                "lesson_ids": chunk,
                "objectives": [f"cover {', '.join(chunk)}"],
                "tips": [],
            }
        )
    return {
        "week_blocks": [{"label": "Week 1", "narrative": "work through the units"}],
        "proposed_sessions": sessions,
    }


def random_triple(rng: random.Random):
    profile = random_profile(rng)
    manifest = random_manifest(rng)
    start = date(2025, 9, 1) + timedelta(days=rng.randrange(0, 21))
    draft = cooperative_draft(rng, profile, manifest, start)
    return profile, manifest, start, draft
