"""Two-stage plan generation with a feasibility-guaranteeing repair loop.

Stage 1 asks the planner agent for a draft (weekday- or date-anchored
sessions).  Stage 2 is deterministic: drafts are materialized onto real
availability windows (first-fit, earliest window on or after the start
date), validated, and repaired.  Deterministic fixes run before any
repair-agent consultation so cheap problems never cost a model call.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, datetime, time, timedelta
from zoneinfo import ZoneInfo

from .core import (
    DEFAULT_HORIZON_WEEKS,
    MIN_SESSION_MINUTES,
    WEEKDAY_NAMES,
    LearnerProfile,
    Pace,
    PathMode,
    PlannedSession,
    Provenance,
    StudyPlan,
    TimeWindow,
    ValidationReport,
    Violation,
    ViolationCode,
    normalize_availability,
)
from .corpus import CourseManifest
from .errors import NoAvailability, RepairExhausted
from .ics import CalendarEvent
from .jsonutil import canonical_dumps
from .provider import ContextBlock, ModelProvider, PromptEnvelope, complete

# Pace level -> (target share of weekly availability, default session minutes).
PACE_HINTS: dict[Pace, tuple[float, int]] = {
    Pace.RELAXED: (0.5, 30),
    Pace.STANDARD: (0.7, 45),
    Pace.INTENSIVE: (0.9, 60),
}

MAX_REPAIR_ROUNDS = 3


@dataclass(frozen=True)
class WeekBlock:
    label: str
    narrative: str


@dataclass(frozen=True)
class DraftSession:
    day: str  # "mon".."sun" or "YYYY-MM-DD"
    start_time: time
    duration_minutes: int
    unit_id: str
    lesson_ids: tuple[str, ...]
    objectives: tuple[str, ...] = ()
    tips: tuple[str, ...] = ()


@dataclass(frozen=True)
class PlanDraft:
    week_blocks: tuple[WeekBlock, ...]
    proposed_sessions: tuple[DraftSession, ...]


def draft_from_payload(payload: dict) -> PlanDraft:
    return PlanDraft(
        week_blocks=tuple(
            WeekBlock(b["label"], b["narrative"]) for b in payload.get("week_blocks", [])
        ),
        proposed_sessions=tuple(
            DraftSession(
                day=s["day"],
                start_time=time.fromisoformat(s["start_time"]),
                duration_minutes=int(s["duration_minutes"]),
                unit_id=s["unit_id"],
                lesson_ids=tuple(s["lesson_ids"]),
                objectives=tuple(s.get("objectives") or ()),
                tips=tuple(s.get("tips") or ()),
            )
            for s in payload.get("proposed_sessions", [])
        ),
    )


# --- prompt assembly --------------------------------------------------------


def _profile_brief(profile: LearnerProfile) -> str:
    share, default_minutes = PACE_HINTS[profile.pace]
    windows = "; ".join(
        f"{WEEKDAY_NAMES[w.weekday]} {w.start_time:%H:%M}-{w.end_time:%H:%M} ({w.timezone})"
        for w in profile.availability
    )
    path = (
        "sequential (manifest order)"
        if profile.path_mode is PathMode.SEQUENTIAL
        else "custom unit order: " + " > ".join(profile.path_unit_ids)
    )
    target = f" by {profile.target_date.isoformat()}" if profile.target_date else ""
    return (
        f"Goals: {profile.goals_text}{target}\n"
        f"Weekly availability: {windows or 'none'}\n"
        f"Pace: {profile.pace.value} (plan about {int(share * 100)}% of available time; "
        f"default session length {min(default_minutes, profile.max_session_minutes)} min; "
        f"never exceed {profile.max_session_minutes} min per session)\n"
        f"Path: {path}"
    )


def build_planner_envelope(
    profile: LearnerProfile,
    manifest: CourseManifest,
    start_date: date,
    horizon_weeks: int,
) -> PromptEnvelope:
    system = (
        "You plan self-paced study schedules. Reply with JSON only, matching the "
        "requested schema: week_blocks (label + narrative per week) and "
        "proposed_sessions (day as mon..sun or YYYY-MM-DD, start_time HH:MM, "
        "duration_minutes, unit_id, lesson_ids, objectives, tips). Sessions must "
        "respect the learner's stated availability, pace, and path order."
    )
    user = (
        f"Create a study plan starting {start_date.isoformat()} covering up to "
        f"{horizon_weeks} weeks.\n{_profile_brief(profile)}"
    )
    return PromptEnvelope(
        agent="Planner",
        system_text=system,
        user_text=user,
        context_blocks=(ContextBlock("course_outline", manifest.outline()),),
        response_schema_id="plan_draft.v1",
    )


def build_repair_envelope(
    plan: StudyPlan,
    report: ValidationReport,
    profile: LearnerProfile,
    manifest: CourseManifest,
) -> PromptEnvelope:
    system = (
        "You fix infeasible study schedules. Reply with JSON only (same schema as "
        "plan drafts: week_blocks, proposed_sessions). Resolve every listed "
        "violation while changing as little as possible."
    )
    sessions = [
        {
            "session_id": s.session_id,
            "day": s.start.date().isoformat(),
            "start_time": s.start.strftime("%H:%M"),
            "duration_minutes": s.duration_minutes,
            "unit_id": s.unit_id,
            "lesson_ids": list(s.lesson_ids),
        }
        for s in plan.sessions
    ]
    return PromptEnvelope(
        agent="PlanRepair",
        system_text=system,
        user_text="Repair this schedule.\n" + _profile_brief(profile),
        context_blocks=(
            ContextBlock("current_sessions", canonical_dumps(sessions)),
            ContextBlock("violations", canonical_dumps(report.to_json())),
            ContextBlock("course_outline", manifest.outline()),
        ),
        response_schema_id="plan_draft.v1",
    )


# --- window placement --------------------------------------------------------


def _local_date(window: TimeWindow) -> date:
    return window.start.date()


def _gaps(window: TimeWindow, occupied: list[tuple[datetime, datetime]]):
    """Free sub-intervals of a window, given globally occupied intervals."""
    cursor = window.start
    for o_start, o_end in sorted(occupied):
        if o_end <= cursor or o_start >= window.end:
            continue
        if o_start > cursor:
            yield cursor, min(o_start, window.end)
        cursor = max(cursor, o_end)
        if cursor >= window.end:
            return
    if cursor < window.end:
        yield cursor, window.end


def _fit_in_window(
    window: TimeWindow,
    occupied: list[tuple[datetime, datetime]],
    preferred_start: datetime | None,
    duration: timedelta,
    allow_shrink: bool,
    not_before: datetime | None = None,
) -> tuple[datetime, datetime] | None:
    """Fit at the preferred instant (when given) or the earliest free gap."""
    min_len = timedelta(minutes=MIN_SESSION_MINUTES)
    for gap_start, gap_end in _gaps(window, occupied):
        if not_before is not None:
            gap_start = max(gap_start, not_before)
            if gap_start >= gap_end:
                continue
        if preferred_start is not None:
            if not gap_start <= preferred_start < gap_end:
                continue
            room = gap_end - preferred_start
            if room >= duration:
                return preferred_start, preferred_start + duration
            if allow_shrink and room >= min_len:
                return preferred_start, gap_end
            return None
        room = gap_end - gap_start
        if room >= duration:
            return gap_start, gap_start + duration
        if allow_shrink and room >= min_len:
            return gap_start, gap_end
    return None


def place_session(
    windows: tuple[TimeWindow, ...],
    occupied: list[tuple[datetime, datetime]],
    day: str,
    start_time: time | None,
    duration_minutes: int,
    max_session_minutes: int,
    not_before: datetime | None = None,
    day_is_firm: bool = True,
) -> tuple[datetime, datetime, str] | None:
    """First-fit a session into availability; returns (start, end, tz) or None.

    Preference order: the requested wall-clock time in any matching window,
    then the earliest free gap, then the same two with the session shrunk
    to the gap (never below the 15-minute floor).  With ``day_is_firm``
    off, a final fallback ignores the requested day entirely.
    """
    duration = timedelta(minutes=max(MIN_SESSION_MINUTES, min(duration_minutes, max_session_minutes)))
    try:
        wanted_date: date | None = date.fromisoformat(day)
        wanted_weekday: int | None = None
    except ValueError:
        wanted_date = None
        if day not in WEEKDAY_NAMES:
            return None
        wanted_weekday = WEEKDAY_NAMES.index(day)

    def candidates(any_day: bool):
        for w in windows:
            if not any_day:
                d = _local_date(w)
                if wanted_date is not None and d != wanted_date:
                    continue
                if wanted_weekday is not None and d.weekday() != wanted_weekday:
                    continue
            yield w

    passes: list[tuple[bool, bool, bool]] = [
        (True, False, False),
        (False, False, False),
        (True, True, False),
        (False, True, False),
    ]
    if not day_is_firm:
        passes += [(False, False, True), (False, True, True)]
    for use_preferred, allow_shrink, any_day in passes:
        if use_preferred and start_time is None:
            continue
        for w in candidates(any_day):
            preferred = (
                datetime.combine(_local_date(w), start_time, tzinfo=ZoneInfo(w.timezone))
                if use_preferred
                else None
            )
            fit = _fit_in_window(w, occupied, preferred, duration, allow_shrink, not_before)
            if fit is not None:
                return fit[0], fit[1], w.timezone
    return None


def _dedupe(items: tuple[str, ...]) -> tuple[str, ...]:
    seen: set[str] = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return tuple(out)


def materialize_draft(
    draft: PlanDraft,
    profile: LearnerProfile,
    start_date: date,
    horizon_weeks: int,
    session_ids: list[str] | None = None,
) -> tuple[PlannedSession, ...]:
    """Assign draft sessions to concrete dates, first-fit, in draft order.

    Placement is monotone: each session starts no earlier than the one the
    draft listed before it, so a content-ordered draft always yields a
    time-ordered plan (sequential paths stay coherent).  A session whose
    requested day has no room falls back to the next available window;
    entries that fit nowhere in the horizon are dropped.
    """
    windows = normalize_availability(profile, start_date, horizon_weeks)
    occupied: list[tuple[datetime, datetime]] = []
    sessions: list[PlannedSession] = []
    floor: datetime | None = None
    for ds in draft.proposed_sessions:
        placed = place_session(
            windows,
            occupied,
            ds.day,
            ds.start_time,
            ds.duration_minutes,
            profile.max_session_minutes,
            not_before=floor,
            day_is_firm=False,
        )
        if placed is None:
            continue
        start, end, tz = placed
        floor = end
        occupied.append((start, end))
        sid = (
            session_ids[len(sessions)]
            if session_ids is not None and len(sessions) < len(session_ids)
            else f"s{len(sessions) + 1}"
        )
        sessions.append(
            PlannedSession(
                session_id=sid,
                start=start,
                end=end,
                timezone=tz,
                unit_id=ds.unit_id,
                lesson_ids=_dedupe(ds.lesson_ids),
                objectives=ds.objectives,
                tips=ds.tips,
            )
        )
    sessions.sort(key=lambda s: (s.start, s.session_id))
    return tuple(sessions)


# --- validation ---------------------------------------------------------------


def _coverage_windows(profile: LearnerProfile, plan: StudyPlan) -> tuple[TimeWindow, ...]:
    if not plan.sessions:
        return ()
    first = min(s.start for s in plan.sessions).date() - timedelta(days=7)
    last = max(s.end for s in plan.sessions).date()
    weeks = max(1, (last - first).days // 7 + 2)
    return normalize_availability(profile, first, weeks)


def validate_plan(
    plan: StudyPlan, profile: LearnerProfile, manifest: CourseManifest
) -> ValidationReport:
    """Feasibility checks: overlap, windows, duration, order, lesson identity."""
    violations: list[Violation] = []
    ordered = sorted(plan.sessions, key=lambda s: (s.start, s.session_id))

    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            if b.start < a.end and a.start < b.end:
                violations.append(
                    Violation(
                        ViolationCode.OVERLAP,
                        (a.session_id, b.session_id),
                        f"sessions {a.session_id} and {b.session_id} overlap in time",
                    )
                )

    windows = _coverage_windows(profile, plan)
    for s in ordered:
        if not any(w.start <= s.start and s.end <= w.end for w in windows):
            violations.append(
                Violation(
                    ViolationCode.OUTSIDE_AVAILABILITY,
                    (s.session_id,),
                    f"session {s.session_id} ({s.start.isoformat()}..{s.end.isoformat()}) "
                    "is not inside any availability window",
                )
            )

    for s in ordered:
        if s.duration_minutes > profile.max_session_minutes:
            violations.append(
                Violation(
                    ViolationCode.TOO_LONG,
                    (s.session_id,),
                    f"session {s.session_id} lasts {s.duration_minutes} min, cap is "
                    f"{profile.max_session_minutes}",
                )
            )

    lesson_unit = manifest.unit_of_lesson()
    for s in ordered:
        for lid in s.lesson_ids:
            if lid not in lesson_unit:
                violations.append(
                    Violation(
                        ViolationCode.UNKNOWN_LESSON,
                        (s.session_id,),
                        f"lesson {lid!r} in session {s.session_id} is not in the manifest",
                    )
                )
            elif lesson_unit[lid] != s.unit_id:
                violations.append(
                    Violation(
                        ViolationCode.UNKNOWN_LESSON,
                        (s.session_id,),
                        f"lesson {lid!r} belongs to unit {lesson_unit[lid]!r}, "
                        f"not {s.unit_id!r}",
                    )
                )

    if profile.path_mode is PathMode.SEQUENTIAL:
        order = manifest.lesson_order()
        highest = -1
        seen: set[str] = set()
        for s in ordered:
            for lid in s.lesson_ids:
                if lid not in order or lid in seen:
                    continue  # unknown flagged above; repeats are review, allowed
                seen.add(lid)
                if order[lid] < highest:
                    violations.append(
                        Violation(
                            ViolationCode.ORDER_VIOLATION,
                            (s.session_id,),
                            f"lesson {lid!r} first appears after later manifest content "
                            f"in session {s.session_id}",
                        )
                    )
                highest = max(highest, order[lid])

    return ValidationReport(tuple(violations))


# --- repair -------------------------------------------------------------------


def deterministic_repair(
    plan: StudyPlan, profile: LearnerProfile, manifest: CourseManifest
) -> StudyPlan:
    """Cheap fixes only: duplicate-lesson drop, duration clip, window refit.

    Keeps a session's start when the tail merely overruns its window (the
    clip case) and otherwise shifts within the same local date.  Problems
    needing content judgment (order, unknown lessons) are left alone.
    """
    if not plan.sessions:
        return plan
    windows = _coverage_windows(profile, plan)
    occupied: list[tuple[datetime, datetime]] = []
    repaired: list[PlannedSession] = []
    for s in sorted(plan.sessions, key=lambda s: (s.start, s.session_id)):
        s = replace(s, lesson_ids=_dedupe(s.lesson_ids))
        duration = timedelta(minutes=min(s.duration_minutes, profile.max_session_minutes))
        inside = any(w.start <= s.start and s.start + duration <= w.end for w in windows)
        clash = any(o[0] < s.start + duration and s.start < o[1] for o in occupied)
        if inside and not clash:
            fixed = replace(s, end=s.start + duration)
        else:
            day = s.start.date().isoformat()
            placed = place_session(
                windows,
                occupied,
                day,
                s.start.timetz().replace(tzinfo=None),
                int(duration.total_seconds() // 60),
                profile.max_session_minutes,
            )
            if placed is None:
                fixed = replace(s, end=s.start + duration)  # unfixable here; agent's turn
            else:
                start, end, tz = placed
                fixed = replace(s, start=start, end=end, timezone=tz)
        occupied.append((fixed.start, fixed.end))
        repaired.append(fixed)
    repaired.sort(key=lambda s: (s.start, s.session_id))
    return replace(plan, sessions=tuple(repaired))


def repair_plan(
    plan: StudyPlan,
    report: ValidationReport,
    profile: LearnerProfile,
    manifest: CourseManifest,
    provider: ModelProvider,
    max_rounds: int = MAX_REPAIR_ROUNDS,
) -> StudyPlan:
    """Deterministic fixes, then up to ``max_rounds`` repair-agent consults."""
    if report.ok:
        return plan
    current = deterministic_repair(plan, profile, manifest)
    current_report = validate_plan(current, profile, manifest)
    rounds = 0
    while not current_report.ok:
        if rounds >= max_rounds:
            raise RepairExhausted(current_report.to_json())
        rounds += 1
        envelope = build_repair_envelope(current, current_report, profile, manifest)
        response = complete(provider, envelope)
        draft = draft_from_payload(response.payload)
        start_date = min(s.start for s in plan.sessions).date() if plan.sessions else None
        if start_date is None:
            raise RepairExhausted(current_report.to_json())
        sessions = materialize_draft(
            draft,
            profile,
            start_date,
            DEFAULT_HORIZON_WEEKS,
            session_ids=[s.session_id for s in current.sessions],
        )
        current = replace(current, sessions=sessions)
        current = deterministic_repair(current, profile, manifest)
        current_report = validate_plan(current, profile, manifest)
    return current


# --- generation ---------------------------------------------------------------


def generate_plan(
    profile: LearnerProfile,
    manifest: CourseManifest,
    provider: ModelProvider,
    *,
    plan_id: str,
    now: datetime,
    start_date: date | None = None,
    horizon_weeks: int = DEFAULT_HORIZON_WEEKS,
) -> StudyPlan:
    """Full two-stage generation; the returned plan always validates clean."""
    if not profile.availability:
        raise NoAvailability("profile has no availability windows")
    start = start_date or now.date()
    if not normalize_availability(profile, start, horizon_weeks):
        raise NoAvailability("availability expands to no concrete windows")

    envelope = build_planner_envelope(profile, manifest, start, horizon_weeks)
    response = complete(provider, envelope)
    draft = draft_from_payload(response.payload)

    sessions = materialize_draft(draft, profile, start, horizon_weeks)
    plan = StudyPlan(
        plan_id=plan_id,
        version=0,
        parent_version=None,
        provenance=Provenance.INITIAL,
        sessions=sessions,
        created_at=now,
    )
    report = validate_plan(plan, profile, manifest)
    if not report.ok:
        plan = repair_plan(plan, report, profile, manifest, provider)
    return plan


# --- calendar conversion --------------------------------------------------------


def plan_to_events(plan: StudyPlan, manifest: CourseManifest) -> list[CalendarEvent]:
    """One VEVENT-able record per session; uid embeds plan version."""
    lessons = manifest.lesson_index()
    events: list[CalendarEvent] = []
    for s in plan.sessions:
        unit = manifest.unit_by_id(s.unit_id)
        title = unit.title if unit else s.unit_id
        lesson_titles = [lessons[lid].title if lid in lessons else lid for lid in s.lesson_ids]
        description = "Lessons: " + "; ".join(lesson_titles)
        if s.objectives:
            description += "\nObjectives: " + "; ".join(s.objectives)
        if s.tips:
            description += "\nTips: " + "; ".join(s.tips)
        events.append(
            CalendarEvent(
                uid=f"{plan.plan_id}-v{plan.version}-{s.session_id}@learnmate",
                summary=f"Unit {s.unit_id}: {title}",
                dtstart=s.start,
                dtend=s.end,
                dtstamp=plan.created_at,
                description=description,
                categories=("study-session", plan.provenance.value),
                timezone=s.timezone,
            )
        )
    return events
