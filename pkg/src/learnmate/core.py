"""Shared domain types: learner profiles, study plans, validation reports.

Everything here is a pure value type or a pure function; no I/O, no clocks.
Times inside sessions are timezone-aware; persistence always serializes
them in UTC while keeping the IANA zone name alongside so calendar export
can render local wall-clock times.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from enum import Enum
from zoneinfo import ZoneInfo

from .errors import InvalidTimezone, ParseError
from .jsonutil import parse_utc, utc_isoformat

WEEKDAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")

MIN_SESSION_MINUTES = 15
DEFAULT_HORIZON_WEEKS = 8


class Pace(str, Enum):
    RELAXED = "relaxed"
    STANDARD = "standard"
    INTENSIVE = "intensive"


class PathMode(str, Enum):
    SEQUENTIAL = "sequential"
    CUSTOM = "custom"


class Provenance(str, Enum):
    INITIAL = "initial"
    ADAPTED = "adapted"
    UNDO = "undo"


class ViolationCode(str, Enum):
    OVERLAP = "Overlap"
    OUTSIDE_AVAILABILITY = "OutsideAvailability"
    TOO_LONG = "TooLong"
    ORDER_VIOLATION = "OrderViolation"
    UNKNOWN_LESSON = "UnknownLesson"


@dataclass(frozen=True)
class WeeklyWindow:
    """One recurring availability slot, stated in local wall-clock time."""

    weekday: int  # 0=Monday .. 6=Sunday
    start_time: time
    end_time: time
    timezone: str


@dataclass(frozen=True)
class LearnerProfile:
    """The four personalization dimensions plus identity.

    goals = free text + optional target date; time = weekly windows;
    pace = level + session-length cap; path = sequential or an explicit
    unit ordering.
    """

    learner_id: str
    goals_text: str
    target_date: date | None
    availability: tuple[WeeklyWindow, ...]
    pace: Pace
    max_session_minutes: int
    path_mode: PathMode
    path_unit_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class PlannedSession:
    session_id: str
    start: datetime
    end: datetime
    timezone: str
    unit_id: str
    lesson_ids: tuple[str, ...]
    objectives: tuple[str, ...] = ()
    tips: tuple[str, ...] = ()

    @property
    def duration_minutes(self) -> int:
        return int((self.end - self.start).total_seconds() // 60)


@dataclass(frozen=True)
class StudyPlan:
    plan_id: str
    version: int
    parent_version: int | None
    provenance: Provenance
    sessions: tuple[PlannedSession, ...]
    created_at: datetime


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    session_ids: tuple[str, ...]
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"code": v.code.value, "session_ids": list(v.session_ids), "detail": v.detail}
                for v in self.violations
            ],
        }


@dataclass(frozen=True)
class TimeWindow:
    """A concrete absolute interval produced from a weekly window."""

    start: datetime
    end: datetime
    timezone: str


# --- profile validation ---------------------------------------------------


def _valid_zone(name: str) -> bool:
    try:
        ZoneInfo(name)
        return True
    except Exception:
        return False


def validate_profile(profile: LearnerProfile) -> ValidationReport:
    """Check every profile invariant; violations name the offending field.

    Report codes reuse the fixed validation enum: window problems map to
    OutsideAvailability, the session-length floor to TooLong, duplicate
    custom-path units to OrderViolation.
    """
    violations: list[Violation] = []
    for i, w in enumerate(profile.availability):
        field_name = f"availability[{i}]"
        if not 0 <= w.weekday <= 6:
            violations.append(
                Violation(
                    ViolationCode.OUTSIDE_AVAILABILITY,
                    (),
                    f"{field_name}.weekday: {w.weekday} not in 0..6",
                )
            )
        if w.start_time >= w.end_time:
            violations.append(
                Violation(
                    ViolationCode.OUTSIDE_AVAILABILITY,
                    (),
                    f"{field_name}: start_time {w.start_time} not before end_time {w.end_time}",
                )
            )
        if not _valid_zone(w.timezone):
            violations.append(
                Violation(
                    ViolationCode.OUTSIDE_AVAILABILITY,
                    (),
                    f"{field_name}.timezone: unknown IANA zone {w.timezone!r}",
                )
            )
    if profile.max_session_minutes < MIN_SESSION_MINUTES:
        violations.append(
            Violation(
                ViolationCode.TOO_LONG,
                (),
                f"pace.max_session_minutes: {profile.max_session_minutes} below floor "
                f"{MIN_SESSION_MINUTES}",
            )
        )
    if profile.path_mode is PathMode.CUSTOM:
        seen: set[str] = set()
        for unit_id in profile.path_unit_ids:
            if unit_id in seen:
                violations.append(
                    Violation(
                        ViolationCode.ORDER_VIOLATION,
                        (),
                        f"path.unit_ids: unit {unit_id!r} listed more than once",
                    )
                )
            seen.add(unit_id)
    return ValidationReport(tuple(violations))


# --- availability expansion ------------------------------------------------


def normalize_availability(
    profile: LearnerProfile,
    week_start: date,
    horizon_weeks: int = DEFAULT_HORIZON_WEEKS,
) -> tuple[TimeWindow, ...]:
    """Expand weekly windows into concrete intervals over the horizon.

    A window is anchored to local wall-clock time, so a 20:00-21:00 slot
    stays one local hour across DST transitions.  Returned intervals are
    sorted by start and merged when they touch or overlap.
    """
    raw: list[TimeWindow] = []
    for w in profile.availability:
        try:
            zone = ZoneInfo(w.timezone)
        except Exception as exc:
            raise InvalidTimezone(f"unknown IANA zone {w.timezone!r}") from exc
        for day_offset in range(horizon_weeks * 7):
            day = week_start + timedelta(days=day_offset)
            if day.weekday() != w.weekday:
                continue
            start = datetime.combine(day, w.start_time, tzinfo=zone)
            end = datetime.combine(day, w.end_time, tzinfo=zone)
            raw.append(TimeWindow(start, end, w.timezone))
    raw.sort(key=lambda tw: (tw.start, tw.end))
    merged: list[TimeWindow] = []
    for tw in raw:
        if merged and tw.start <= merged[-1].end:
            last = merged[-1]
            if tw.end > last.end:
                merged[-1] = TimeWindow(last.start, tw.end, last.timezone)
        else:
            merged.append(tw)
    return tuple(merged)


# --- serialization ----------------------------------------------------------


def profile_to_json(profile: LearnerProfile) -> dict:
    return {
        "learner_id": profile.learner_id,
        "goals": {
            "text": profile.goals_text,
            "target_date": profile.target_date.isoformat() if profile.target_date else None,
        },
        "availability": [
            {
                "weekday": w.weekday,
                "start_time": w.start_time.isoformat(timespec="minutes"),
                "end_time": w.end_time.isoformat(timespec="minutes"),
                "timezone": w.timezone,
            }
            for w in profile.availability
        ],
        "pace": {"level": profile.pace.value, "max_session_minutes": profile.max_session_minutes},
        "path": {
            "mode": profile.path_mode.value,
            "unit_ids": list(profile.path_unit_ids),
        },
    }


def _require(mapping: dict, key: str, path: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ParseError(f"missing field {key!r}", path=path)
    return mapping[key]


def profile_from_json(data: dict) -> LearnerProfile:
    try:
        goals = _require(data, "goals", "goals")
        target = goals.get("target_date")
        windows = []
        for i, w in enumerate(_require(data, "availability", "availability")):
            windows.append(
                WeeklyWindow(
                    weekday=int(_require(w, "weekday", f"availability[{i}].weekday")),
                    start_time=time.fromisoformat(
                        _require(w, "start_time", f"availability[{i}].start_time")
                    ),
                    end_time=time.fromisoformat(
                        _require(w, "end_time", f"availability[{i}].end_time")
                    ),
                    timezone=str(_require(w, "timezone", f"availability[{i}].timezone")),
                )
            )
        pace = _require(data, "pace", "pace")
        path = _require(data, "path", "path")
        return LearnerProfile(
            learner_id=str(_require(data, "learner_id", "learner_id")),
            goals_text=str(_require(goals, "text", "goals.text")),
            target_date=date.fromisoformat(target) if target else None,
            availability=tuple(windows),
            pace=Pace(_require(pace, "level", "pace.level")),
            max_session_minutes=int(
                _require(pace, "max_session_minutes", "pace.max_session_minutes")
            ),
            path_mode=PathMode(_require(path, "mode", "path.mode")),
            path_unit_ids=tuple(path.get("unit_ids") or ()),
        )
    except ParseError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ParseError(f"malformed profile: {exc}") from exc


def session_to_json(session: PlannedSession) -> dict:
    return {
        "session_id": session.session_id,
        "start": utc_isoformat(session.start),
        "end": utc_isoformat(session.end),
        "timezone": session.timezone,
        "unit_id": session.unit_id,
        "lesson_ids": list(session.lesson_ids),
        "objectives": list(session.objectives),
        "tips": list(session.tips),
    }


def session_from_json(data: dict) -> PlannedSession:
    zone = ZoneInfo(data["timezone"])
    return PlannedSession(
        session_id=data["session_id"],
        start=parse_utc(data["start"]).astimezone(zone),
        end=parse_utc(data["end"]).astimezone(zone),
        timezone=data["timezone"],
        unit_id=data["unit_id"],
        lesson_ids=tuple(data["lesson_ids"]),
        objectives=tuple(data.get("objectives") or ()),
        tips=tuple(data.get("tips") or ()),
    )


def plan_to_json(plan: StudyPlan) -> dict:
    return {
        "plan_id": plan.plan_id,
        "version": plan.version,
        "parent_version": plan.parent_version,
        "provenance": plan.provenance.value,
        "created_at": utc_isoformat(plan.created_at),
        "sessions": [session_to_json(s) for s in plan.sessions],
    }


def plan_from_json(data: dict) -> StudyPlan:
    return StudyPlan(
        plan_id=data["plan_id"],
        version=int(data["version"]),
        parent_version=data["parent_version"],
        provenance=Provenance(data["provenance"]),
        sessions=tuple(session_from_json(s) for s in data["sessions"]),
        created_at=parse_utc(data["created_at"]),
    )


def sessions_content_json(plan: StudyPlan) -> list[dict]:
    """Session content only, used for undo content-equality comparisons."""
    return [session_to_json(s) for s in plan.sessions]
