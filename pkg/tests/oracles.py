"""Independent re-implementations used as test oracles.

Nothing here imports the code paths it checks: feasibility is re-derived
by day-by-day enumeration, quiz payloads are walked field by field, and
the ICS parser reads RFC 5545 text from scratch.  Keep it that way.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from zoneinfo import ZoneInfo


# --- plan feasibility ---------------------------------------------------------


def _availability_intervals(profile, first, last):
    """Every concrete window between two dates, one day at a time."""
    intervals = []
    day = first
    while day <= last:
        for w in profile.availability:
            if day.weekday() == w.weekday:
                zone = ZoneInfo(w.timezone)
                intervals.append(
                    (
                        datetime.combine(day, w.start_time, tzinfo=zone),
                        datetime.combine(day, w.end_time, tzinfo=zone),
                    )
                )
        day += timedelta(days=1)
    return sorted(intervals)


def _covered(start, end, intervals):
    cursor = start
    for a, b in intervals:
        if a <= cursor < b and b > cursor:
            cursor = b
        if cursor >= end:
            return True
    return cursor >= end


def plan_feasibility_problems(plan, profile, manifest) -> list[str]:
    """Brute-force feasibility check; empty list means the plan is fine."""
    problems: list[str] = []
    sessions = sorted(plan.sessions, key=lambda s: (s.start, s.session_id))

    for i, a in enumerate(sessions):
        if a.start >= a.end:
            problems.append(f"{a.session_id}: start not before end")
        for b in sessions[i + 1 :]:
            if b.start < a.end and a.start < b.end:
                problems.append(f"overlap: {a.session_id} / {b.session_id}")

    if sessions:
        first = min(s.start for s in sessions).date() - timedelta(days=8)
        last = max(s.end for s in sessions).date() + timedelta(days=8)
        intervals = _availability_intervals(profile, first, last)
        for s in sessions:
            if not _covered(s.start, s.end, intervals):
                problems.append(f"{s.session_id}: outside availability")

    for s in sessions:
        minutes = (s.end - s.start).total_seconds() / 60
        if minutes > profile.max_session_minutes:
            problems.append(f"{s.session_id}: too long ({minutes:.0f} min)")

    lesson_unit: dict[str, str] = {}
    order: dict[str, int] = {}
    for u in sorted(manifest.units, key=lambda u: u.order):
        for lesson in u.lessons:
            lesson_unit[lesson.lesson_id] = u.unit_id
            order[lesson.lesson_id] = len(order)
    for s in sessions:
        for lid in s.lesson_ids:
            if lid not in lesson_unit:
                problems.append(f"{s.session_id}: unknown lesson {lid}")
            elif lesson_unit[lid] != s.unit_id:
                problems.append(f"{s.session_id}: lesson {lid} not in unit {s.unit_id}")

    if getattr(profile.path_mode, "value", profile.path_mode) == "sequential":
        highest = -1
        seen = set()
        for s in sessions:
            for lid in s.lesson_ids:
                if lid in order and lid not in seen:
                    seen.add(lid)
                    if order[lid] < highest:
                        problems.append(f"{s.session_id}: order violation at {lid}")
                    highest = max(highest, order[lid])
    return problems


# --- quiz payload walker ---------------------------------------------------------


def quiz_payload_problems(payload, question_count: int = 4) -> list[str]:
    """Field-by-field imperative check of a quiz payload."""
    problems: list[str] = []
    if not isinstance(payload, dict):
        return ["payload is not an object"]
    questions = payload.get("questions")
    if not isinstance(questions, list):
        return ["questions missing or not a list"]
    if len(questions) != question_count:
        problems.append(f"expected {question_count} questions, got {len(questions)}")
    for i, q in enumerate(questions):
        if not isinstance(q, dict):
            problems.append(f"question {i} is not an object")
            continue
        stem = q.get("stem")
        if not isinstance(stem, str) or not stem:
            problems.append(f"question {i}: bad stem")
        options = q.get("options")
        if not isinstance(options, list) or len(options) != 4:
            problems.append(f"question {i}: needs exactly 4 options")
        elif not all(isinstance(o, str) and o for o in options):
            problems.append(f"question {i}: options must be non-empty strings")
        ci = q.get("correct_index")
        if not isinstance(ci, int) or isinstance(ci, bool) or not 0 <= ci <= 3:
            problems.append(f"question {i}: correct_index out of range")
        tag = q.get("concept_tag")
        if not isinstance(tag, str) or not tag:
            problems.append(f"question {i}: missing concept_tag")
        sources = q.get("sources")
        if not isinstance(sources, list) or not sources:
            problems.append(f"question {i}: needs at least one source")
        else:
            for j, src in enumerate(sources):
                if not isinstance(src, dict):
                    problems.append(f"question {i} source {j}: not an object")
                    continue
                if not isinstance(src.get("lesson_id"), str) or not src.get("lesson_id"):
                    problems.append(f"question {i} source {j}: bad lesson_id")
                idx = src.get("cue_index")
                if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
                    problems.append(f"question {i} source {j}: bad cue_index")
    return problems


# --- independent ICS parser ---------------------------------------------------------


def _unescape(value: str) -> str:
    out = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\" and i + 1 < len(value):
            nxt = value[i + 1]
            out.append("\n" if nxt in "nN" else nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def parse_ics(data: bytes) -> dict:
    """From-scratch RFC 5545 reader: unfolds, splits properties, types dates."""
    text = data.decode("utf-8")
    assert text.count("\n") == text.count("\r\n"), "bare LF found; CRLF required"
    physical = text.split("\r\n")
    if physical and physical[-1] == "":
        physical.pop()
    logical: list[str] = []
    for line in physical:
        if line[:1] in (" ", "\t") and logical:
            logical[-1] += line[1:]
        else:
            logical.append(line)

    calendar: dict = {"events": [], "props": {}}
    event: dict | None = None
    for line in logical:
        name_part, _, raw_value = line.partition(":")
        name, *params = name_part.split(";")
        param_map = {}
        for p in params:
            k, _, v = p.partition("=")
            param_map[k] = v
        if name == "BEGIN" and raw_value == "VEVENT":
            event = {}
            continue
        if name == "END" and raw_value == "VEVENT":
            calendar["events"].append(event)
            event = None
            continue
        target = event if event is not None else calendar["props"]
        if name in ("DTSTART", "DTEND"):
            tzid = param_map.get("TZID")
            stamp = datetime.strptime(raw_value, "%Y%m%dT%H%M%S")
            target[name.lower()] = (
                stamp.replace(tzinfo=ZoneInfo(tzid)) if tzid else stamp
            )
            target[name.lower() + "_tzid"] = tzid
        elif name == "DTSTAMP":
            target["dtstamp"] = datetime.strptime(raw_value, "%Y%m%dT%H%M%SZ").replace(
                tzinfo=timezone.utc
            )
        elif name in ("SUMMARY", "DESCRIPTION", "UID"):
            target[name.lower()] = _unescape(raw_value)
        elif name == "CATEGORIES":
            target["categories"] = [_unescape(v) for v in raw_value.split(",")]
        else:
            target[name.lower()] = raw_value
    return calendar


def max_physical_line_octets(data: bytes) -> int:
    lines = data.split(b"\r\n")
    return max((len(line) for line in lines), default=0)
