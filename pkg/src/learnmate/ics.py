"""Calendar event model and RFC 5545 writer.

Output is bit-exact by construction: fixed property order, CRLF endings,
folding at 75 octets with single-space continuations, and TEXT escaping
for backslash, semicolon, comma, and newline.  Every session becomes a
discrete VEVENT; no recurrence rules are emitted.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import DuplicateUid

MAX_LINE_OCTETS = 75

PRODID = "-//learnmate//workflow 0.1//EN"


@dataclass(frozen=True)
class CalendarEvent:
    uid: str
    summary: str
    dtstart: datetime
    dtend: datetime
    dtstamp: datetime
    description: str
    categories: tuple[str, ...]
    timezone: str


def escape_text(value: str) -> str:
    """Escape TEXT values per RFC 5545: backslash, semicolon, comma, newline."""
    return (
        value.replace("\\", "\\\\")
        .replace(";", "\\;")
        .replace(",", "\\,")
        .replace("\r\n", "\\n")
        .replace("\n", "\\n")
    )


def fold_line(line: str) -> list[str]:
    """Split one logical line into physical lines of at most 75 octets.

    Continuation lines begin with a single space (included in the 75).
    Folding never splits inside a UTF-8 multi-byte sequence.
    """
    data = line.encode("utf-8")
    if len(data) <= MAX_LINE_OCTETS:
        return [line]
    out: list[str] = []
    budget = MAX_LINE_OCTETS
    pos = 0
    first = True
    while pos < len(data):
        limit = budget if first else budget - 1
        chunk = data[pos : pos + limit]
        # back off to a UTF-8 character boundary
        while chunk and (chunk[-1] & 0xC0) == 0x80 and pos + len(chunk) < len(data):
            chunk = chunk[:-1]
        # a continuation byte at the end is fine when it completes the char
        while pos + len(chunk) < len(data) and (data[pos + len(chunk)] & 0xC0) == 0x80:
            chunk = chunk[:-1]
        text = chunk.decode("utf-8")
        out.append(text if first else " " + text)
        pos += len(chunk)
        first = False
    return out


def _local_stamp(dt: datetime, tzid: str) -> str:
    from zoneinfo import ZoneInfo

    return dt.astimezone(ZoneInfo(tzid)).strftime("%Y%m%dT%H%M%S")


def _utc_stamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def emit_ics(events: list[CalendarEvent], calendar_name: str) -> bytes:
    """Serialize events into an RFC 5545 VCALENDAR byte stream."""
    seen: set[str] = set()
    for e in events:
        if e.uid in seen:
            raise DuplicateUid(f"uid {e.uid!r} appears more than once")
        seen.add(e.uid)

    logical: list[str] = [
        "BEGIN:VCALENDAR",
        "VERSION:2.0",
        f"PRODID:{PRODID}",
        "CALSCALE:GREGORIAN",
        f"X-WR-CALNAME:{escape_text(calendar_name)}",
    ]
    for e in events:
        logical.extend(
            [
                "BEGIN:VEVENT",
                f"UID:{e.uid}",
                f"DTSTAMP:{_utc_stamp(e.dtstamp)}",
                f"DTSTART;TZID={e.timezone}:{_local_stamp(e.dtstart, e.timezone)}",
                f"DTEND;TZID={e.timezone}:{_local_stamp(e.dtend, e.timezone)}",
                f"SUMMARY:{escape_text(e.summary)}",
                f"DESCRIPTION:{escape_text(e.description)}",
            ]
        )
        if e.categories:
            logical.append("CATEGORIES:" + ",".join(escape_text(c) for c in e.categories))
        logical.append("END:VEVENT")
    logical.append("END:VCALENDAR")

    physical: list[str] = []
    for line in logical:
        physical.extend(fold_line(line))
    return ("\r\n".join(physical) + "\r\n").encode("utf-8")
