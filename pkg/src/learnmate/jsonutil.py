"""Canonical JSON and timestamp helpers shared by every serializer.

All persisted artifacts use the same canonical form (sorted keys, no
insignificant whitespace, UTF-8) so that golden tests and the undo
content-equality check can compare bytes directly.
"""

from __future__ import annotations

import json
from datetime import date, datetime, timezone
from typing import Any


def canonical_dumps(value: Any) -> str:
    """Serialize to the canonical JSON text form."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(value: Any) -> bytes:
    """Canonical JSON as UTF-8 bytes."""
    return canonical_dumps(value).encode("utf-8")


def utc_isoformat(dt: datetime) -> str:
    """Render an aware datetime as a UTC ISO-8601 string."""
    if dt.tzinfo is None:
        raise ValueError("naive datetime cannot be persisted")
    return dt.astimezone(timezone.utc).isoformat()


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp, normalizing to UTC."""
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no offset")
    return dt.astimezone(timezone.utc)


def parse_date(text: str) -> date:
    return date.fromisoformat(text)
