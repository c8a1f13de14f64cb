"""Injectable clocks so scripted runs produce byte-identical timestamps."""

from __future__ import annotations

import threading
from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime:
        """Current time as an aware UTC datetime."""
        ...


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class TickingClock:
    """Deterministic clock: starts at a fixed instant, advances per call.

    Used by scripted (replay) mode so persisted state and stdout are
    reproducible across runs and machines.
    """

    def __init__(self, start: datetime, step_seconds: int = 1):
        if start.tzinfo is None:
            raise ValueError("clock start must be timezone-aware")
        self._next = start.astimezone(timezone.utc)
        self._step = timedelta(seconds=step_seconds)
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            current = self._next
            self._next = current + self._step
            return current


DEFAULT_SCRIPTED_START = datetime(2025, 9, 1, 0, 0, 0, tzinfo=timezone.utc)
