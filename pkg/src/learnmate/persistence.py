"""Durable append-only event log with per-stream sequence numbers.

File format: one file of length-prefixed records, each record being
4-byte big-endian payload length + payload + 4-byte CRC32 of the payload.
Payloads are canonical JSON of the stored event.  Recovery scans from the
front and stops at the first torn or corrupt record, so a crash can lose
only the unfinished tail.  A sidecar snapshot index accelerates reopen
but is never authoritative.
"""

from __future__ import annotations

import json
import os
import struct
import threading
import zlib
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .core import StudyPlan, plan_from_json, plan_to_json
from .errors import NotFound, StorageFailure
from .jsonutil import canonical_bytes, parse_utc, utc_isoformat

_LEN = struct.Struct(">I")
INDEX_SNAPSHOT_EVERY = 64


@dataclass(frozen=True)
class StoredEvent:
    seq: int
    stream_id: str
    kind: str
    payload: dict
    recorded_at: datetime

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "stream_id": self.stream_id,
            "kind": self.kind,
            "payload": self.payload,
            "recorded_at": utc_isoformat(self.recorded_at),
        }


def _event_from_json(data: dict) -> StoredEvent:
    return StoredEvent(
        seq=int(data["seq"]),
        stream_id=data["stream_id"],
        kind=data["kind"],
        payload=data["payload"],
        recorded_at=parse_utc(data["recorded_at"]),
    )


class EventStore:
    """Single-writer append-only store; readers see immutable history."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.index_path = self.path.with_suffix(self.path.suffix + ".idx")
        self._lock = threading.Lock()
        self._events: list[StoredEvent] = []
        self._by_stream: dict[str, list[StoredEvent]] = {}
        self._appends_since_snapshot = 0
        self._valid_bytes = 0
        self._load()

    # --- file scanning ----------------------------------------------------

    def _load(self) -> None:
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            return
        start_offset = self._try_index()
        try:
            with open(self.path, "rb") as fh:
                fh.seek(start_offset)
                offset = start_offset
                while True:
                    header = fh.read(4)
                    if len(header) < 4:
                        break
                    (length,) = _LEN.unpack(header)
                    payload = fh.read(length)
                    crc_raw = fh.read(4)
                    if len(payload) < length or len(crc_raw) < 4:
                        break  # torn tail
                    (crc,) = _LEN.unpack(crc_raw)
                    if zlib.crc32(payload) != crc:
                        break  # corrupt tail
                    try:
                        event = _event_from_json(json.loads(payload.decode("utf-8")))
                    except (ValueError, KeyError):
                        break
                    self._remember(event)
                    offset += 4 + length + 4
                self._valid_bytes = offset
            # Drop a torn/corrupt tail physically so later appends land at
            # a clean boundary and survive the next reopen.
            if self.path.stat().st_size > self._valid_bytes:
                with open(self.path, "r+b") as fh:
                    fh.truncate(self._valid_bytes)
        except OSError as exc:
            raise StorageFailure(f"cannot read event log: {exc}") from exc

    def _try_index(self) -> int:
        """Replay events recorded in the snapshot index; returns scan offset."""
        if not self.index_path.exists():
            return 0
        try:
            raw = json.loads(self.index_path.read_text("utf-8"))
            scanned_to = int(raw["scanned_to"])
            if scanned_to > self.path.stat().st_size:
                return 0
            for data in raw["events"]:
                self._remember(_event_from_json(data))
            return scanned_to
        except (OSError, ValueError, KeyError):
            self._events.clear()
            self._by_stream.clear()
            return 0

    def _remember(self, event: StoredEvent) -> None:
        self._events.append(event)
        self._by_stream.setdefault(event.stream_id, []).append(event)

    def _write_index(self) -> None:
        snapshot = {
            "scanned_to": self._valid_bytes,
            "events": [e.to_json() for e in self._events],
        }
        tmp = self.index_path.with_suffix(".idx.tmp")
        tmp.write_bytes(canonical_bytes(snapshot))
        os.replace(tmp, self.index_path)

    # --- writes -------------------------------------------------------------

    def append_event(self, stream_id: str, kind: str, payload: dict, *, now: datetime) -> int:
        """Append one event; durable before return; returns its per-stream seq."""
        with self._lock:
            seq = len(self._by_stream.get(stream_id, ())) + 1
            event = StoredEvent(seq, stream_id, kind, payload, now)
            body = canonical_bytes(event.to_json())
            record = _LEN.pack(len(body)) + body + _LEN.pack(zlib.crc32(body))
            try:
                with open(self.path, "ab") as fh:
                    fh.write(record)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"cannot append event: {exc}") from exc
            self._remember(event)
            self._valid_bytes += len(record)
            self._appends_since_snapshot += 1
            if self._appends_since_snapshot >= INDEX_SNAPSHOT_EVERY:
                self._appends_since_snapshot = 0
                try:
                    self._write_index()
                except OSError:
                    pass  # index is an accelerator only
            return seq

    # --- reads ----------------------------------------------------------------

    def read_stream(self, stream_id: str) -> list[StoredEvent]:
        return list(self._by_stream.get(stream_id, ()))

    def streams(self) -> list[str]:
        return sorted(self._by_stream)

    def all_events(self) -> list[StoredEvent]:
        return list(self._events)


# --- plan-specific folding --------------------------------------------------------


def persist_plan_version(store: EventStore, plan: StudyPlan, *, now: datetime) -> int:
    return store.append_event(
        plan.plan_id, "plan_version", {"plan": plan_to_json(plan)}, now=now
    )


def persist_decision(store: EventStore, plan_id: str, record: dict, *, now: datetime) -> int:
    return store.append_event(plan_id, "decision", record, now=now)


def load_plan_version(store: EventStore, plan_id: str, version: int | None = None) -> StudyPlan:
    """Fold the stream and return the requested (or head) version."""
    events = store.read_stream(plan_id)
    plans = [
        plan_from_json(e.payload["plan"]) for e in events if e.kind == "plan_version"
    ]
    if not plans:
        raise NotFound(f"plan {plan_id!r} not found")
    if version is None:
        return plans[-1]
    for plan in plans:
        if plan.version == version:
            return plan
    raise NotFound(f"plan {plan_id!r} has no version {version}")


def list_history(store: EventStore, plan_id: str) -> list[dict]:
    """Chronological lineage entries with the decision that produced each."""
    events = store.read_stream(plan_id)
    if not any(e.kind == "plan_version" for e in events):
        raise NotFound(f"plan {plan_id!r} not found")
    entries: list[dict] = []
    last_decision: dict | None = None
    for e in events:
        if e.kind == "decision":
            last_decision = e.payload
            if e.payload.get("resulting_version") is None:
                entries.append(
                    {
                        "version": None,
                        "provenance": None,
                        "decided_at": e.payload.get("decided_at"),
                        "action": e.payload.get("action"),
                        "rationale_summary": e.payload.get("rationale_summary", ""),
                    }
                )
        elif e.kind == "plan_version":
            plan = e.payload["plan"]
            decided_at = plan["created_at"]
            summary = ""
            action = None
            if (
                last_decision is not None
                and last_decision.get("resulting_version") == plan["version"]
            ):
                decided_at = last_decision.get("decided_at", decided_at)
                summary = last_decision.get("rationale_summary", "")
                action = last_decision.get("action")
            entries.append(
                {
                    "version": plan["version"],
                    "provenance": plan["provenance"],
                    "decided_at": decided_at,
                    "action": action,
                    "rationale_summary": summary,
                }
            )
    return entries
