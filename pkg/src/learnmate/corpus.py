"""Course content ingestion and lexical transcript retrieval.

A course is a JSON manifest (units -> lessons) plus one WebVTT-subset
transcript per lesson.  Retrieval is plain term-frequency overlap over
cue text: deterministic, offline, and cheap to re-verify by brute force.
Embedding-based retrieval can slot in behind ``retrieve_segments`` later.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import CycleError, DuplicateId, EmptyQuery, NonMonotonicCue, ParseError
from .stopwords import STOPWORDS

# Normalized-score threshold separating in-scope from out-of-scope questions.
SCOPE_THRESHOLD = 0.15

PROVENANCE_COURSE_VERIFIED = "course-verified"
PROVENANCE_EXTERNAL_CURATED = "external-curated"
PROVENANCE_LOW_CONFIDENCE = "low-confidence"

_CURATED_LABELS = (PROVENANCE_COURSE_VERIFIED, PROVENANCE_EXTERNAL_CURATED)


@dataclass(frozen=True)
class CuratedResource:
    url: str
    label: str
    provenance_label: str


@dataclass(frozen=True)
class Lesson:
    lesson_id: str
    title: str
    transcript_ref: str
    est_minutes: int
    video_url: str | None = None
    prerequisites: tuple[str, ...] = ()
    curated_resources: tuple[CuratedResource, ...] = ()


@dataclass(frozen=True)
class Unit:
    unit_id: str
    title: str
    order: int
    lessons: tuple[Lesson, ...]


@dataclass(frozen=True)
class CourseManifest:
    course_id: str
    title: str
    units: tuple[Unit, ...]

    def lesson_index(self) -> dict[str, Lesson]:
        return {l.lesson_id: l for u in self.units for l in u.lessons}

    def unit_of_lesson(self) -> dict[str, str]:
        return {l.lesson_id: u.unit_id for u in self.units for l in u.lessons}

    def unit_by_id(self, unit_id: str) -> Unit | None:
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        return None

    def lesson_order(self) -> dict[str, int]:
        """Global manifest position of each lesson (unit order, then list order)."""
        order: dict[str, int] = {}
        for u in sorted(self.units, key=lambda u: u.order):
            for l in u.lessons:
                order[l.lesson_id] = len(order)
        return order

    def outline(self) -> str:
        """Compact text outline threaded into planner prompts."""
        lines = [f"Course: {self.title} ({self.course_id})"]
        for u in sorted(self.units, key=lambda u: u.order):
            lines.append(f"Unit {u.unit_id}: {u.title}")
            for l in u.lessons:
                lines.append(f"  - {l.lesson_id}: {l.title} ({l.est_minutes} min)")
        return "\n".join(lines)


@dataclass(frozen=True)
class Cue:
    start_s: float
    end_s: float
    text: str


@dataclass(frozen=True)
class Transcript:
    lesson_id: str
    cues: tuple[Cue, ...]


@dataclass(frozen=True)
class SegmentRef:
    lesson_id: str
    cue_index: int
    start_s: float
    score: float

    def to_json(self) -> dict:
        return {
            "lesson_id": self.lesson_id,
            "cue_index": self.cue_index,
            "start_s": self.start_s,
            "score": self.score,
        }


@dataclass
class Corpus:
    """A loaded course: manifest plus transcripts keyed by lesson."""

    manifest: CourseManifest
    transcripts: dict[str, Transcript] = field(default_factory=dict)

    def transcript_for(self, lesson_id: str) -> Transcript:
        return self.transcripts.get(lesson_id) or Transcript(lesson_id, ())

    def scoped_transcripts(self, lesson_ids: list[str]) -> list[Transcript]:
        return [self.transcript_for(lid) for lid in lesson_ids if lid in self.transcripts]


# --- manifest parsing -------------------------------------------------------


def parse_manifest(data: bytes) -> CourseManifest:
    """Parse and fully validate a course manifest."""
    try:
        raw = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"manifest is not UTF-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc.msg}", path=f"line {exc.lineno}") from exc

    def need(mapping, key, path):
        if not isinstance(mapping, dict) or key not in mapping:
            raise ParseError(f"missing field {key!r}", path=path)
        return mapping[key]

    units: list[Unit] = []
    seen_ids: set[str] = set()
    last_order: int | None = None
    for ui, u in enumerate(need(raw, "units", "units")):
        upath = f"units[{ui}]"
        unit_id = str(need(u, "unit_id", f"{upath}.unit_id"))
        if unit_id in seen_ids:
            raise DuplicateId(f"duplicate id {unit_id!r}")
        seen_ids.add(unit_id)
        order = int(need(u, "order", f"{upath}.order"))
        if last_order is not None and order <= last_order:
            raise ParseError(
                f"unit order must be strictly increasing ({order} after {last_order})",
                path=f"{upath}.order",
            )
        last_order = order
        lessons: list[Lesson] = []
        for li, l in enumerate(need(u, "lessons", f"{upath}.lessons")):
            lpath = f"{upath}.lessons[{li}]"
            lesson_id = str(need(l, "lesson_id", f"{lpath}.lesson_id"))
            if lesson_id in seen_ids:
                raise DuplicateId(f"duplicate id {lesson_id!r}")
            seen_ids.add(lesson_id)
            est = int(need(l, "est_minutes", f"{lpath}.est_minutes"))
            if est <= 0:
                raise ParseError("est_minutes must be positive", path=f"{lpath}.est_minutes")
            resources = []
            for ri, r in enumerate(l.get("curated_resources") or []):
                label = need(r, "provenance_label", f"{lpath}.curated_resources[{ri}]")
                if label not in _CURATED_LABELS:
                    raise ParseError(
                        f"provenance_label must be one of {_CURATED_LABELS}, got {label!r}",
                        path=f"{lpath}.curated_resources[{ri}].provenance_label",
                    )
                resources.append(
                    CuratedResource(
                        url=str(need(r, "url", f"{lpath}.curated_resources[{ri}].url")),
                        label=str(need(r, "label", f"{lpath}.curated_resources[{ri}].label")),
                        provenance_label=label,
                    )
                )
            lessons.append(
                Lesson(
                    lesson_id=lesson_id,
                    title=str(need(l, "title", f"{lpath}.title")),
                    transcript_ref=str(need(l, "transcript_ref", f"{lpath}.transcript_ref")),
                    est_minutes=est,
                    video_url=l.get("video_url"),
                    prerequisites=tuple(l.get("prerequisites") or ()),
                    curated_resources=tuple(resources),
                )
            )
        units.append(
            Unit(
                unit_id=unit_id,
                title=str(need(u, "title", f"{upath}.title")),
                order=order,
                lessons=tuple(lessons),
            )
        )
    manifest = CourseManifest(
        course_id=str(need(raw, "course_id", "course_id")),
        title=str(need(raw, "title", "title")),
        units=tuple(units),
    )
    _check_prerequisites(manifest)
    return manifest


def _check_prerequisites(manifest: CourseManifest) -> None:
    lessons = manifest.lesson_index()
    for l in lessons.values():
        for p in l.prerequisites:
            if p not in lessons:
                raise ParseError(
                    f"prerequisite {p!r} of lesson {l.lesson_id!r} does not exist",
                    path=f"lesson {l.lesson_id}",
                )
    # Cycle detection by iterative DFS; reports one cycle path.
    WHITE, GREY, BLACK = 0, 1, 2
    color = {lid: WHITE for lid in lessons}
    for root in sorted(lessons):
        if color[root] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(root, 0)]
        path: list[str] = []
        while stack:
            node, idx = stack.pop()
            if idx == 0:
                color[node] = GREY
                path.append(node)
            prereqs = lessons[node].prerequisites
            if idx < len(prereqs):
                stack.append((node, idx + 1))
                nxt = prereqs[idx]
                if color[nxt] == GREY:
                    cycle = path[path.index(nxt):] + [nxt]
                    raise CycleError(cycle)
                if color[nxt] == WHITE:
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                path.pop()


def manifest_to_json(manifest: CourseManifest) -> dict:
    return {
        "course_id": manifest.course_id,
        "title": manifest.title,
        "units": [
            {
                "unit_id": u.unit_id,
                "title": u.title,
                "order": u.order,
                "lessons": [
                    {
                        "lesson_id": l.lesson_id,
                        "title": l.title,
                        "transcript_ref": l.transcript_ref,
                        "est_minutes": l.est_minutes,
                        "video_url": l.video_url,
                        "prerequisites": list(l.prerequisites),
                        "curated_resources": [
                            {"url": r.url, "label": r.label, "provenance_label": r.provenance_label}
                            for r in l.curated_resources
                        ],
                    }
                    for l in u.lessons
                ],
            }
            for u in manifest.units
        ],
    }


# --- transcript parsing -----------------------------------------------------

_TS = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d)\.(\d{3})$")
_ARROW = " --> "


def _parse_ts(text: str, line_no: int) -> float:
    m = _TS.match(text)
    if not m:
        raise ParseError(f"bad timestamp {text!r}", path=f"line {line_no}")
    h, mi, s, ms = (int(g) for g in m.groups())
    return h * 3600 + mi * 60 + s + ms / 1000.0


def _format_ts(seconds: float) -> str:
    total_ms = int(round(seconds * 1000))
    h, rem = divmod(total_ms, 3_600_000)
    mi, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    return f"{h:02d}:{mi:02d}:{s:02d}.{ms:03d}"


def parse_transcript(data: bytes, lesson_id: str = "") -> Transcript:
    """Parse the WebVTT subset: header, blank-line-separated timed cues."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"transcript is not UTF-8: {exc}") from exc
    if not text.strip():
        return Transcript(lesson_id, ())
    lines = text.splitlines()
    if not lines[0].startswith("WEBVTT"):
        raise ParseError("missing WEBVTT header", path="line 1")

    cues: list[Cue] = []
    i = 1
    n = len(lines)
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        # Optional cue identifier line before the timing line.
        if _ARROW not in lines[i]:
            i += 1
            if i >= n or _ARROW not in lines[i]:
                raise ParseError("expected cue timing line", path=f"line {i}")
        timing = lines[i]
        left, _, right = timing.partition(_ARROW)
        start_s = _parse_ts(left.strip(), i + 1)
        end_s = _parse_ts(right.strip(), i + 1)
        if start_s >= end_s:
            raise ParseError(f"cue start {left.strip()} not before end", path=f"line {i + 1}")
        i += 1
        cue_lines: list[str] = []
        while i < n and lines[i].strip():
            cue_lines.append(lines[i].strip())
            i += 1
        cues.append(Cue(start_s=start_s, end_s=end_s, text=" ".join(cue_lines)))

    for prev, cur in zip(cues, cues[1:]):
        if cur.start_s < prev.end_s:
            raise NonMonotonicCue(
                f"cue at {_format_ts(cur.start_s)} starts before previous cue ends"
            )
    return Transcript(lesson_id, tuple(cues))


def format_transcript(transcript: Transcript) -> bytes:
    """Serialize a transcript back to the WebVTT subset."""
    parts = ["WEBVTT", ""]
    for cue in transcript.cues:
        parts.append(f"{_format_ts(cue.start_s)}{_ARROW}{_format_ts(cue.end_s)}")
        parts.append(cue.text)
        parts.append("")
    return "\n".join(parts).encode("utf-8")


# --- retrieval ---------------------------------------------------------------

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.casefold())


def content_tokens(text: str) -> list[str]:
    return [t for t in tokenize(text) if t not in STOPWORDS]


def score_cue(query_tokens: list[str], cue_text: str) -> float:
    """Term-frequency overlap normalized by query token count."""
    if not query_tokens:
        return 0.0
    cue_counts: dict[str, int] = {}
    for t in tokenize(cue_text):
        cue_counts[t] = cue_counts.get(t, 0) + 1
    query_counts: dict[str, int] = {}
    for t in query_tokens:
        query_counts[t] = query_counts.get(t, 0) + 1
    overlap = sum(min(c, cue_counts.get(t, 0)) for t, c in query_counts.items())
    return overlap / len(query_tokens)


def retrieve_segments(query: str, transcripts, k: int) -> list[SegmentRef]:
    """Top-k cues by lexical overlap; deterministic total order.

    Order: score desc, then earlier start_s, then lesson_id, then cue
    index.  Zero-score cues never appear.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = content_tokens(query)
    if not tokens:
        raise EmptyQuery("query has no content tokens after stopword removal")
    scored: list[SegmentRef] = []
    for transcript in transcripts:
        for idx, cue in enumerate(transcript.cues):
            s = score_cue(tokens, cue.text)
            if s > 0:
                scored.append(SegmentRef(transcript.lesson_id, idx, cue.start_s, s))
    scored.sort(key=lambda r: (-r.score, r.start_s, r.lesson_id, r.cue_index))
    return scored[:k]
