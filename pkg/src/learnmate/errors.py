"""Exception hierarchy for the whole workflow engine.

Every error carries a stable ``code`` string that the HTTP layer and the
CLI map onto status codes / exit codes without string matching.
"""

from __future__ import annotations

from typing import Any


class LearnmateError(Exception):
    """Base class; ``code`` identifies the error across process boundaries."""

    code = "Error"

    def __init__(self, message: str = "", detail: Any = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.detail = detail


# --- parsing / corpus ---------------------------------------------------


class ParseError(LearnmateError):
    code = "ParseError"

    def __init__(self, message: str, path: str = ""):
        super().__init__(message, detail={"path": path} if path else None)
        self.path = path


class CycleError(LearnmateError):
    code = "CycleError"

    def __init__(self, lesson_ids: list[str]):
        super().__init__(f"prerequisite cycle: {' -> '.join(lesson_ids)}", detail=lesson_ids)
        self.lesson_ids = lesson_ids


class DuplicateId(LearnmateError):
    code = "DuplicateId"


class NonMonotonicCue(LearnmateError):
    code = "NonMonotonicCue"


class EmptyQuery(LearnmateError):
    code = "EmptyQuery"


class InvalidTimezone(LearnmateError):
    code = "InvalidTimezone"


class ValidationFailed(LearnmateError):
    """Input failed domain validation; ``detail`` carries the report."""

    code = "ValidationFailed"


# --- provider -----------------------------------------------------------


class ProviderError(LearnmateError):
    code = "ProviderError"


class ProviderUnavailable(ProviderError):
    code = "ProviderUnavailable"


class ProviderTimeout(ProviderError):
    code = "Timeout"


class SchemaError(ProviderError):
    """Response failed schema validation after the reformat retry.

    ``attempts`` holds (raw_text, violations) for every attempt made.
    """

    code = "SchemaError"

    def __init__(self, attempts: list[tuple[str, list[str]]]):
        detail = [{"raw_text": raw, "violations": v} for raw, v in attempts]
        super().__init__("response failed schema validation", detail=detail)
        self.attempts = attempts


class UnknownSchema(ProviderError):
    code = "UnknownSchema"


class MissingFixture(ProviderError):
    code = "MissingFixture"

    def __init__(self, request_hash: str, agent: str):
        super().__init__(
            f"no scripted response for agent {agent} (hash {request_hash})",
            detail={"request_hash": request_hash, "agent": agent},
        )
        self.request_hash = request_hash
        self.agent = agent


# --- planning -----------------------------------------------------------


class NoAvailability(LearnmateError):
    code = "NoAvailability"


class RepairExhausted(LearnmateError):
    code = "RepairExhausted"

    def __init__(self, report: Any):
        super().__init__("plan repair exhausted", detail=report)
        self.report = report


class DuplicateUid(LearnmateError):
    code = "DuplicateUid"


# --- sessions -----------------------------------------------------------


class UnknownSession(LearnmateError):
    code = "UnknownSession"


class IllegalState(LearnmateError):
    code = "IllegalState"


class IllegalTransition(IllegalState):
    code = "IllegalTransition"


class UnknownAnswer(LearnmateError):
    code = "UnknownAnswer"


class TierAlreadyFilled(LearnmateError):
    code = "TierAlreadyFilled"


class LengthMismatch(LearnmateError):
    code = "LengthMismatch"


class IndexOutOfRange(LearnmateError):
    code = "IndexOutOfRange"


# --- adaptation ---------------------------------------------------------


class Mismatch(LearnmateError):
    code = "Mismatch"


class LineageMismatch(LearnmateError):
    code = "LineageMismatch"


class StaleProposal(LearnmateError):
    code = "StaleProposal"


class InvalidEdit(LearnmateError):
    code = "InvalidEdit"

    def __init__(self, message: str, report: Any = None):
        super().__init__(message, detail=report)
        self.report = report


class NothingToUndo(LearnmateError):
    code = "NothingToUndo"


# --- storage / lookup ---------------------------------------------------


class NotFound(LearnmateError):
    code = "NotFound"


class StorageFailure(LearnmateError):
    code = "StorageFailure"
