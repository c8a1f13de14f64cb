"""Generative-model backend abstraction.

Every agent call is a ``PromptEnvelope`` hashed over its canonical
serialization; scripted providers replay responses keyed by that hash,
which makes the entire workflow deterministic under test.  A thin HTTP
adapter covers live backends and stays out of the test path.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time as _time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

from .errors import (
    MissingFixture,
    ParseError,
    ProviderTimeout,
    ProviderUnavailable,
    SchemaError,
    UnknownSchema,
)
from .jsonutil import canonical_dumps
from .schemas import validator_for

AGENTS = ("Planner", "PlanRepair", "QA", "TierExpand", "QuizGen", "QuizAnalysis", "Adaptation")


@dataclass(frozen=True)
class ContextBlock:
    label: str
    text: str


@dataclass(frozen=True)
class PromptEnvelope:
    agent: str
    system_text: str
    user_text: str
    context_blocks: tuple[ContextBlock, ...]
    response_schema_id: str

    def __post_init__(self):
        if self.agent not in AGENTS:
            raise ValueError(f"unknown agent {self.agent!r}")

    @property
    def request_hash(self) -> str:
        """SHA-256 over the canonical serialization of all other fields."""
        body = canonical_dumps(
            {
                "agent": self.agent,
                "system_text": self.system_text,
                "user_text": self.user_text,
                "context_blocks": [
                    {"label": b.label, "text": b.text} for b in self.context_blocks
                ],
                "response_schema_id": self.response_schema_id,
            }
        )
        return hashlib.sha256(body.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ModelResponse:
    raw_text: str
    payload: Any
    provider_name: str
    latency_ms: float


class ModelProvider(Protocol):
    name: str

    def generate(self, envelope: PromptEnvelope, attempt: int, feedback: str | None) -> str:
        """Produce raw response text; ``feedback`` carries reformat hints."""
        ...


def validate_payload(raw_text: str, schema_id: str) -> tuple[Any, list[str]]:
    """Parse and validate raw text; returns (payload, []) or (None, violations)."""
    validator = validator_for(schema_id)
    if validator is None:
        raise UnknownSchema(f"schema {schema_id!r} is not registered")
    try:
        instance = json.loads(raw_text)
    except json.JSONDecodeError as exc:
        return None, [f"invalid JSON: {exc.msg} (line {exc.lineno})"]
    errors = sorted(validator.iter_errors(instance), key=lambda e: str(e.json_path))
    if errors:
        return None, [f"{e.json_path}: {e.message}" for e in errors]
    return instance, []


def complete(
    provider: ModelProvider,
    envelope: PromptEnvelope,
    post_validate: Callable[[Any], list[str]] | None = None,
) -> ModelResponse:
    """Run one agent call with at most one reformat retry on schema failure.

    ``post_validate`` lets callers add semantic checks (for example, quiz
    source refs must fall inside the session scope) that participate in
    the same retry, so a cooperative model gets one chance to fix them.
    """
    attempts: list[tuple[str, list[str]]] = []
    feedback: str | None = None
    for attempt in range(2):
        started = _time.perf_counter()
        raw = provider.generate(envelope, attempt, feedback)
        latency_ms = (_time.perf_counter() - started) * 1000.0
        payload, violations = validate_payload(raw, envelope.response_schema_id)
        if payload is not None and post_validate is not None:
            extra = post_validate(payload)
            if extra:
                payload, violations = None, extra
        if payload is not None:
            return ModelResponse(raw, payload, provider.name, latency_ms)
        attempts.append((raw, violations))
        feedback = "Your previous reply failed validation:\n" + "\n".join(violations)
    raise SchemaError(attempts)


# --- scripted provider -------------------------------------------------------


class ScriptedProvider:
    """Replays responses from a request_hash -> text(s) script.

    In strict mode (the default, and the only mode ``scripted_load``
    produces) an unscripted hash raises ``MissingFixture``.  Tests may
    pass ``fill`` to synthesize-and-record missing entries, which is how
    fixture scripts get built in the first place.
    """

    name = "scripted"

    def __init__(
        self,
        script: dict[str, str | list[str]] | None = None,
        fill: Callable[[PromptEnvelope, int], str] | None = None,
    ):
        self._script: dict[str, list[str]] = {}
        for key, value in (script or {}).items():
            self._script[key] = [value] if isinstance(value, str) else list(value)
        self._fill = fill
        self._lock = threading.Lock()

    @property
    def script(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in self._script.items()}

    def generate(self, envelope: PromptEnvelope, attempt: int, feedback: str | None) -> str:
        key = envelope.request_hash
        with self._lock:
            entries = self._script.get(key, [])
            if attempt < len(entries):
                return entries[attempt]
            if self._fill is not None:
                text = self._fill(envelope, attempt)
                self._script.setdefault(key, []).append(text)
                return text
            if entries:
                return entries[-1]
        raise MissingFixture(key, envelope.agent)


def scripted_load(script_file) -> ScriptedProvider:
    """Load a strict scripted provider from a JSON script file."""
    try:
        with open(script_file, "rb") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read script file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"script file is not valid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError("script file must be a JSON object mapping hash -> response")
    for key, value in raw.items():
        if not isinstance(value, (str, list)) or (
            isinstance(value, list) and not all(isinstance(v, str) for v in value)
        ):
            raise ParseError(f"script entry {key!r} must be text or a list of texts")
    return ScriptedProvider(raw)


def dump_script(provider: ScriptedProvider) -> dict[str, str | list[str]]:
    """Script contents in the file format (single entries collapse to str)."""
    out: dict[str, str | list[str]] = {}
    for key, entries in provider.script.items():
        out[key] = entries[0] if len(entries) == 1 else entries
    return out


# --- live provider -----------------------------------------------------------


class LiveHttpProvider:
    """Minimal chat-completion HTTP client configured from the environment.

    Reads PROVIDER_BASE_URL, PROVIDER_MODEL, and PROVIDER_API_KEY.  Not
    exercised by the test suite; scripted providers cover every workflow.
    """

    name = "live"

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout_s: float = 60.0,
    ):
        self.base_url = (base_url or os.environ.get("PROVIDER_BASE_URL", "")).rstrip("/")
        self.model = model or os.environ.get("PROVIDER_MODEL", "")
        self.api_key = api_key or os.environ.get("PROVIDER_API_KEY", "")
        self.timeout_s = timeout_s
        if not self.base_url:
            raise ProviderUnavailable("PROVIDER_BASE_URL is not configured")

    def generate(self, envelope: PromptEnvelope, attempt: int, feedback: str | None) -> str:
        import httpx

        user = envelope.user_text
        if envelope.context_blocks:
            blocks = "\n\n".join(f"[{b.label}]\n{b.text}" for b in envelope.context_blocks)
            user = f"{user}\n\n{blocks}"
        if feedback:
            user = f"{user}\n\n{feedback}\nReply with corrected JSON only."
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": envelope.system_text},
                {"role": "user", "content": user},
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = httpx.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers=headers,
                timeout=self.timeout_s,
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(str(exc)) from exc
        if resp.status_code >= 500:
            raise ProviderUnavailable(f"backend returned {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderUnavailable(f"request rejected: {resp.status_code} {resp.text[:200]}")
        data = resp.json()
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            return data.get("text", "") if isinstance(data, dict) else ""
