"""Response schemas for every agent, registered by schema id.

All agent outputs are structured JSON validated against these documents;
human-readable text always lives inside named fields.  Count constraints
(four questions, four options) are enforced here so a malformed model
reply triggers the reformat retry instead of leaking downstream.
"""

from __future__ import annotations

from jsonschema import Draft202012Validator

DEFAULT_QUIZ_QUESTIONS = 4
QUIZ_OPTIONS = 4

_DAY = r"^(mon|tue|wed|thu|fri|sat|sun|\d{4}-\d{2}-\d{2})$"
_TIME = r"^([01]\d|2[0-3]):[0-5]\d$"

_DRAFT_SESSION = {
    "type": "object",
    "required": ["day", "start_time", "duration_minutes", "unit_id", "lesson_ids"],
    "properties": {
        "day": {"type": "string", "pattern": _DAY},
        "start_time": {"type": "string", "pattern": _TIME},
        "duration_minutes": {"type": "integer", "minimum": 1},
        "unit_id": {"type": "string", "minLength": 1},
        "lesson_ids": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "objectives": {"type": "array", "items": {"type": "string"}},
        "tips": {"type": "array", "items": {"type": "string"}},
    },
}

PLAN_DRAFT_V1 = {
    "$id": "plan_draft.v1",
    "type": "object",
    "required": ["week_blocks", "proposed_sessions"],
    "properties": {
        "week_blocks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "narrative"],
                "properties": {
                    "label": {"type": "string"},
                    "narrative": {"type": "string"},
                },
            },
        },
        "proposed_sessions": {"type": "array", "items": _DRAFT_SESSION},
    },
}

GUIDANCE_V1 = {
    "$id": "guidance.v1",
    "type": "object",
    "required": ["guidance"],
    "properties": {"guidance": {"type": "string", "minLength": 1}},
}

ANSWER_V1 = {
    "$id": "answer.v1",
    "type": "object",
    "required": ["answer"],
    "properties": {"answer": {"type": "string", "minLength": 1}},
}

TIER_DETAILS_V1 = {
    "$id": "tier_details.v1",
    "type": "object",
    "required": ["text"],
    "properties": {"text": {"type": "string", "minLength": 1}},
}

_MCQ_ITEM = {
    "type": "object",
    "required": ["stem", "options", "correct_index"],
    "properties": {
        "stem": {"type": "string", "minLength": 1},
        "options": {
            "type": "array",
            "items": {"type": "string", "minLength": 1},
            "minItems": QUIZ_OPTIONS,
            "maxItems": QUIZ_OPTIONS,
        },
        "correct_index": {"type": "integer", "minimum": 0, "maximum": QUIZ_OPTIONS - 1},
    },
}

TIER_PRACTICE_V1 = {
    "$id": "tier_practice.v1",
    "type": "object",
    "required": ["items"],
    "properties": {"items": {"type": "array", "items": _MCQ_ITEM, "minItems": 1}},
}

TIER_RESOURCES_V1 = {
    "$id": "tier_resources.v1",
    "type": "object",
    "required": ["resources"],
    "properties": {
        "resources": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["url", "label"],
                "properties": {
                    "url": {"type": "string", "minLength": 1},
                    "label": {"type": "string", "minLength": 1},
                },
            },
        }
    },
}


def quiz_schema(question_count: int = DEFAULT_QUIZ_QUESTIONS) -> dict:
    question = {
        "type": "object",
        "required": ["stem", "options", "correct_index", "concept_tag", "sources"],
        "properties": {
            **_MCQ_ITEM["properties"],
            "concept_tag": {"type": "string", "minLength": 1},
            "sources": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["lesson_id", "cue_index"],
                    "properties": {
                        "lesson_id": {"type": "string", "minLength": 1},
                        "cue_index": {"type": "integer", "minimum": 0},
                    },
                },
            },
        },
    }
    return {
        "$id": "quiz.v1",
        "type": "object",
        "required": ["questions"],
        "properties": {
            "questions": {
                "type": "array",
                "items": question,
                "minItems": question_count,
                "maxItems": question_count,
            }
        },
    }


QUIZ_V1 = quiz_schema()

QUIZ_ANALYSIS_V1 = {
    "$id": "quiz_analysis.v1",
    "type": "object",
    "required": ["narrative"],
    "properties": {"narrative": {"type": "string", "minLength": 1}},
}

_ADAPT_OP = {
    "type": "object",
    "required": ["kind", "rationale"],
    "properties": {
        "kind": {
            "type": "string",
            "enum": [
                "add_session",
                "remove_session",
                "move_session",
                "resize_session",
                "replace_content",
            ],
        },
        "rationale": {"type": "string", "minLength": 1},
        "session_id": {"type": "string"},
        "day": {"type": "string", "pattern": _DAY},
        "start_time": {"type": "string", "pattern": _TIME},
        "duration_minutes": {"type": "integer", "minimum": 1},
        "unit_id": {"type": "string"},
        "lesson_ids": {"type": "array", "items": {"type": "string"}},
        "objectives": {"type": "array", "items": {"type": "string"}},
        "tips": {"type": "array", "items": {"type": "string"}},
        "title": {"type": "string"},
    },
}

ADAPTATION_V1 = {
    "$id": "adaptation.v1",
    "type": "object",
    "required": ["ops"],
    "properties": {"ops": {"type": "array", "items": _ADAPT_OP}},
}


SCHEMAS: dict[str, dict] = {
    "plan_draft.v1": PLAN_DRAFT_V1,
    "guidance.v1": GUIDANCE_V1,
    "answer.v1": ANSWER_V1,
    "tier_details.v1": TIER_DETAILS_V1,
    "tier_practice.v1": TIER_PRACTICE_V1,
    "tier_resources.v1": TIER_RESOURCES_V1,
    "quiz.v1": QUIZ_V1,
    "quiz_analysis.v1": QUIZ_ANALYSIS_V1,
    "adaptation.v1": ADAPTATION_V1,
}

_VALIDATORS = {sid: Draft202012Validator(doc) for sid, doc in SCHEMAS.items()}


def validator_for(schema_id: str) -> Draft202012Validator | None:
    return _VALIDATORS.get(schema_id)
