/** Wire fixtures mirroring real server responses. */

import type {
  AnswerWire,
  PlanWire,
  ProfileWire,
  ProposalWire,
  QuizReportWire,
  QuizResultWire,
  QuizWire,
  SessionStartWire,
} from "../src/types.js";

export const profileFixture: ProfileWire = {
  learner_id: "alex",
  goals: { text: "Prepare for the AP World History exam", target_date: "2026-05-07" },
  availability: [
    { weekday: 6, start_time: "20:00", end_time: "21:00", timezone: "America/Chicago" },
    { weekday: 2, start_time: "20:00", end_time: "21:00", timezone: "America/Chicago" },
  ],
  pace: { level: "standard", max_session_minutes: 60 },
  path: { mode: "sequential", unit_ids: [] },
};

export const planV0: PlanWire = {
  plan_id: "p1",
  version: 0,
  parent_version: null,
  provenance: "initial",
  created_at: "2025-09-01T00:00:02+00:00",
  sessions: [
    {
      session_id: "s1",
      start: "2025-09-08T01:00:00+00:00",
      end: "2025-09-08T02:00:00+00:00",
      timezone: "America/Chicago",
      unit_id: "2.1",
      lesson_ids: ["era2-overview"],
      objectives: ["Understand how forager life differed from farming life"],
      tips: [],
    },
    {
      session_id: "s2",
      start: "2025-09-11T01:00:00+00:00",
      end: "2025-09-11T02:00:00+00:00",
      timezone: "America/Chicago",
      unit_id: "2.1",
      lesson_ids: ["farming"],
      objectives: ["Explain how food surpluses reshaped villages"],
      tips: [],
    },
    {
      session_id: "s6",
      start: "2025-09-25T01:00:00+00:00",
      end: "2025-09-25T02:00:00+00:00",
      timezone: "America/Chicago",
      unit_id: "3.1",
      lesson_ids: ["era3-overview", "trade"],
      objectives: ["Review Era 3 end to end"],
      tips: [],
    },
  ],
};

export function movedPlan(sessionId: string, newStart: string, newEnd: string): PlanWire {
  return {
    ...planV0,
    version: 1,
    parent_version: 0,
    provenance: "adapted",
    sessions: planV0.sessions.map((s) =>
      s.session_id === sessionId ? { ...s, start: newStart, end: newEnd } : s,
    ),
  };
}

export const sessionStartFixture: SessionStartWire = {
  session_id: "s1",
  plan_id: "p1",
  plan_version: 0,
  state: "Active",
  lesson_ids: ["era2-overview"],
  guidance: "Focus on Unit 2.1. Watch the video first, then summarize aloud.",
};

export const groundedAnswerFixture: AnswerWire = {
  answer_id: "a1",
  text: "Grounded in the course (era2-overview@275s): The Neolithic era is also called the New Stone Age.",
  citations: [{ lesson_id: "era2-overview", cue_index: 6, start_s: 275.0, score: 1.0 }],
  scope_flag: "InScope",
  expandable: ["MoreDetails", "PracticeQuestions", "ExternalResources"],
  expansions: {},
};

export const quizFixture: QuizWire = {
  quiz_id: "s1-quiz",
  session_id: "s1",
  questions: [
    {
      stem: "What does the Neolithic transition describe?",
      options: [
        "The first use of bronze tools",
        "The shift from foraging to farming",
        "The rise of maritime empires",
        "The invention of writing",
      ],
      concept_tag: "neolithic",
      source_refs: [{ lesson_id: "era2-overview", cue_index: 3, start_s: 130, score: 0 }],
    },
    {
      stem: "What is another name for the Neolithic era?",
      options: ["The Bronze Age", "The Iron Age", "The New Stone Age", "The Classical Age"],
      concept_tag: "neolithic",
      source_refs: [{ lesson_id: "era2-overview", cue_index: 6, start_s: 275, score: 0 }],
    },
    {
      stem: "What did a food surplus allow early farming villages to do?",
      options: [
        "Support people in new specialized roles",
        "Abandon agriculture entirely",
        "Stop trading with neighbors",
        "Return to seasonal migration",
      ],
      concept_tag: "farming",
      source_refs: [{ lesson_id: "era2-overview", cue_index: 6, start_s: 275, score: 0 }],
    },
    {
      stem: "Where does most evidence about this period come from?",
      options: [
        "Royal chronicles",
        "Printed books",
        "Newspaper archives",
        "Archaeology such as tools, bones, and pollen",
      ],
      concept_tag: "evidence",
      source_refs: [{ lesson_id: "era2-overview", cue_index: 5, start_s: 245, score: 0 }],
    },
  ],
};

/** The 3-correct-of-7 outcome whose display the UI must show verbatim. */
export const sevenQuestionResult: QuizResultWire = {
  quiz_id: "s1-quiz",
  answers: [0, 1, 2, 3, 0, 1, 2],
  score: { correct: 3, total: 7 },
  score_display: "42.9%",
  per_concept: {
    farmers: { asked: 3, correct: 1 },
    sources: { asked: 2, correct: 1 },
    cases: { asked: 2, correct: 1 },
  },
};

export const sevenQuestionReport: QuizReportWire = {
  quiz_id: "s1-quiz",
  score_display: "42.9%",
  score: { correct: 3, total: 7 },
  weak_concepts: [
    { concept_tag: "farmers", evidence: [1, 2] },
    { concept_tag: "sources", evidence: [4] },
    { concept_tag: "cases", evidence: [6] },
  ],
  narrative:
    "You missed questions on: farmers, sources, cases. Revisit those sections before moving on.",
};

export const proposalFixture: ProposalWire = {
  proposal_id: "p1-prop1",
  base_version: 0,
  ops: [
    {
      kind: "AddSession",
      session: {
        session_id: "s7",
        start: "2025-09-29T01:00:00+00:00",
        end: "2025-09-29T01:45:00+00:00",
        timezone: "America/Chicago",
        unit_id: "2.1",
        lesson_ids: ["farming"],
        objectives: ["Targeted Review: Food Surplus & The Rise of Farming"],
        tips: [],
      },
    },
    { kind: "ResizeSession", session_id: "s6", new_end: "2025-09-25T01:45:00+00:00" },
  ],
  rationales: [
    "missed farming questions, so add a practice session reviewing farming",
    "shorten s6 to balance the week after adding the farming review",
  ],
  created_at: "2025-09-01T00:00:30+00:00",
};
