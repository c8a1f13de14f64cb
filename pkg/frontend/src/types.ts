/** Wire types mirroring the server's canonical JSON. The quiz type for the
 * pre-submission view deliberately has no correct_index: the server redacts
 * it, and the client never reconstructs it. */

export type WeeklyWindowWire = {
  weekday: number; // 0 = Monday .. 6 = Sunday
  start_time: string;
  end_time: string;
  timezone: string;
};

export type ProfileWire = {
  learner_id: string;
  goals: { text: string; target_date: string | null };
  availability: WeeklyWindowWire[];
  pace: { level: "relaxed" | "standard" | "intensive"; max_session_minutes: number };
  path: { mode: "sequential" | "custom"; unit_ids: string[] };
};

export type SessionWire = {
  session_id: string;
  start: string;
  end: string;
  timezone: string;
  unit_id: string;
  lesson_ids: string[];
  objectives: string[];
  tips: string[];
};

export type PlanWire = {
  plan_id: string;
  version: number;
  parent_version: number | null;
  provenance: "initial" | "adapted" | "undo";
  created_at: string;
  sessions: SessionWire[];
};

export type CitationWire = {
  lesson_id: string;
  cue_index: number;
  start_s: number;
  score: number;
};

export type TierName = "MoreDetails" | "PracticeQuestions" | "ExternalResources";

export type TierResourceWire = {
  url: string;
  label: string;
  provenance_label: "course-verified" | "external-curated" | "low-confidence";
};

export type TierWire = {
  tier: TierName;
  text: string | null;
  items: Array<{ stem: string; options: string[]; correct_index: number }>;
  resources: TierResourceWire[];
};

export type AnswerWire = {
  answer_id: string;
  text: string;
  citations: CitationWire[];
  scope_flag: "InScope" | "OutOfScope";
  expandable: TierName[];
  expansions: Partial<Record<TierName, TierWire>>;
};

export type SessionStartWire = {
  session_id: string;
  plan_id: string;
  plan_version: number;
  state: string;
  lesson_ids: string[];
  guidance: string;
};

export type QuizQuestionWire = {
  stem: string;
  options: string[];
  concept_tag: string;
  source_refs: CitationWire[];
};

export type QuizWire = {
  quiz_id: string;
  session_id: string;
  questions: QuizQuestionWire[];
};

export type QuizResultWire = {
  quiz_id: string;
  answers: number[];
  score: { correct: number; total: number };
  score_display: string;
  per_concept: Record<string, { asked: number; correct: number }>;
};

export type QuizReportWire = {
  quiz_id: string;
  score_display: string;
  score: { correct: number; total: number };
  weak_concepts: Array<{ concept_tag: string; evidence: number[] }>;
  narrative: string;
};

export type DigestWire = {
  text: string;
  summary: {
    session_id: string;
    completed: boolean;
    lessons: string[];
    questions_asked: number;
    score_display: string | null;
    weak_concepts: string[];
    next_step: string;
  };
};

export type OpWire = {
  kind: "AddSession" | "RemoveSession" | "MoveSession" | "ResizeSession" | "ReplaceContent";
  session_id?: string;
  session?: SessionWire;
  new_start?: string;
  new_end?: string;
  lesson_ids?: string[];
};

export type ProposalWire = {
  proposal_id: string;
  base_version: number;
  ops: OpWire[];
  rationales: string[];
  created_at: string;
};

export type HistoryEntryWire = {
  version: number | null;
  provenance: string | null;
  decided_at: string;
  action: string | null;
  rationale_summary: string;
};

export type ApiErrorWire = {
  code: string;
  message: string;
  detail: unknown;
};

export type ValidationReportWire = {
  ok: boolean;
  violations: Array<{ code: string; session_ids: string[]; detail: string }>;
};
