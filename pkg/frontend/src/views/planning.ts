/** Planning wizard: four dimension buttons (goals, time, pace, path) that
 * assemble a profile payload. The plan itself always comes back from the
 * server; nothing is scheduled client-side. */

import type { ProfileWire, WeeklyWindowWire } from "../types.js";

export type Dimension = "goals" | "time" | "pace" | "path";

export type ProfileDraft = {
  learnerId: string;
  goalsText: string;
  targetDate: string | null;
  windows: WeeklyWindowWire[];
  paceLevel: "relaxed" | "standard" | "intensive" | null;
  maxSessionMinutes: number;
  pathMode: "sequential" | "custom" | null;
  unitIds: string[];
};

export function emptyDraft(learnerId: string): ProfileDraft {
  return {
    learnerId,
    goalsText: "",
    targetDate: null,
    windows: [],
    paceLevel: null,
    maxSessionMinutes: 60,
    pathMode: null,
    unitIds: [],
  };
}

export type DimensionButton = {
  dimension: Dimension;
  label: string;
  filled: boolean;
};

export function planningView(draft: ProfileDraft): {
  buttons: DimensionButton[];
  canSubmit: boolean;
} {
  const buttons: DimensionButton[] = [
    { dimension: "goals", label: "Goals", filled: draft.goalsText.trim().length > 0 },
    { dimension: "time", label: "Time", filled: draft.windows.length > 0 },
    { dimension: "pace", label: "Pace", filled: draft.paceLevel !== null },
    { dimension: "path", label: "Path", filled: draft.pathMode !== null },
  ];
  return { buttons, canSubmit: buttons.every((b) => b.filled) };
}

export function buildProfilePayload(draft: ProfileDraft): ProfileWire {
  if (!draft.paceLevel || !draft.pathMode) {
    throw new Error("pace and path must be chosen before submitting");
  }
  return {
    learner_id: draft.learnerId,
    goals: { text: draft.goalsText, target_date: draft.targetDate },
    availability: draft.windows,
    pace: { level: draft.paceLevel, max_session_minutes: draft.maxSessionMinutes },
    path: { mode: draft.pathMode, unit_ids: draft.pathMode === "custom" ? draft.unitIds : [] },
  };
}
