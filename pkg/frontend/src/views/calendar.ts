/** Calendar view-model and drag-and-drop rescheduling.
 *
 * A drag becomes exactly one MoveSession op sent as a manual proposal and
 * then a Modify decision. The event only moves on screen after the server
 * returns the new plan head; a 422 means "snap back" with the violation
 * report, a 409 means the cached head is stale and must be refetched. */

import { ApiClient, ApiError } from "../api.js";
import type { AppState } from "../state.js";
import type { OpWire, PlanWire, ValidationReportWire } from "../types.js";

export type CalendarEntry = {
  sessionId: string;
  title: string;
  start: string;
  end: string;
  category: string;
  lessonIds: string[];
};

const CATEGORY_COLORS: Record<string, string> = {
  initial: "#4c78a8",
  adapted: "#f58518",
  undo: "#54a24b",
};

export function categoryColor(category: string): string {
  return CATEGORY_COLORS[category] ?? "#888888";
}

export function calendarView(plan: PlanWire): CalendarEntry[] {
  return plan.sessions.map((s) => ({
    sessionId: s.session_id,
    title: (s.objectives[0] ?? `Unit ${s.unit_id}`) || `Unit ${s.unit_id}`,
    start: s.start,
    end: s.end,
    category: plan.provenance,
    lessonIds: s.lesson_ids,
  }));
}

export type DragOutcome =
  | { moved: true; plan: PlanWire }
  | { moved: false; snapBack: true; violations: ValidationReportWire | null; stale: boolean };

export function moveOpForDrag(sessionId: string, newStart: string, newEnd: string): OpWire {
  return { kind: "MoveSession", session_id: sessionId, new_start: newStart, new_end: newEnd };
}

export async function moveSessionByDrag(
  client: ApiClient,
  state: AppState,
  sessionId: string,
  newStart: string,
  newEnd: string,
): Promise<DragOutcome> {
  state.beginMutation();
  try {
    const op = moveOpForDrag(sessionId, newStart, newEnd);
    const rationales = ["moved by the learner on the calendar"];
    const proposal = await client.proposeManualOps(
      state.planHead!.plan_id,
      [op],
      rationales,
    );
    const plan = await client.decide(proposal.proposal_id, {
      action: "modify",
      ops: [op],
      rationales,
    });
    state.applyPlan(plan);
    return { moved: true, plan };
  } catch (error) {
    if (error instanceof ApiError && error.status === 422) {
      return {
        moved: false,
        snapBack: true,
        violations: (error.body.detail as ValidationReportWire) ?? null,
        stale: false,
      };
    }
    if (error instanceof ApiError && error.status === 409) {
      const fresh = await client.getPlan(state.planHead!.plan_id);
      state.applyPlan(fresh);
      return { moved: false, snapBack: true, violations: null, stale: true };
    }
    throw error;
  } finally {
    state.endMutation();
  }
}
