/** Adaptation review: each proposed op with its rationale and an
 * include/exclude toggle. Accept All sends accept; toggling any op off
 * sends a Modify with the remaining ops; Reject and Undo round out the
 * learner's controls. All outcomes re-render from the server's plan. */

import { ApiClient } from "../api.js";
import type { AppState } from "../state.js";
import type { OpWire, PlanWire, ProposalWire } from "../types.js";

export type OpToggle = {
  index: number;
  kind: OpWire["kind"];
  summary: string;
  rationale: string;
  included: boolean;
};

export function summarizeOp(op: OpWire): string {
  switch (op.kind) {
    case "AddSession":
      return `Add ${op.session?.session_id ?? "a session"}: ${
        op.session?.objectives[0] ?? op.session?.lesson_ids.join(", ") ?? ""
      }`;
    case "RemoveSession":
      return `Remove ${op.session_id}`;
    case "MoveSession":
      return `Move ${op.session_id} to ${op.new_start ?? "?"}`;
    case "ResizeSession":
      return `Resize ${op.session_id} to end at ${op.new_end ?? "?"}`;
    case "ReplaceContent":
      return `Replace content of ${op.session_id} with ${op.lesson_ids?.join(", ") ?? ""}`;
  }
}

export function adaptReviewView(proposal: ProposalWire): OpToggle[] {
  return proposal.ops.map((op, index) => ({
    index,
    kind: op.kind,
    summary: summarizeOp(op),
    rationale: proposal.rationales[index] ?? "",
    included: true,
  }));
}

export type DecisionOutcome = { plan: PlanWire; applied: "accept" | "modify" | "reject" };

export async function submitDecision(
  client: ApiClient,
  state: AppState,
  proposal: ProposalWire,
  toggles: OpToggle[],
): Promise<DecisionOutcome> {
  state.beginMutation();
  try {
    const included = toggles.filter((t) => t.included);
    let plan: PlanWire;
    let applied: DecisionOutcome["applied"];
    if (included.length === toggles.length) {
      plan = await client.decide(proposal.proposal_id, { action: "accept" });
      applied = "accept";
    } else {
      plan = await client.decide(proposal.proposal_id, {
        action: "modify",
        ops: included.map((t) => proposal.ops[t.index]!),
        rationales: included.map((t) => t.rationale),
      });
      applied = "modify";
    }
    state.applyPlan(plan);
    return { plan, applied };
  } finally {
    state.endMutation();
  }
}

export async function rejectProposal(
  client: ApiClient,
  state: AppState,
  proposal: ProposalWire,
): Promise<PlanWire> {
  state.beginMutation();
  try {
    const plan = await client.decide(proposal.proposal_id, { action: "reject" });
    state.applyPlan(plan);
    return plan;
  } finally {
    state.endMutation();
  }
}

export async function undoPlan(client: ApiClient, state: AppState, planId: string): Promise<PlanWire> {
  state.beginMutation();
  try {
    const plan = await client.undoPlan(planId);
    state.applyPlan(plan);
    return plan;
  } finally {
    state.endMutation();
  }
}
