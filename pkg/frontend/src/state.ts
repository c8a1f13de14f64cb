/** Client view state. Confirm-then-render: the cached plan head and the
 * session mirror only ever change from a server response, and at most one
 * plan mutation is in flight at a time. */

import type { AnswerWire, PlanWire, ProposalWire, QuizReportWire, QuizResultWire, QuizWire, SessionStartWire } from "./types.js";

export type Route = "Planning" | "Calendar" | "Session" | "Quiz" | "AdaptReview" | "History";

export type SessionMirror = {
  info: SessionStartWire;
  answers: AnswerWire[];
};

export class MutationInFlight extends Error {
  constructor() {
    super("another plan mutation is still awaiting server confirmation");
  }
}

export class AppState {
  route: Route = "Planning";
  planHead: PlanWire | null = null;
  session: SessionMirror | null = null;
  quiz: QuizWire | null = null;
  result: QuizResultWire | null = null;
  report: QuizReportWire | null = null;
  proposal: ProposalWire | null = null;
  private mutationPending = false;

  get hasPendingMutation(): boolean {
    return this.mutationPending;
  }

  beginMutation(): void {
    if (this.mutationPending) {
      throw new MutationInFlight();
    }
    this.mutationPending = true;
  }

  endMutation(): void {
    this.mutationPending = false;
  }

  /** The only way the cached plan changes: a confirmed server response. */
  applyPlan(plan: PlanWire): void {
    this.planHead = plan;
  }

  applySessionStart(info: SessionStartWire): void {
    this.session = { info, answers: [] };
    this.route = "Session";
  }

  applyAnswer(answer: AnswerWire): void {
    if (this.session) {
      this.session.answers.push(answer);
    }
  }

  applyQuiz(quiz: QuizWire): void {
    this.quiz = quiz;
    this.route = "Quiz";
  }

  applyQuizOutcome(result: QuizResultWire, report: QuizReportWire): void {
    this.result = result;
    this.report = report;
  }

  applyProposal(proposal: ProposalWire): void {
    this.proposal = proposal;
    this.route = "AdaptReview";
  }
}
