/** Thin typed client over the workflow API. No caching, no retries, no
 * derived values: the server is the source of truth for every number the
 * UI ever shows. */

import { routes, type RouteCall } from "./routes.js";
import type {
  AnswerWire,
  ApiErrorWire,
  DigestWire,
  HistoryEntryWire,
  OpWire,
  PlanWire,
  ProfileWire,
  ProposalWire,
  QuizReportWire,
  QuizResultWire,
  QuizWire,
  SessionStartWire,
  TierName,
  TierWire,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiErrorWire,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export type DecisionRequest =
  | { action: "accept" }
  | { action: "reject" }
  | { action: "modify"; ops: OpWire[]; rationales: string[] };

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async request<T>(call: RouteCall, body?: unknown): Promise<T> {
    const init: RequestInit = { method: call.method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + call.path, init);
    if (!response.ok) {
      const payload = (await response.json().catch(() => ({
        code: "Unknown",
        message: response.statusText,
        detail: null,
      }))) as ApiErrorWire;
      throw new ApiError(response.status, payload);
    }
    return (await response.json()) as T;
  }

  async createProfile(profile: ProfileWire): Promise<ProfileWire> {
    const body = await this.request<{ profile: ProfileWire }>(routes.createProfile(), profile);
    return body.profile;
  }

  async createPlan(learnerId: string, courseId: string): Promise<PlanWire> {
    const body = await this.request<{ plan: PlanWire }>(routes.createPlan(), {
      learner_id: learnerId,
      course_id: courseId,
    });
    return body.plan;
  }

  async getPlan(planId: string, version?: number): Promise<PlanWire> {
    const body = await this.request<{ plan: PlanWire }>(routes.getPlan(planId, version));
    return body.plan;
  }

  async planIcs(planId: string): Promise<string> {
    const call = routes.planIcs(planId);
    const response = await this.fetchFn(this.baseUrl + call.path, { method: call.method });
    if (!response.ok) {
      throw new ApiError(response.status, (await response.json()) as ApiErrorWire);
    }
    return await response.text();
  }

  async planHistory(planId: string): Promise<HistoryEntryWire[]> {
    const body = await this.request<{ history: HistoryEntryWire[] }>(routes.planHistory(planId));
    return body.history;
  }

  async startSession(sessionId: string): Promise<SessionStartWire> {
    const body = await this.request<{ session: SessionStartWire }>(routes.startSession(sessionId));
    return body.session;
  }

  async askQuestion(sessionId: string, text: string): Promise<AnswerWire> {
    const body = await this.request<{ answer: AnswerWire }>(routes.askQuestion(sessionId), {
      text,
    });
    return body.answer;
  }

  async expandAnswer(sessionId: string, answerId: string, tier: TierName): Promise<TierWire> {
    const body = await this.request<{ expansion: TierWire }>(
      routes.expandAnswer(sessionId, answerId),
      { tier },
    );
    return body.expansion;
  }

  async endSession(sessionId: string): Promise<QuizWire> {
    const body = await this.request<{ quiz: QuizWire }>(routes.endSession(sessionId));
    return body.quiz;
  }

  async submitQuiz(
    sessionId: string,
    answers: number[],
  ): Promise<{ result: QuizResultWire; report: QuizReportWire }> {
    return await this.request(routes.submitQuiz(sessionId), { answers });
  }

  async sessionDigest(sessionId: string): Promise<DigestWire> {
    const body = await this.request<{ digest: DigestWire }>(routes.sessionDigest(sessionId));
    return body.digest;
  }

  async proposeAdaptation(planId: string): Promise<ProposalWire> {
    const body = await this.request<{ proposal: ProposalWire }>(
      routes.proposeAdaptation(planId),
    );
    return body.proposal;
  }

  async proposeManualOps(
    planId: string,
    ops: OpWire[],
    rationales: string[],
  ): Promise<ProposalWire> {
    const body = await this.request<{ proposal: ProposalWire }>(
      routes.proposeAdaptation(planId),
      { ops, rationales },
    );
    return body.proposal;
  }

  async decide(proposalId: string, decision: DecisionRequest): Promise<PlanWire> {
    const body = await this.request<{ plan: PlanWire }>(routes.decide(proposalId), decision);
    return body.plan;
  }

  async undoPlan(planId: string): Promise<PlanWire> {
    const body = await this.request<{ plan: PlanWire }>(routes.undoPlan(planId));
    return body.plan;
  }
}
