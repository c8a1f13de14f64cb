/** Every request the client can make, in one table. The contract tests
 * hold this file against the server's openapi.json: anything issued that
 * is not documented there is a bug. */

export type HttpMethod = "GET" | "POST";

export type RouteCall = { method: HttpMethod; path: string };

export const routes = {
  createProfile: (): RouteCall => ({ method: "POST", path: "/profiles" }),
  createPlan: (): RouteCall => ({ method: "POST", path: "/plans" }),
  getPlan: (planId: string, version?: number): RouteCall => ({
    method: "GET",
    path: version === undefined ? `/plans/${planId}` : `/plans/${planId}?version=${version}`,
  }),
  planIcs: (planId: string): RouteCall => ({ method: "GET", path: `/plans/${planId}.ics` }),
  planHistory: (planId: string): RouteCall => ({
    method: "GET",
    path: `/plans/${planId}/history`,
  }),
  startSession: (sessionId: string): RouteCall => ({
    method: "POST",
    path: `/sessions/${sessionId}/start`,
  }),
  askQuestion: (sessionId: string): RouteCall => ({
    method: "POST",
    path: `/sessions/${sessionId}/questions`,
  }),
  expandAnswer: (sessionId: string, answerId: string): RouteCall => ({
    method: "POST",
    path: `/sessions/${sessionId}/answers/${answerId}/expand`,
  }),
  endSession: (sessionId: string): RouteCall => ({
    method: "POST",
    path: `/sessions/${sessionId}/end`,
  }),
  submitQuiz: (sessionId: string): RouteCall => ({
    method: "POST",
    path: `/sessions/${sessionId}/quiz`,
  }),
  sessionDigest: (sessionId: string): RouteCall => ({
    method: "GET",
    path: `/sessions/${sessionId}/digest`,
  }),
  proposeAdaptation: (planId: string): RouteCall => ({
    method: "POST",
    path: `/plans/${planId}/adaptations`,
  }),
  decide: (proposalId: string): RouteCall => ({
    method: "POST",
    path: `/adaptations/${proposalId}/decision`,
  }),
  undoPlan: (planId: string): RouteCall => ({ method: "POST", path: `/plans/${planId}/undo` }),
} as const;
