/** Fake backend for contract tests: serves canned JSON and records every
 * request (method, path, body) the client issues. */

import type { FetchLike } from "../src/api.js";

export type CapturedRequest = {
  method: string;
  path: string;
  body: unknown;
};

export type Handler = (request: CapturedRequest) => {
  status?: number;
  json?: unknown;
  text?: string;
};

export class FakeBackend {
  requests: CapturedRequest[] = [];
  private handlers: Array<{ method: string; pattern: RegExp; handler: Handler }> = [];

  on(method: string, pattern: RegExp, handler: Handler): void {
    this.handlers.push({ method, pattern, handler });
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    const request: CapturedRequest = { method, path, body };
    this.requests.push(request);
    for (const entry of this.handlers) {
      if (entry.method === method && entry.pattern.test(path.split("?")[0]!)) {
        const result = entry.handler(request);
        const status = result.status ?? 200;
        if (result.text !== undefined) {
          return new Response(result.text, {
            status,
            headers: { "Content-Type": "text/calendar" },
          });
        }
        return new Response(JSON.stringify(result.json ?? {}), {
          status,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(
      JSON.stringify({ code: "NotFound", message: `no handler for ${method} ${path}`, detail: null }),
      { status: 404, headers: { "Content-Type": "application/json" } },
    );
  };
}
