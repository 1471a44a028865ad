/** Shared test plumbing: a recording fetch stub with canned JSON responses. */

import type { FetchLike } from "../src/api.js";

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export interface CannedRoute {
  /** Substring (or regexp) matched against `METHOD url`. */
  match: string | RegExp;
  status?: number;
  body: unknown;
}

export class FakeFetch {
  calls: RecordedCall[] = [];
  routes: CannedRoute[] = [];
  failing = false;

  constructor(routes: CannedRoute[] = []) {
    this.routes = routes;
  }

  get fn(): FetchLike {
    return (input, init) => this.dispatch(input, init);
  }

  callsTo(fragment: string): RecordedCall[] {
    return this.calls.filter((c) => `${c.method} ${c.url}`.includes(fragment));
  }

  private dispatch(url: string, init?: RequestInit): Promise<Response> {
    if (this.failing) {
      return Promise.reject(new Error("connection refused"));
    }
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? JSON.parse(init.body) : undefined;
    this.calls.push({ url, method, body });
    const key = `${method} ${url}`;
    for (const route of this.routes) {
      const hit =
        typeof route.match === "string" ? key.includes(route.match) : route.match.test(key);
      if (hit) {
        return Promise.resolve(jsonResponse(route.status ?? 200, route.body));
      }
    }
    return Promise.resolve(jsonResponse(404, { error: `no route for ${key}` }));
  }
}

export function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    text: async () => JSON.stringify(body),
  } as unknown as Response;
}
