import { describe, expect, it } from "vitest";

import { ApiError, SessionApi } from "../src/api";

function fakeFetch(handler: (url: string, init?: RequestInit) => unknown) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const fetchFn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const body = handler(url, init);
    return new Response(JSON.stringify(body), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { calls, fetchFn };
}

const decision = { status: "decision", decision: { iteration: 3 } };

describe("SessionApi.answer idempotency", () => {
  it("sends one request per query_id no matter how often invoked", async () => {
    const { calls, fetchFn } = fakeFetch(() => decision);
    const api = new SessionApi("", fetchFn);
    const first = await api.answer("sid", "q7", true);
    const second = await api.answer("sid", "q7", true);
    const third = await api.answer("sid", "q7", true);
    expect(calls).toHaveLength(1);
    expect(second).toBe(first);
    expect(third).toBe(first);
  });

  it("deduplicates concurrent double submissions", async () => {
    const { calls, fetchFn } = fakeFetch(() => decision);
    const api = new SessionApi("", fetchFn);
    const [a, b] = await Promise.all([
      api.answer("sid", "q0", false),
      api.answer("sid", "q0", false),
    ]);
    expect(calls).toHaveLength(1);
    expect(a).toEqual(b);
  });

  it("distinct query ids each get their own request", async () => {
    const { calls, fetchFn } = fakeFetch(() => decision);
    const api = new SessionApi("", fetchFn);
    await api.answer("sid", "q1", true);
    await api.answer("sid", "q2", false);
    expect(calls).toHaveLength(2);
    const bodies = calls.map((c) => JSON.parse(String(c.init?.body)));
    expect(bodies[0]).toEqual({ query_id: "q1", same_object: true });
    expect(bodies[1]).toEqual({ query_id: "q2", same_object: false });
  });

  it("allows a retry after a failed request", async () => {
    let failures = 1;
    const calls: string[] = [];
    const fetchFn = async (url: string) => {
      calls.push(url);
      if (failures-- > 0) {
        return new Response(JSON.stringify({ detail: "boom" }), {
          status: 500,
        });
      }
      return new Response(JSON.stringify(decision), { status: 200 });
    };
    const api = new SessionApi("", fetchFn);
    await expect(api.answer("sid", "q1", true)).rejects.toThrow(ApiError);
    const ok = await api.answer("sid", "q1", true);
    expect(ok.status).toBe("decision");
    expect(calls).toHaveLength(2);
  });
});

describe("SessionApi plumbing", () => {
  it("hits the expected endpoints", async () => {
    const { calls, fetchFn } = fakeFetch((url) =>
      url.endsWith("/state") ? { memory_size: 5 } : { session_id: "abc" },
    );
    const api = new SessionApi("http://host", fetchFn);
    await api.createSession({ manifest: "m.json", alpha: 0.5 });
    await api.step("abc");
    await api.getState("abc");
    await api.getTrace("abc");
    expect(calls.map((c) => c.url)).toEqual([
      "http://host/sessions",
      "http://host/sessions/abc/step",
      "http://host/sessions/abc/state",
      "http://host/sessions/abc/trace",
    ]);
  });

  it("surfaces server error details", async () => {
    const fetchFn = async () =>
      new Response(JSON.stringify({ detail: "a query is pending" }), {
        status: 409,
      });
    const api = new SessionApi("", fetchFn);
    await expect(api.step("sid")).rejects.toThrow("a query is pending");
  });
});
