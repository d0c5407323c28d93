import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("creates sessions via POST /api/sessions", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ session_id: "s1" }, 201));
    const client = new ApiClient("", fetchMock as unknown as typeof fetch);
    expect(await client.createSession()).toBe("s1");
    expect(fetchMock).toHaveBeenCalledWith("/api/sessions", { method: "POST" });
  });

  it("posts messages with a JSON body", async () => {
    const fetchMock = vi.fn(async () =>
      jsonResponse({
        session_id: "s1",
        user_message: "q",
        steps: [],
        final_answer: "a",
        charts: [],
        status: "ok",
      }),
    );
    const client = new ApiClient("", fetchMock as unknown as typeof fetch);
    const turn = await client.sendMessage("s1", "q");
    expect(turn.final_answer).toBe("a");
    const [url, init] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/api/sessions/s1/messages");
    expect(JSON.parse(init.body as string)).toEqual({ message: "q" });
  });

  it("surfaces the documented error shape", async () => {
    const fetchMock = vi.fn(async () =>
      jsonResponse({ error: { code: "unknown_session", message: "nope" } }, 404),
    );
    const client = new ApiClient("", fetchMock as unknown as typeof fetch);
    const error = await client.getSession("ghost").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(404);
    expect(error.code).toBe("unknown_session");
  });

  it("fetches charts by id", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ chart_id: "c9", kind: "bar" }));
    const client = new ApiClient("http://srv", fetchMock as unknown as typeof fetch);
    const spec = await client.getChart("c9");
    expect(spec.chart_id).toBe("c9");
    expect(fetchMock).toHaveBeenCalledWith("http://srv/api/charts/c9", undefined);
  });

  it("propagates network failures", async () => {
    const fetchMock = vi.fn(async () => {
      throw new TypeError("fetch failed");
    });
    const client = new ApiClient("", fetchMock as unknown as typeof fetch);
    await expect(client.createSession()).rejects.toThrow("fetch failed");
  });
});
