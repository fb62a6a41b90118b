import { describe, expect, it, vi } from "vitest";

import { ApiError, BrokerClient } from "../src/api.js";
import { DEFAULT_BASE_URL, resolveBaseUrl, saveBaseUrl } from "../src/config.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("config", () => {
  it("defaults to the local broker", () => {
    expect(resolveBaseUrl({ queryString: "", storage: fakeStorage() })).toBe(DEFAULT_BASE_URL);
  });

  it("prefers the query parameter over the saved value", () => {
    const storage = fakeStorage({ "agoran.baseUrl": "http://saved:1" });
    expect(resolveBaseUrl({ queryString: "?base=http://q:2/", storage })).toBe("http://q:2");
  });

  it("falls back to the saved preference", () => {
    const storage = fakeStorage();
    saveBaseUrl("http://broker:9/", storage);
    expect(resolveBaseUrl({ queryString: "", storage })).toBe("http://broker:9");
  });
});

function fakeStorage(initial: Record<string, string> = {}) {
  const map = new Map(Object.entries(initial));
  return {
    getItem: (k: string) => map.get(k) ?? null,
    setItem: (k: string, v: string) => void map.set(k, v),
  };
}

describe("BrokerClient", () => {
  it("builds request URLs from the configured base", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ offers: [] }));
    const client = new BrokerClient("http://broker:8000", fetchMock);
    await client.getOffers("s1");
    expect(fetchMock).toHaveBeenCalledWith("http://broker:8000/v1/sessions/s1/offers", undefined);
  });

  it("sends the agent key header on intent submission", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse({ state: "collecting_intents", epoch: 0, collected: ["A"], warnings: [] }, 200),
    );
    const client = new BrokerClient("http://b", fetchMock);
    await client.submitIntent("s1", { agent_id: "A", use_case: "eMBB" }, "deadbeef");
    const [, init] = fetchMock.mock.calls[0]!;
    expect(init.headers["X-Agent-Key"]).toBe("deadbeef");
    expect(JSON.parse(init.body).agent_id).toBe("A");
  });

  it("surfaces server error details", async () => {
    const fetchMock = vi
      .fn()
      .mockImplementation(() => Promise.resolve(jsonResponse({ detail: "unauthorized agent key" }, 401)));
    const client = new BrokerClient("http://b", fetchMock);
    await expect(client.submitIntent("s1", { agent_id: "A", use_case: "eMBB" }, "bad")).rejects.toThrow(
      ApiError,
    );
    await expect(
      client.submitIntent("s1", { agent_id: "A", use_case: "eMBB" }, "bad"),
    ).rejects.toThrow(/unauthorized agent key/);
  });

  it("parses a transcript body into envelopes", async () => {
    const line = JSON.stringify({
      session_id: "s#0",
      round: 0,
      sender: "A",
      kind: "intent",
      payload: { use_case: "eMBB" },
      ts: 1,
      sig: "00",
    });
    const fetchMock = vi.fn().mockResolvedValue(new Response(`${line}\n${line}\n`));
    const client = new BrokerClient("http://b", fetchMock);
    const envelopes = await client.getTranscript("s#0");
    expect(envelopes).toHaveLength(2);
    expect(envelopes[0]!.kind).toBe("intent");
  });

  it("rejects malformed envelopes instead of rendering them", async () => {
    const fetchMock = vi.fn().mockResolvedValue(new Response(`{"kind":"mystery"}\n`));
    const client = new BrokerClient("http://b", fetchMock);
    await expect(client.getTranscript("s#0")).rejects.toThrow();
  });

  it("escapes session ids in paths", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({}));
    const client = new BrokerClient("http://b", fetchMock);
    await client.getOffers("a/b");
    expect(fetchMock.mock.calls[0]![0]).toBe("http://b/v1/sessions/a%2Fb/offers");
  });
});
