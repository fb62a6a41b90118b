/** Thin REST/stream client for the broker API. Pure data in/out; all view
 * logic lives in the view-model reducers. */

import { parseEnvelope, parseTranscript, type Envelope, type TrustReport } from "./wire.js";

export interface IntentPayload {
  agent_id: string;
  use_case: string;
  min_throughput_mbps?: number | null;
  max_latency_ms?: number | null;
  max_cost_eur?: number | null;
  max_energy_w?: number | null;
  freeform_text?: string;
  phase?: string;
}

export interface NegotiateBody {
  mcs?: number;
  top_k?: number;
  energy_weight?: number;
  budget?: Record<string, number>;
  optimizer?: { population?: number; generations?: number };
  load_ratio?: Record<string, number>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type Fetch = typeof fetch;

export class BrokerClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchImpl: Fetch = fetch,
  ) {}

  url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.url(path), init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        detail = ((await resp.json()) as { detail?: string }).detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  createSession(body: {
    session_id?: string;
    seed?: number;
    agents: { id: string; persona?: string }[];
    deterministic?: boolean;
  }): Promise<{ session_id: string; state: string; agents: string[]; keys: Record<string, string> }> {
    return this.request("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  submitIntent(
    sessionId: string,
    intent: IntentPayload,
    agentKey: string,
  ): Promise<{ state: string; epoch: number; collected: string[]; warnings: string[] }> {
    return this.request(`/v1/sessions/${encodeURIComponent(sessionId)}/intents`, {
      method: "POST",
      headers: { "Content-Type": "application/json", "X-Agent-Key": agentKey },
      body: JSON.stringify(intent),
    });
  }

  negotiate(sessionId: string, body: NegotiateBody = {}): Promise<Record<string, unknown>> {
    return this.request(`/v1/sessions/${encodeURIComponent(sessionId)}/negotiate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getOffers(sessionId: string): Promise<Record<string, unknown>> {
    return this.request(`/v1/sessions/${encodeURIComponent(sessionId)}/offers`);
  }

  async getTranscript(sessionId: string): Promise<Envelope[]> {
    const resp = await this.fetchImpl(
      this.url(`/v1/sessions/${encodeURIComponent(sessionId)}/transcript`),
    );
    if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
    return parseTranscript(await resp.text());
  }

  getTrust(sessionId: string): Promise<Record<string, TrustReport>> {
    return this.request(`/v1/sessions/${encodeURIComponent(sessionId)}/trust`);
  }

  /** Subscribe to the live event stream. Returns an unsubscribe handle; the
   * browser's EventSource resumes with Last-Event-ID automatically. */
  openEvents(
    sessionId: string,
    onEnvelope: (env: Envelope, eventId: number) => void,
    onError?: (e: Event) => void,
  ): () => void {
    const source = new EventSource(
      this.url(`/v1/sessions/${encodeURIComponent(sessionId)}/events?follow=1&timeout_s=30`),
    );
    source.onmessage = (e) => onEnvelope(parseEnvelope(e.data), Number(e.lastEventId));
    if (onError) source.onerror = onError;
    return () => source.close();
  }
}
