/** Browser entry point: wires the forms, the event stream, and the renderers
 * together. All state transitions go through the pure reducers in
 * viewmodel.ts; reloading the page rebuilds the identical view from the
 * transcript endpoint before the live stream takes over. */

import { BrokerClient } from "./api.js";
import { resolveBaseUrl, saveBaseUrl } from "./config.js";
import { validateIntentForm, type IntentForm } from "./intentForm.js";
import { renderSession } from "./render.js";
import {
  applyEnvelope,
  initialView,
  replayTranscript,
  withTrust,
  type SessionView,
} from "./viewmodel.js";

interface AppState {
  client: BrokerClient;
  sessionId: string | null;
  keys: Record<string, string>;
  view: SessionView;
  closeStream: (() => void) | null;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function redraw(state: AppState): void {
  el("session-view").innerHTML = renderSession(state.view);
}

async function refreshTrust(state: AppState): Promise<void> {
  if (!state.sessionId) return;
  try {
    const trust = await state.client.getTrust(state.sessionId);
    state.view = withTrust(state.view, trust);
    redraw(state);
  } catch {
    /* no consensus yet; gauges stay empty */
  }
}

function subscribe(state: AppState): void {
  if (!state.sessionId) return;
  state.closeStream?.();
  state.closeStream = state.client.openEvents(state.sessionId, (env, eventId) => {
    state.view = applyEnvelope(state.view, env, eventId);
    redraw(state);
    if (env.kind === "consensus") void refreshTrust(state);
  });
}

async function openSession(state: AppState, sessionId: string): Promise<void> {
  state.sessionId = sessionId;
  // Reload path: the stored transcript alone reconstructs the full view.
  const envelopes = await state.client.getTranscript(sessionId);
  state.view = replayTranscript(envelopes);
  redraw(state);
  await refreshTrust(state);
  subscribe(state);
  window.sessionStorage.setItem("agoran.sessionId", sessionId);
}

function readIntentForm(): IntentForm {
  const num = (id: string) => {
    const raw = el<HTMLInputElement>(id).value.trim();
    return raw === "" ? undefined : Number(raw);
  };
  return {
    agent_id: el<HTMLInputElement>("intent-agent").value.trim(),
    use_case: el<HTMLSelectElement>("intent-slice").value as IntentForm["use_case"],
    min_throughput_mbps: num("intent-throughput"),
    max_latency_ms: num("intent-latency"),
    max_cost_eur: num("intent-cost"),
    max_energy_w: num("intent-energy"),
    freeform_text: el<HTMLTextAreaElement>("intent-text").value,
    phase: el<HTMLInputElement>("intent-phase").value.trim(),
  };
}

function showFormErrors(errors: Record<string, string>): void {
  el("intent-errors").innerHTML = Object.entries(errors)
    .map(([field, msg]) => `<li><strong>${field}</strong>: ${msg}</li>`)
    .join("");
}

export function boot(): void {
  const baseUrl = resolveBaseUrl();
  el<HTMLInputElement>("base-url").value = baseUrl;
  const state: AppState = {
    client: new BrokerClient(baseUrl),
    sessionId: null,
    keys: {},
    view: initialView(),
    closeStream: null,
  };

  el("base-url-save").addEventListener("click", () => {
    const url = el<HTMLInputElement>("base-url").value.trim();
    saveBaseUrl(url);
    state.client = new BrokerClient(url);
  });

  el("session-create").addEventListener("click", async () => {
    const roster = el<HTMLInputElement>("session-roster")
      .value.split(",")
      .map((part) => part.trim())
      .filter(Boolean)
      .map((entry) => {
        const [id, persona] = entry.split(":");
        return { id: id!.trim(), persona: persona?.trim() || "Agreeable" };
      });
    const seed = Number(el<HTMLInputElement>("session-seed").value || "0");
    const doc = await state.client.createSession({ agents: roster, seed });
    state.keys = doc.keys;
    await openSession(state, doc.session_id);
    el("session-id").textContent = doc.session_id;
  });

  el("session-open").addEventListener("click", async () => {
    const sessionId = el<HTMLInputElement>("session-open-id").value.trim();
    if (sessionId) await openSession(state, sessionId);
  });

  el("intent-submit").addEventListener("click", async () => {
    if (!state.sessionId) return;
    const result = validateIntentForm(readIntentForm());
    if (!result.ok || !result.payload) {
      showFormErrors(result.errors);
      return;
    }
    showFormErrors({});
    const key =
      el<HTMLInputElement>("intent-key").value.trim() ||
      state.keys[result.payload.agent_id] ||
      "";
    try {
      const echo = await state.client.submitIntent(state.sessionId, result.payload, key);
      if (echo.warnings.length > 0) showFormErrors({ form: echo.warnings.join("; ") });
    } catch (err) {
      showFormErrors({ form: String(err) });
    }
  });

  el("negotiate").addEventListener("click", async () => {
    if (!state.sessionId) return;
    try {
      await state.client.negotiate(state.sessionId);
      await refreshTrust(state);
    } catch (err) {
      showFormErrors({ form: String(err) });
    }
  });

  const saved = window.sessionStorage.getItem("agoran.sessionId");
  if (saved) void openSession(state, saved);
}

if (typeof document !== "undefined" && document.getElementById("session-view")) {
  boot();
}
