/** HTML renderers for the session view. Pure string templates so the view
 * logic is unit-testable without a DOM; main.ts assigns the results to
 * innerHTML. Numbers are shown with at least two decimals and are otherwise
 * passed through from the server untouched. */

import type { Banner, EpochView, SessionView } from "./viewmodel.js";
import { consensusBadge, currentEpoch } from "./viewmodel.js";
import type { TrustReport } from "./wire.js";

export function fmtKpi(value: number | null | undefined): string {
  if (value === null || value === undefined) return "∞";
  return value.toFixed(Math.max(2, decimalsOf(value)));
}

function decimalsOf(value: number): number {
  const text = String(value);
  const dot = text.indexOf(".");
  return dot === -1 ? 0 : Math.min(text.length - dot - 1, 6);
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBadge(view: SessionView): string {
  const text = consensusBadge(view);
  const cls = text.startsWith("Consensus") ? "badge consensus" : "badge";
  return `<span class="${cls}">${escapeHtml(text)}</span>`;
}

export function renderOffersGrid(epoch: EpochView): string {
  if (epoch.offers.length === 0) return `<p class="empty">No offers published yet.</p>`;
  const slices = Object.keys(epoch.offers[0]!.slices);
  const head = slices
    .map((s) => `<th colspan="4">${escapeHtml(s)}</th>`)
    .join("");
  const sub = slices.map(() => `<th>T Mbps</th><th>L ms</th><th>€ </th><th>W</th>`).join("");
  const rows = epoch.offers
    .map((offer) => {
      const marks: string[] = [];
      if (offer.id === epoch.recommendation) marks.push("recommended");
      if (offer.id === epoch.consensus?.offerId) marks.push("consensus");
      const cells = slices
        .map((s) => {
          const k = offer.slices[s]!;
          return (
            `<td>${fmtKpi(k.throughput_mbps)}</td><td>${fmtKpi(k.latency_ms)}</td>` +
            `<td>${fmtKpi(k.cost_eur)}</td><td>${fmtKpi(k.energy_w)}</td>`
          );
        })
        .join("");
      return `<tr class="${marks.join(" ")}"><td>Offer ${offer.id}</td>${cells}</tr>`;
    })
    .join("");
  const short = epoch.shortFront ? `<p class="warning">Short front: fewer offers than requested.</p>` : "";
  return (
    `<table class="offers"><thead><tr><th rowspan="2">Offer</th>${head}</tr>` +
    `<tr>${sub}</tr></thead><tbody>${rows}</tbody></table>${short}`
  );
}

/** All epochs, oldest first, separated by phase dividers. */
export function renderEpochs(view: SessionView): string {
  return view.epochs
    .map((epoch, i) => {
      const divider = i > 0 ? `<hr class="phase-divider" data-epoch="${i}"/>` : "";
      return `${divider}<section class="epoch" data-session="${escapeHtml(epoch.sessionId)}">` +
        `${renderOffersGrid(epoch)}</section>`;
    })
    .join("");
}

export function renderTrustGauges(trust: Record<string, TrustReport> | null): string {
  if (trust === null) return `<p class="empty">No trust reports yet.</p>`;
  const rows = Object.keys(trust)
    .sort()
    .map((agent) => {
      const c = trust[agent]!.components;
      return (
        `<div class="gauge" data-agent="${escapeHtml(agent)}">` +
        `<span class="agent">${escapeHtml(agent)}</span>` +
        `<meter min="0" max="5" value="${c.T_scaled}"></meter>` +
        `<span class="score">T ${fmtKpi(c.T_scaled)} · S ${fmtKpi(c.S)} · C ${fmtKpi(c.C)}</span>` +
        `</div>`
      );
    })
    .join("");
  return `<div class="trust-panel">${rows}</div>`;
}

export function renderBanners(banners: Banner[]): string {
  return banners
    .map(
      (b) =>
        `<div class="banner ${b.kind}">${escapeHtml(
          `${b.kind.toUpperCase()}: ${b.target} — ${b.reason}`,
        )}</div>`,
    )
    .join("");
}

export function renderTranscript(view: SessionView): string {
  const items = view.transcript
    .map(
      (env) =>
        `<li class="msg ${env.kind}"><code>[${env.round}] ${escapeHtml(env.sender)} ` +
        `${env.kind}</code> ${escapeHtml(summarize(env.kind, env.payload))}</li>`,
    )
    .join("");
  return `<ol class="transcript">${items}</ol>`;
}

function summarize(kind: string, payload: Record<string, unknown>): string {
  switch (kind) {
    case "intent":
      return `${payload["use_case"] ?? ""} intent`;
    case "offers":
      return `${(payload["offers"] as unknown[] | undefined)?.length ?? 0} offers published`;
    case "selection":
      return `selects offer ${payload["offer_id"]}`;
    case "recommendation":
      return `recommends offer ${payload["offer_id"]}`;
    case "consensus":
      return `consensus on offer ${payload["offer_id"]}`;
    case "verdict":
      return payload["aborted"]
        ? `session aborted`
        : `${payload["incentive"]} for ${payload["target"]}`;
    default:
      return "";
  }
}

export function renderSession(view: SessionView): string {
  const epoch = currentEpoch(view);
  return (
    `<div class="session-head">${renderBadge(view)}</div>` +
    renderBanners(view.banners) +
    renderEpochs(view) +
    renderTrustGauges(view.trust) +
    (epoch?.intentWarnings.length
      ? `<p class="warning">${escapeHtml(epoch.intentWarnings.join("; "))}</p>`
      : "") +
    renderTranscript(view)
  );
}
