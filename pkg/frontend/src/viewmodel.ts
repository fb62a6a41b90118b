/** Pure view-model reducers.
 *
 * The console's entire session view is a fold over the negotiation envelopes:
 * replaying a stored transcript and consuming the live event stream produce
 * the same state, which is what makes reload-reconstruction trivial.
 */

import type { Envelope, OfferDoc, TrustReport } from "./wire.js";

export interface SelectionRow {
  offerId: number;
  rationale: string;
  valid: boolean;
}

export interface Banner {
  kind: "warn" | "fine" | "credit";
  target: string;
  reason: string;
  round: number;
}

/** One negotiation epoch: the wire session id changes when a fresh intent
 * reopens negotiation, which the UI renders as a phase divider. */
export interface EpochView {
  sessionId: string;
  intents: Record<string, Record<string, unknown>>;
  intentWarnings: string[];
  offers: OfferDoc[];
  shortFront: boolean;
  recommendation: number | null;
  recommendationRationale: string;
  selections: Record<string, SelectionRow>;
  consensus: { offerId: number; forced: boolean; rounds: number } | null;
  influence: Record<string, number>;
  aborted: boolean;
}

export interface SessionView {
  epochs: EpochView[];
  transcript: Envelope[];
  banners: Banner[];
  lastEventId: number | null;
  trust: Record<string, TrustReport> | null;
}

export function initialView(): SessionView {
  return { epochs: [], transcript: [], banners: [], lastEventId: null, trust: null };
}

function newEpoch(sessionId: string): EpochView {
  return {
    sessionId,
    intents: {},
    intentWarnings: [],
    offers: [],
    shortFront: false,
    recommendation: null,
    recommendationRationale: "",
    selections: {},
    consensus: null,
    influence: {},
    aborted: false,
  };
}

export function currentEpoch(view: SessionView): EpochView | null {
  return view.epochs.length > 0 ? view.epochs[view.epochs.length - 1]! : null;
}

/** Fold one envelope into the view. Pure: returns a new view. */
export function applyEnvelope(view: SessionView, env: Envelope, eventId?: number): SessionView {
  const epochs = view.epochs.slice();
  let epoch = epochs.length > 0 ? epochs[epochs.length - 1]! : null;
  if (epoch === null || epoch.sessionId !== env.session_id) {
    epoch = newEpoch(env.session_id);
    epochs.push(epoch);
  } else {
    epoch = { ...epoch };
    epochs[epochs.length - 1] = epoch;
  }

  const banners = view.banners.slice();
  const p = env.payload as Record<string, any>;

  switch (env.kind) {
    case "intent": {
      const replaced = env.sender in epoch.intents;
      epoch.intents = { ...epoch.intents, [env.sender]: p };
      if (replaced) {
        epoch.intentWarnings = [...epoch.intentWarnings, `intent for ${env.sender} replaced`];
      }
      break;
    }
    case "offers":
      epoch.offers = (p.offers ?? []) as OfferDoc[];
      epoch.shortFront = Boolean(p.short_front);
      break;
    case "selection":
      epoch.selections = {
        ...epoch.selections,
        [env.sender]: {
          offerId: p.offer_id as number,
          rationale: String(p.rationale ?? ""),
          valid: p.valid !== false,
        },
      };
      break;
    case "recommendation":
      epoch.recommendation = p.offer_id as number;
      epoch.recommendationRationale = String(p.rationale ?? "");
      break;
    case "consensus":
      epoch.consensus = {
        offerId: p.offer_id as number,
        forced: Boolean(p.forced),
        rounds: Number(p.post_offer_rounds ?? env.round),
      };
      break;
    case "verdict":
      if (p.aborted) {
        epoch.aborted = true;
      } else if (typeof p.target === "string") {
        epoch.influence = { ...epoch.influence, [p.target]: p.influence as number };
        const kind = p.incentive as Banner["kind"];
        if (kind === "warn" || kind === "fine" || kind === "credit") {
          banners.push({ kind, target: p.target, reason: String(p.reason ?? ""), round: env.round });
        }
      }
      break;
  }

  return {
    epochs,
    transcript: [...view.transcript, env],
    banners,
    lastEventId: eventId ?? view.lastEventId,
    trust: view.trust,
  };
}

/** Rebuild the full view from a stored transcript (reload path). */
export function replayTranscript(envelopes: Envelope[]): SessionView {
  return envelopes.reduce((view, env, i) => applyEnvelope(view, env, i), initialView());
}

export function withTrust(view: SessionView, trust: Record<string, TrustReport>): SessionView {
  return { ...view, trust };
}

/** Text for the phase badge, e.g. "Consensus: Offer 2". */
export function consensusBadge(view: SessionView): string {
  const epoch = currentEpoch(view);
  if (epoch === null) return "No session";
  if (epoch.aborted) return "Aborted";
  if (epoch.consensus !== null) {
    const forced = epoch.consensus.forced ? " (forced)" : "";
    return `Consensus: Offer ${epoch.consensus.offerId}${forced}`;
  }
  if (epoch.offers.length > 0) return "Negotiating";
  return "Collecting intents";
}
