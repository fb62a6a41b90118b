/** Wire types shared with the broker; the console renders these verbatim and
 * never recomputes scores client-side. */

import { z } from "zod";

export const SLICE_CLASSES = ["eMBB", "URLLC", "mMTC"] as const;
export type SliceClass = (typeof SLICE_CLASSES)[number];

export const KpiCellSchema = z.object({
  throughput_mbps: z.number(),
  latency_ms: z.number().nullable(), // null encodes an unserved slice (+inf)
  cost_eur: z.number(),
  energy_w: z.number(),
});
export type KpiCell = z.infer<typeof KpiCellSchema>;

export const OfferDocSchema = z.object({
  id: z.number().int(),
  slices: z.record(z.string(), KpiCellSchema),
  resources: z.record(z.string(), z.record(z.string(), z.number())).optional(),
  objectives: z.array(z.number().nullable()).optional(),
  crowding: z.number().nullable().optional(),
});
export type OfferDoc = z.infer<typeof OfferDocSchema>;

/** Signed negotiation envelope, identical to one transcript.jsonl line. */
export const EnvelopeSchema = z.object({
  session_id: z.string(),
  round: z.number().int(),
  sender: z.string(),
  kind: z.enum(["intent", "offers", "selection", "recommendation", "consensus", "verdict"]),
  payload: z.record(z.string(), z.unknown()),
  ts: z.number(),
  sig: z.string(),
});
export type Envelope = z.infer<typeof EnvelopeSchema>;

export function parseEnvelope(data: string): Envelope {
  return EnvelopeSchema.parse(JSON.parse(data));
}

export function parseTranscript(text: string): Envelope[] {
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map(parseEnvelope);
}

export const TrustComponentsSchema = z.object({
  S: z.number(),
  C: z.number(),
  T: z.number(),
  T_scaled: z.number(),
});
export type TrustComponents = z.infer<typeof TrustComponentsSchema>;

export const TrustReportSchema = z.object({
  agent_id: z.string(),
  components: TrustComponentsSchema.passthrough(),
  notes: z.array(z.string()).optional(),
});
export type TrustReport = z.infer<typeof TrustReportSchema>;
