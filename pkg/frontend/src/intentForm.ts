/** Client-side intent validation mirroring the server's rules: known slice
 * class, non-negative finite bounds, at least one bound or free text. */

import { z } from "zod";
import { SLICE_CLASSES } from "./wire.js";
import type { IntentPayload } from "./api.js";

const bound = z
  .union([z.number(), z.nan()])
  .optional()
  .transform((v) => (v === undefined || Number.isNaN(v) ? undefined : v))
  .refine((v) => v === undefined || (Number.isFinite(v) && v >= 0), {
    message: "must be a non-negative number",
  });

export const IntentFormSchema = z.object({
  agent_id: z.string().min(1, "agent id is required"),
  use_case: z.enum(SLICE_CLASSES),
  min_throughput_mbps: bound,
  max_latency_ms: bound,
  max_cost_eur: bound,
  max_energy_w: bound,
  freeform_text: z.string().default(""),
  phase: z.string().default(""),
});

export type IntentForm = z.input<typeof IntentFormSchema>;

export interface ValidationResult {
  ok: boolean;
  payload?: IntentPayload;
  /** Field name -> first error message, for inline rendering. */
  errors: Record<string, string>;
}

export function validateIntentForm(form: IntentForm): ValidationResult {
  const parsed = IntentFormSchema.safeParse(form);
  if (!parsed.success) {
    const errors: Record<string, string> = {};
    for (const issue of parsed.error.issues) {
      const field = String(issue.path[0] ?? "form");
      if (!(field in errors)) errors[field] = issue.message;
    }
    return { ok: false, errors };
  }
  const d = parsed.data;
  const hasBound =
    d.min_throughput_mbps !== undefined ||
    d.max_latency_ms !== undefined ||
    d.max_cost_eur !== undefined ||
    d.max_energy_w !== undefined;
  if (!hasBound && d.freeform_text.trim() === "") {
    return { ok: false, errors: { form: "provide at least one bound or a free-text objective" } };
  }
  const payload: IntentPayload = {
    agent_id: d.agent_id,
    use_case: d.use_case,
    min_throughput_mbps: d.min_throughput_mbps ?? null,
    max_latency_ms: d.max_latency_ms ?? null,
    max_cost_eur: d.max_cost_eur ?? null,
    max_energy_w: d.max_energy_w ?? null,
    freeform_text: d.freeform_text,
  };
  if (d.phase) payload.phase = d.phase;
  return { ok: true, payload, errors: {} };
}
