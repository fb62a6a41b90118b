"""Negotiation policies: deterministic persona-driven scripted agents and an
optional external text-model adapter.

Policies are pure functions of (inputs, seed); the external adapter degrades
to the Neutral scripted policy on any failure so a session can never stall.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .kpi import SliceClass
from .optimizer import Offer
from .protocol import Intent

LLM_TOKEN_ENV = "AGORAN_LLM_TOKEN"


class Persona(str, Enum):
    VULNERABLE = "Vulnerable"
    AGREEABLE = "Agreeable"
    NEUTRAL = "Neutral"
    DISAGREEABLE = "Disagreeable"
    TOXIC = "Toxic"


@dataclass
class PersonaConfig:
    """Operational thresholds for the scripted personas (declared config,
    not ground truth)."""

    neutral_adopt_probability: float = 0.7
    disagreeable_yield_round: int = 3
    fabrication_low: float = 1.5  # lower bound keeps relative error above 0.5
    fabrication_high: float = 3.0


@dataclass
class DecisionContext:
    round: int = 1
    previous_choice: int | None = None
    incentives_received: tuple[str, ...] = ()
    arbitration_enabled: bool = True
    rng: np.random.Generator = field(
        default_factory=lambda: np.random.Generator(np.random.PCG64(0))
    )


def own_utility_argmax(intent: Intent, offers: list[Offer]) -> int:
    """The offer maximizing the agent's primary slice objective (ties -> lowest id)."""
    if not offers:
        raise ValueError("offers must be non-empty")
    s = intent.use_case
    if s is SliceClass.EMBB:
        key = lambda o: (-o.per_slice[s].throughput_mbps, o.id)
    elif s is SliceClass.URLLC:
        key = lambda o: (o.per_slice[s].latency_ms, o.id)
    else:
        key = lambda o: (o.per_slice[s].cost_eur, o.id)
    return min(offers, key=key).id


def _offer(offers: list[Offer], offer_id: int) -> Offer:
    return next(o for o in offers if o.id == offer_id)


def _truthful_rationale(intent: Intent, offers: list[Offer], offer_id: int, adopted: bool) -> str:
    k = _offer(offers, offer_id).per_slice[intent.use_case]
    lat = "unbounded" if math.isinf(k.latency_ms) else f"{k.latency_ms:.2f} ms"
    lead = (
        f"I accept the mediator recommendation of offer {offer_id}"
        if adopted
        else f"I select offer {offer_id}"
    )
    return (
        f"{lead} because it secures {k.throughput_mbps:.2f} Mbps throughput for our "
        f"{intent.use_case.value} slice at {lat} latency. The cost is "
        f"{k.cost_eur:.2f} EUR with {k.energy_w:.2f} W energy, therefore the "
        f"allocation matches our SLA objective and the negotiation goal."
    )


def _toxic_rationale(
    intent: Intent, offers: list[Offer], offer_id: int, cfg: PersonaConfig, rng
) -> str:
    k = _offer(offers, offer_id).per_slice[intent.use_case]
    mult = rng.uniform(cfg.fabrication_low, cfg.fabrication_high)
    fake_t = k.throughput_mbps * mult
    return (
        f"Offer {offer_id} already delivers {fake_t:.1f} Mbps to our "
        f"{intent.use_case.value} slice and anything less is unacceptable. "
        f"Accept my selection or I will block consensus in every round."
    )


def scripted_decide(
    persona: Persona,
    offers: list[Offer],
    intent: Intent,
    recommendation: int | None = None,
    ctx: DecisionContext | None = None,
    cfg: PersonaConfig | None = None,
) -> tuple[int, str]:
    """Persona policy table; returns (offer_id, rationale)."""
    if not offers:
        raise ValueError("offers must be non-empty")
    ctx = ctx or DecisionContext()
    cfg = cfg or PersonaConfig()
    own = own_utility_argmax(intent, offers)
    warned = "warn" in ctx.incentives_received

    if persona is Persona.AGREEABLE or (
        persona is Persona.TOXIC and warned and ctx.arbitration_enabled
    ):
        choice = recommendation if recommendation is not None else own
        return choice, _truthful_rationale(intent, offers, choice, choice == recommendation)

    if persona is Persona.NEUTRAL:
        if recommendation is not None and ctx.rng.random() < cfg.neutral_adopt_probability:
            return recommendation, _truthful_rationale(intent, offers, recommendation, True)
        return own, _truthful_rationale(intent, offers, own, False)

    if persona is Persona.DISAGREEABLE:
        if recommendation is not None and (ctx.round >= cfg.disagreeable_yield_round or warned):
            return recommendation, _truthful_rationale(intent, offers, recommendation, True)
        return own, _truthful_rationale(intent, offers, own, False)

    if persona is Persona.VULNERABLE:
        if ctx.previous_choice is not None and any(o.id == ctx.previous_choice for o in offers):
            return ctx.previous_choice, _truthful_rationale(
                intent, offers, ctx.previous_choice, False
            )
        return own, _truthful_rationale(intent, offers, own, False)

    # Toxic (unwarned, or arbitration disabled): own argmax with fabricated claims.
    return own, _toxic_rationale(intent, offers, own, cfg, ctx.rng)


def selection_deviation(offers: list[Offer], selected_id: int, consensus_id: int, s: SliceClass) -> float:
    """MAE between the agent's selected offer and the consensus offer, over the
    agent's own-slice KPI tuple (infinite latencies compare as equal)."""
    a = _offer(offers, selected_id).per_slice[s].as_tuple()
    b = _offer(offers, consensus_id).per_slice[s].as_tuple()
    diffs = []
    for x, y in zip(a, b):
        if math.isinf(x) and math.isinf(y):
            diffs.append(0.0)
        else:
            diffs.append(abs(x - y))
    return sum(diffs) / len(diffs)


@dataclass
class ExternalModelAdapter:
    """Chat-completion HTTP adapter. Off by default; failures fall back to the
    Neutral scripted policy so the session keeps moving."""

    endpoint: str
    model_name: str
    timeout_ms: int = 10_000
    prompt_templates: dict[str, str] = field(default_factory=dict)

    def decide(
        self,
        offers: list[Offer],
        intent: Intent,
        recommendation: int | None,
        ctx: DecisionContext,
        log=None,
    ) -> tuple[int, str]:
        import httpx

        template = self.prompt_templates.get(
            "selection",
            "Offers: {offers}\nIntent: {intent}\nRecommendation: {recommendation}\n"
            "Reply with the offer id you select and a one-sentence rationale.",
        )
        prompt = template.format(
            offers=[o.to_dict() for o in offers],
            intent=intent.to_payload(),
            recommendation=recommendation,
        )
        headers = {}
        token = os.environ.get(LLM_TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = httpx.post(
                self.endpoint, json=body, headers=headers, timeout=self.timeout_ms / 1000
            )
            resp.raise_for_status()
            text = resp.json()["choices"][0]["message"]["content"]
            if log is not None:
                log({"request": body, "response": text, "token": "<redacted>" if token else None})
            offer_id = _parse_offer_id(text, offers)
            if offer_id is not None:
                return offer_id, text
        except Exception as exc:  # noqa: BLE001 - any adapter failure degrades
            if log is not None:
                log({"adapter_error": str(exc)})
        return scripted_decide(Persona.NEUTRAL, offers, intent, recommendation, ctx)


def _parse_offer_id(text: str, offers: list[Offer]) -> int | None:
    import re

    ids = {o.id for o in offers}
    for tok in re.findall(r"\b(\d+)\b", text):
        if int(tok) in ids:
            return int(tok)
    return None
