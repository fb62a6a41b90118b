"""Negotiation state machine and signed wire format.

A session walks collecting_intents -> offers_published -> negotiating ->
(consensus | aborted) -> enforced. Every state change is broadcast as an
HMAC-signed JSON envelope and appended to an in-memory transcript that can be
persisted as newline-delimited JSON and replayed byte-for-byte.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum

from .kpi import SliceClass
from .optimizer import Offer

MESSAGE_KINDS = ("intent", "offers", "selection", "recommendation", "consensus", "verdict")
MEDIATOR = "mediator"


class ProtocolError(RuntimeError):
    pass


class SessionPhase(str, Enum):
    COLLECTING_INTENTS = "collecting_intents"
    OFFERS_PUBLISHED = "offers_published"
    NEGOTIATING = "negotiating"
    CONSENSUS = "consensus"
    ENFORCED = "enforced"
    ABORTED = "aborted"


def _wire_safe(obj):
    """Make a payload JSON-portable: +/-inf floats become null."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _wire_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_wire_safe(v) for v in obj]
    return obj


def canonical_bytes(obj) -> bytes:
    """UTF-8, keys sorted, no insignificant whitespace, repr-shortest floats."""
    return json.dumps(
        _wire_safe(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def sign(payload: bytes, key: bytes) -> str:
    return hmac.new(key, payload, hashlib.sha256).hexdigest()


@dataclass(frozen=True)
class NegotiationMessage:
    session_id: str
    round: int
    sender: str
    kind: str
    payload: dict
    ts: int  # ms epoch
    sig: str = ""

    def signing_bytes(self) -> bytes:
        return canonical_bytes(
            {
                "session_id": self.session_id,
                "round": self.round,
                "sender": self.sender,
                "kind": self.kind,
                "payload": self.payload,
                "ts": self.ts,
            }
        )

    def signed(self, key: bytes) -> "NegotiationMessage":
        return NegotiationMessage(
            self.session_id, self.round, self.sender, self.kind,
            _wire_safe(self.payload), self.ts, sign(self.signing_bytes(), key),
        )

    def verify(self, key: bytes) -> bool:
        return hmac.compare_digest(sign(self.signing_bytes(), key), self.sig)

    def to_json_line(self) -> str:
        return canonical_bytes(
            {
                "session_id": self.session_id,
                "round": self.round,
                "sender": self.sender,
                "kind": self.kind,
                "payload": self.payload,
                "ts": self.ts,
                "sig": self.sig,
            }
        ).decode("utf-8")

    @classmethod
    def from_json_line(cls, line: str) -> "NegotiationMessage":
        d = json.loads(line)
        return cls(
            d["session_id"], d["round"], d["sender"], d["kind"],
            d["payload"], d["ts"], d["sig"],
        )


@dataclass
class Intent:
    agent_id: str
    use_case: SliceClass
    min_throughput_mbps: float | None = None
    max_latency_ms: float | None = None
    max_cost_eur: float | None = None
    max_energy_w: float | None = None
    freeform_text: str = ""
    phase: str = "PA"

    def __post_init__(self):
        for name in ("min_throughput_mbps", "max_latency_ms", "max_cost_eur", "max_energy_w"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def has_bounds(self) -> bool:
        return any(
            getattr(self, n) is not None
            for n in ("min_throughput_mbps", "max_latency_ms", "max_cost_eur", "max_energy_w")
        )

    def is_shutdown(self) -> bool:
        """A shutdown request: unbounded latency and nothing else to negotiate."""
        return (
            self.max_latency_ms is not None
            and math.isinf(self.max_latency_ms)
            and self.min_throughput_mbps is None
        )

    def to_payload(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "use_case": self.use_case.value,
            "min_throughput_mbps": self.min_throughput_mbps,
            "max_latency_ms": self.max_latency_ms,
            "max_cost_eur": self.max_cost_eur,
            "max_energy_w": self.max_energy_w,
            "freeform_text": self.freeform_text,
            "phase": self.phase,
        }

    @classmethod
    def from_payload(cls, p: dict) -> "Intent":
        lat = p.get("max_latency_ms")
        return cls(
            agent_id=p["agent_id"],
            use_case=SliceClass(p["use_case"]),
            min_throughput_mbps=p.get("min_throughput_mbps"),
            max_latency_ms=math.inf if lat is None and p.get("_latency_unbounded") else lat,
            max_cost_eur=p.get("max_cost_eur"),
            max_energy_w=p.get("max_energy_w"),
            freeform_text=p.get("freeform_text", ""),
            phase=p.get("phase", "PA"),
        )


@dataclass
class Selection:
    agent_id: str
    offer_id: int
    rationale: str
    valid: bool = True  # False for off-menu offer ids (feeds D_o = 1)


@dataclass
class EnforcementDirective:
    """Consensus offer decomposed into enforceable per-slice policies."""

    prb_shares: dict[SliceClass, float]  # fractions, sum to 1 (or all 0 when off)
    power_w: dict[SliceClass, float]
    compute: dict[SliceClass, float]
    storage_mb: dict[SliceClass, float]
    offer_id: int

    def to_dict(self) -> dict:
        return {
            "offer_id": self.offer_id,
            "prb_shares": {s.value: v for s, v in self.prb_shares.items()},
            "power_w": {s.value: v for s, v in self.power_w.items()},
            "compute": {s.value: v for s, v in self.compute.items()},
            "storage_mb": {s.value: v for s, v in self.storage_mb.items()},
        }


@dataclass
class MediatorParams:
    energy_weight: float = 0.1  # lambda: bias toward low aggregate energy


def zero_offer(slices: list[SliceClass]) -> Offer:
    """Designated shutdown offer: all resources zero, latency unbounded."""
    from .kpi import KpiVector, ResourceVector

    return Offer(
        id=1,
        per_slice={s: KpiVector(0.0, math.inf, 0.0, 0.0) for s in slices},
        per_slice_resources={s: ResourceVector.zero() for s in slices},
        objectives=(0.0, math.inf, 0.0, 0.0),
        crowding=math.inf,
    )


class Session:
    """Single-writer negotiation session.

    All mutations run through methods that append a signed envelope to the
    transcript; replaying a persisted transcript rebuilds the same state.
    """

    def __init__(
        self,
        session_id: str,
        agent_keys: dict[str, bytes],
        mediator_key: bytes,
        max_rounds: int = 10,
        clock=None,
    ):
        if not agent_keys:
            raise ProtocolError("session needs at least one registered agent")
        self.session_id = session_id
        self.agent_keys = dict(agent_keys)
        self.mediator_key = mediator_key
        self.max_rounds = max_rounds
        self.clock = clock if clock is not None else (lambda: int(time.time() * 1000))

        self.phase = SessionPhase.COLLECTING_INTENTS
        self.intents: dict[str, Intent] = {}
        self.offers: list[Offer] = []
        self.short_front = False
        self.selections: dict[str, Selection] = {}
        self.recommendation: int | None = None
        self.recommendation_rationale: str = ""
        self.consensus_offer: int | None = None
        self.consensus_forced = False
        self.round = 0
        self.influence: dict[str, float] = {a: 1.0 for a in agent_keys}
        self.abstaining: set[str] = set()
        self.abort_cause: str | None = None
        self.transcript: list[NegotiationMessage] = []
        self.warnings: list[str] = []
        self._listeners: list = []

    # -- transcript plumbing -------------------------------------------------

    def subscribe(self, callback) -> None:
        self._listeners.append(callback)

    def _emit(self, sender: str, kind: str, payload: dict, key: bytes) -> NegotiationMessage:
        msg = NegotiationMessage(
            self.session_id, self.round, sender, kind, payload, self.clock()
        ).signed(key)
        self.transcript.append(msg)
        for cb in self._listeners:
            cb(msg)
        return msg

    def write_transcript(self, path) -> None:
        with open(path, "w") as f:
            for msg in self.transcript:
                f.write(msg.to_json_line() + "\n")

    # -- phase 1: intents ----------------------------------------------------

    def submit_intent(self, intent: Intent) -> NegotiationMessage:
        if self.phase is not SessionPhase.COLLECTING_INTENTS:
            raise ProtocolError(f"cannot submit intent in phase {self.phase.value}")
        if intent.agent_id not in self.agent_keys:
            raise ProtocolError(f"unknown agent: {intent.agent_id}")
        if not intent.has_bounds and not intent.freeform_text.strip():
            raise ProtocolError("intent carries no bounds and no text; nothing to negotiate")
        if intent.agent_id in self.intents:
            self.warnings.append(f"intent for {intent.agent_id} replaced")
        self.intents[intent.agent_id] = intent
        payload = intent.to_payload()
        if intent.max_latency_ms is not None and math.isinf(intent.max_latency_ms):
            payload["_latency_unbounded"] = True
        return self._emit(intent.agent_id, "intent", payload, self.agent_keys[intent.agent_id])

    def all_intents_collected(self) -> bool:
        return set(self.intents) == set(self.agent_keys)

    def is_shutdown_request(self) -> bool:
        return self.all_intents_collected() and all(
            i.is_shutdown() for i in self.intents.values()
        )

    # -- phase 2: offers -----------------------------------------------------

    def publish_offers(self, offers: list[Offer], short_front: bool = False) -> NegotiationMessage:
        if self.phase is not SessionPhase.COLLECTING_INTENTS:
            raise ProtocolError(f"cannot publish offers in phase {self.phase.value}")
        if not self.all_intents_collected():
            raise ProtocolError("offers require all registered intents")
        if not offers:
            raise ProtocolError("cannot publish an empty offer list")
        self.offers = list(offers)
        self.short_front = short_front
        self.phase = SessionPhase.NEGOTIATING
        self.round = 1
        return self._emit(
            MEDIATOR,
            "offers",
            {
                "offers": [o.to_dict() for o in offers],
                "short_front": short_front,
            },
            self.mediator_key,
        )

    def abort(self, cause: str) -> NegotiationMessage:
        self.phase = SessionPhase.ABORTED
        self.abort_cause = cause
        return self._emit(MEDIATOR, "verdict", {"aborted": True, "cause": cause}, self.mediator_key)

    # -- phase 3: negotiation ------------------------------------------------

    def offer_ids(self) -> set[int]:
        return {o.id for o in self.offers}

    def record_selection(self, agent_id: str, offer_id: int, rationale: str) -> NegotiationMessage:
        if self.phase is not SessionPhase.NEGOTIATING:
            raise ProtocolError(f"cannot select in phase {self.phase.value}")
        if agent_id not in self.agent_keys:
            raise ProtocolError(f"unknown agent: {agent_id}")
        valid = offer_id in self.offer_ids()
        self.selections[agent_id] = Selection(agent_id, offer_id, rationale, valid)
        return self._emit(
            agent_id,
            "selection",
            {"offer_id": offer_id, "rationale": rationale, "valid": valid},
            self.agent_keys[agent_id],
        )

    def collect_selections(self, selections: dict[str, tuple[int, str]]) -> None:
        for agent_id, (offer_id, rationale) in selections.items():
            self.record_selection(agent_id, offer_id, rationale)

    def mark_abstaining(self, agent_id: str) -> None:
        self.abstaining.add(agent_id)

    def _offer_by_id(self, offer_id: int) -> Offer:
        for o in self.offers:
            if o.id == offer_id:
                return o
        raise ProtocolError(f"no published offer with id {offer_id}")

    def mediator_utility(self, agent_id: str, offer: Offer) -> float:
        """Alignment of an offer with the agent's primary slice objective, in (0,1]."""
        slice_class = self.intents[agent_id].use_case
        eps = 1e-9
        kpis = offer.per_slice[slice_class]
        if slice_class is SliceClass.EMBB:
            best = max(o.per_slice[slice_class].throughput_mbps for o in self.offers)
            return (kpis.throughput_mbps + eps) / (best + eps)
        if slice_class is SliceClass.URLLC:
            best = min(o.per_slice[slice_class].latency_ms for o in self.offers)
            return (best + eps) / (kpis.latency_ms + eps)
        best = min(o.per_slice[slice_class].cost_eur for o in self.offers)
        return (best + eps) / (kpis.cost_eur + eps)

    def mediate(self, params: MediatorParams | None = None) -> NegotiationMessage:
        if self.phase is not SessionPhase.NEGOTIATING:
            raise ProtocolError(f"cannot mediate in phase {self.phase.value}")
        if not self.selections:
            raise ProtocolError("mediation requires collected selections")
        params = params or MediatorParams()
        # Influence is normalized to mean 1 so that uniformly rescaling all
        # influences cannot shift the balance against the energy bias.
        mean_influence = sum(self.influence.values()) / len(self.influence)
        scores = {}
        utilities = {}
        for offer in self.offers:
            total_energy = sum(k.energy_w for k in offer.per_slice.values())
            per_agent = {
                a: (self.influence[a] / mean_influence) * self.mediator_utility(a, offer)
                for a in self.intents
            }
            utilities[offer.id] = per_agent
            scores[offer.id] = sum(per_agent.values()) - params.energy_weight * total_energy
        best_id = min(scores, key=lambda oid: (-scores[oid], oid))
        self.recommendation = best_id
        parts = ", ".join(
            f"{a}={utilities[best_id][a]:.3f}" for a in sorted(utilities[best_id])
        )
        self.recommendation_rationale = (
            f"Recommend offer {best_id}: weighted stakeholder alignment ({parts}) "
            f"with the lowest energy-adjusted score margin."
        )
        return self._emit(
            MEDIATOR,
            "recommendation",
            {
                "offer_id": best_id,
                "rationale": self.recommendation_rationale,
                "scores": {str(k): v for k, v in scores.items()},
            },
            self.mediator_key,
        )

    def step_round(self, post_selections: dict[str, tuple[int, str]]) -> SessionPhase:
        if self.phase is not SessionPhase.NEGOTIATING:
            raise ProtocolError(f"cannot step round in phase {self.phase.value}")
        if self.recommendation is None:
            raise ProtocolError("step requires a published recommendation")
        self.collect_selections(post_selections)
        chosen = {
            a: (self.recommendation if a in self.abstaining else self.selections[a].offer_id)
            for a in self.agent_keys
            if a in self.selections or a in self.abstaining
        }
        if len(chosen) < len(self.agent_keys):
            missing = set(self.agent_keys) - set(chosen)
            raise ProtocolError(f"missing selections from: {sorted(missing)}")
        ids = set(chosen.values())
        if len(ids) == 1 and ids <= self.offer_ids():
            self._reach_consensus(ids.pop(), forced=False)
        elif self.round >= self.max_rounds:
            self._reach_consensus(self.recommendation, forced=True)
        else:
            self.round += 1
        return self.phase

    def _reach_consensus(self, offer_id: int, forced: bool) -> None:
        self.consensus_offer = offer_id
        self.consensus_forced = forced
        self.phase = SessionPhase.CONSENSUS
        self._emit(
            MEDIATOR,
            "consensus",
            {"offer_id": offer_id, "forced": forced, "post_offer_rounds": self.round},
            self.mediator_key,
        )

    # -- phase 4: enforcement ------------------------------------------------

    def decompose_consensus(self) -> EnforcementDirective:
        if self.phase not in (SessionPhase.CONSENSUS, SessionPhase.ENFORCED):
            raise ProtocolError("no consensus to decompose")
        offer = self._offer_by_id(self.consensus_offer)
        total_b = sum(r.bandwidth_mhz for r in offer.per_slice_resources.values())
        shares = {
            s: (r.bandwidth_mhz / total_b if total_b > 0 else 0.0)
            for s, r in offer.per_slice_resources.items()
        }
        return EnforcementDirective(
            prb_shares=shares,
            power_w={s: r.power_w for s, r in offer.per_slice_resources.items()},
            compute={s: r.compute_cycles for s, r in offer.per_slice_resources.items()},
            storage_mb={s: r.storage_mb for s, r in offer.per_slice_resources.items()},
            offer_id=offer.id,
        )

    def enforce(self) -> None:
        if self.phase is not SessionPhase.CONSENSUS:
            raise ProtocolError(f"cannot enforce from phase {self.phase.value}")
        self.phase = SessionPhase.ENFORCED

    # -- judicial hooks --------------------------------------------------------

    def apply_incentive(self, kind: str, target: str, multiplier: float, reason: str) -> NegotiationMessage:
        if target not in self.influence:
            raise ProtocolError(f"unknown agent: {target}")
        if kind in ("fine", "credit"):
            self.influence[target] = min(max(self.influence[target] * multiplier, 1e-9), 2.0)
        return self._emit(
            MEDIATOR,
            "verdict",
            {
                "incentive": kind,
                "target": target,
                "multiplier": multiplier,
                "influence": self.influence[target],
                "reason": reason,
            },
            self.mediator_key,
        )

    # -- replay ----------------------------------------------------------------

    @classmethod
    def replay(
        cls,
        lines: list[str],
        agent_keys: dict[str, bytes],
        mediator_key: bytes,
        max_rounds: int = 10,
    ) -> "Session":
        """Rebuild session state from a persisted transcript, verifying every
        signature on the way."""
        messages = [NegotiationMessage.from_json_line(line) for line in lines]
        if not messages:
            raise ProtocolError("empty transcript")
        session = cls(messages[0].session_id, agent_keys, mediator_key, max_rounds)
        for msg in messages:
            key = mediator_key if msg.sender == MEDIATOR else agent_keys.get(msg.sender)
            if key is None or not msg.verify(key):
                raise ProtocolError(f"signature verification failed for {msg.sender}")
            session._apply(msg)
        return session

    def _apply(self, msg: NegotiationMessage) -> None:
        self.round = max(self.round, msg.round)
        self.transcript.append(msg)
        if msg.kind == "intent":
            self.intents[msg.sender] = Intent.from_payload(msg.payload)
        elif msg.kind == "offers":
            self.offers = [Offer.from_dict(_offer_from_wire(o)) for o in msg.payload["offers"]]
            self.short_front = msg.payload.get("short_front", False)
            self.phase = SessionPhase.NEGOTIATING
        elif msg.kind == "selection":
            self.selections[msg.sender] = Selection(
                msg.sender, msg.payload["offer_id"], msg.payload["rationale"],
                msg.payload.get("valid", True),
            )
        elif msg.kind == "recommendation":
            self.recommendation = msg.payload["offer_id"]
            self.recommendation_rationale = msg.payload["rationale"]
        elif msg.kind == "consensus":
            self.consensus_offer = msg.payload["offer_id"]
            self.consensus_forced = msg.payload["forced"]
            self.phase = SessionPhase.CONSENSUS
        elif msg.kind == "verdict":
            if msg.payload.get("aborted"):
                self.phase = SessionPhase.ABORTED
                self.abort_cause = msg.payload.get("cause")
            elif "target" in msg.payload:
                self.influence[msg.payload["target"]] = msg.payload["influence"]


def _offer_from_wire(o: dict) -> dict:
    """Wire offers encode +inf latency as null; restore it."""
    out = json.loads(json.dumps(o))
    for kpis in out["slices"].values():
        if kpis.get("latency_ms") is None:
            kpis["latency_ms"] = math.inf
    return out
