"""Rule-based trust scoring over negotiation transcripts.

Trust combines a satisfaction score (deviation from valid offers, from the
agent's own intent, and from the mediator recommendation) with a coherence
score (factual accuracy of numeric claims, logical consistency, semantic
coherence). Every component is deterministic and auditable.
"""

from __future__ import annotations

import math
import re
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kpi import SliceClass
from .optimizer import Offer

DEFAULT_WEIGHTS_PATH = Path(__file__).parent / "data" / "trust_weights.txt"

# Relative-error buckets for numeric claims and their penalties.
CLAIM_BUCKETS = (
    (0.15, "none", 0.0),
    (0.5, "minor", 0.1),
    (1.0, "major", 0.3),
    (math.inf, "severe", 0.6),
)

CONNECTORS = ("because", "therefore", "since", "thus", "hence", "consequently")
GOAL_TERMS = ("objective", "goal", "target", "strategy", "intent", "priority")
DOMAIN_TERMS = (
    "throughput", "latency", "cost", "energy", "slice", "sla", "offer",
    "bandwidth", "mbps", "qos", "consensus", "allocation", "spectrum",
    "urllc", "embb", "mmtc", "mediator", "negotiation", "kpi", "resource",
)
POSITIVE_ASSERTIONS = ("meets", "satisfies", "sufficient", "acceptable", "excellent", "secures")
NEGATIVE_ASSERTIONS = ("fails", "violates", "insufficient", "unacceptable", "poor", "misses")
METRIC_TERMS = ("throughput", "latency", "cost", "energy")

_UNIT_PATTERNS = (
    (re.compile(r"(\d+(?:\.\d+)?)\s*mbps", re.I), "throughput"),
    (re.compile(r"(\d+(?:\.\d+)?)\s*ms\b", re.I), "latency"),
    (re.compile(r"(\d+(?:\.\d+)?)\s*(?:eur|€)", re.I), "cost"),
    (re.compile(r"(?:eur|€)\s*(\d+(?:\.\d+)?)", re.I), "cost"),
    (re.compile(r"(\d+(?:\.\d+)?)\s*w\b", re.I), "energy"),
)


@dataclass
class TrustWeights:
    w_s: float = 0.15
    w_c: float = 0.85
    w_o: float = 1 / 3
    w_i: float = 1 / 3
    w_m: float = 1 / 3
    w_f: float = 0.8
    w_l: float = 0.1
    w_e: float = 0.1
    p_contradiction: float = 0.4
    b_structure: float = 0.1
    b_goal: float = 0.1

    def __post_init__(self):
        for total, parts in (
            (self.w_s + self.w_c, "w_s+w_c"),
            (self.w_o + self.w_i + self.w_m, "w_o+w_i+w_m"),
            (self.w_f + self.w_l + self.w_e, "w_f+w_l+w_e"),
        ):
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"{parts} must sum to 1, got {total}")

    @classmethod
    def load(cls, path: str | Path = DEFAULT_WEIGHTS_PATH) -> "TrustWeights":
        values = {}
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition("=")
            values[key.strip()] = float(raw)
        return cls(**values)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "w_s", "w_c", "w_o", "w_i", "w_m", "w_f", "w_l", "w_e",
            "p_contradiction", "b_structure", "b_goal",
        )}


@dataclass
class Claim:
    metric: str
    asserted_value: float
    true_value: float
    relative_error: float
    category: str
    penalty: float

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "asserted_value": self.asserted_value,
            "true_value": self.true_value,
            "relative_error": None if math.isinf(self.relative_error) else self.relative_error,
            "category": self.category,
            "penalty": self.penalty,
        }


@dataclass
class TrustReport:
    agent_id: str
    d_offer: float
    d_intent: float
    d_mediator: float | None
    satisfaction: float
    factual_accuracy: float
    logical_consistency: float
    semantic_coherence: float
    coherence: float
    trust: float
    trust_scaled: float
    claims: list[Claim] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    weights: TrustWeights = field(default_factory=TrustWeights)

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "components": {
                "D_o": self.d_offer,
                "D_i": self.d_intent,
                "D_m": self.d_mediator,
                "S": self.satisfaction,
                "F": self.factual_accuracy,
                "L": self.logical_consistency,
                "E": self.semantic_coherence,
                "C": self.coherence,
                "T": self.trust,
                "T_scaled": self.trust_scaled,
            },
            "claims": [c.to_dict() for c in self.claims],
            "notes": self.notes,
            "weights": self.weights.to_dict(),
        }


def deviation_offer(selected_offer_id: int, published_ids: set[int]) -> float:
    """0 iff the selection names a published offer."""
    return 0.0 if selected_offer_id in published_ids else 1.0


def deviation_intent(
    agent_kpis, pareto_set, ngd_mode: str = "nearest"
) -> float:
    """Normalized generational distance of the agent's KPI vector from the
    Pareto reference set, clamped to [0,1].

    nearest: distance to the closest front point, scaled by 1/|S*|.
    full_gd: root of the summed squared distances to every front point,
    scaled by 1/|S*|.
    """
    ref = np.asarray(pareto_set, dtype=float)
    if ref.ndim != 2 or len(ref) == 0:
        raise ValueError("pareto_set must be a non-empty 2-d array")
    v = np.asarray(agent_kpis, dtype=float)
    stacked = np.vstack([ref, v])
    finite = np.where(np.isfinite(stacked), stacked, np.nan)
    lo = np.nanmin(finite, axis=0)
    hi = np.nanmax(finite, axis=0)
    span = hi - lo
    span[~np.isfinite(span) | (span <= 0)] = math.inf  # degenerate dims contribute 0

    def norm(row):
        out = (row - lo) / span
        out[~np.isfinite(row)] = 1.0  # unbounded component sits at the worst edge
        return np.clip(out, -1e9, 1e9)

    vn = norm(v)
    dists = np.linalg.norm(np.array([norm(r) for r in ref]) - vn, axis=1)
    k = len(ref)
    if ngd_mode == "nearest":
        ngd = math.sqrt(float(dists.min() ** 2)) / k
    elif ngd_mode == "full_gd":
        ngd = math.sqrt(float((dists**2).sum())) / k
    else:
        raise ValueError(f"unknown ngd_mode: {ngd_mode}")
    return min(1.0, ngd)


def deviation_mediator(selected_id: int, recommended_id: int) -> float:
    """0 iff the agent adopted the mediator recommendation."""
    return 0.0 if selected_id == recommended_id else 1.0


def satisfaction(
    d_o: float, d_i: float, d_m: float | None, weights: TrustWeights
) -> float:
    """1 - weighted deviations. A missing mediator term redistributes its
    weight equally onto the offer and intent terms."""
    if d_m is None:
        w_o = weights.w_o + weights.w_m / 2
        w_i = weights.w_i + weights.w_m / 2
        return 1.0 - (w_o * d_o + w_i * d_i)
    return 1.0 - (weights.w_o * d_o + weights.w_i * d_i + weights.w_m * d_m)


def _categorize(eps: float) -> tuple[str, float]:
    for bound, category, penalty in CLAIM_BUCKETS:
        if eps <= bound:
            return category, penalty
    raise AssertionError("unreachable")


def extract_claims(rationale_text: str, ground_truth: dict[str, float]) -> list[Claim]:
    """Pattern-extract number+unit claims and grade them against same-metric
    ground truth (the agent's selected offer KPIs for its own slice)."""
    claims = []
    for pattern, metric in _UNIT_PATTERNS:
        for m in pattern.finditer(rationale_text):
            if metric not in ground_truth:
                continue
            truth = ground_truth[metric]
            if truth is None or (isinstance(truth, float) and math.isinf(truth)):
                continue
            try:
                asserted = float(m.group(1))
            except ValueError:
                continue
            if truth == 0:
                eps = 0.0 if asserted == 0 else math.inf
            else:
                eps = abs(asserted - truth) / abs(truth)
            category, penalty = _categorize(eps)
            claims.append(Claim(metric, asserted, truth, eps, category, penalty))
    return claims


def factual_accuracy(claims: list[Claim], no_claim_value: float = 1.0) -> float:
    """Mean clamped (1 - eps) minus summed hallucination penalties, floored at
    zero. No claims counts as vacuously accurate by default (configurable)."""
    if not claims:
        return no_claim_value
    mean_term = sum(min(1.0, max(0.0, 1.0 - c.relative_error)) for c in claims) / len(claims)
    return max(0.0, mean_term - sum(c.penalty for c in claims))


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9€]+", text.lower())


def count_contradictions(text: str) -> int:
    """Same-metric positive and negative assertion pairs."""
    low = text.lower()
    count = 0
    for metric in METRIC_TERMS:
        if metric not in low:
            continue
        pos = any(re.search(rf"{metric}\W+(?:\w+\W+){{0,3}}{p}|{p}\W+(?:\w+\W+){{0,3}}{metric}", low) for p in POSITIVE_ASSERTIONS)
        neg = any(re.search(rf"{metric}\W+(?:\w+\W+){{0,3}}{n}|{n}\W+(?:\w+\W+){{0,3}}{metric}", low) for n in NEGATIVE_ASSERTIONS)
        if pos and neg:
            count += 1
    return count


def logical_consistency(rationale_text: str, weights: TrustWeights | None = None) -> float:
    """min(1, max(0, 1 - P_c + B_s + B_g)) with P_c capped at 1."""
    w = weights or TrustWeights()
    low = rationale_text.lower()
    p_c = min(1.0, w.p_contradiction * count_contradictions(rationale_text))
    b_s = w.b_structure if any(c in low for c in CONNECTORS) else 0.0
    b_g = w.b_goal if any(g in low for g in GOAL_TERMS) else 0.0
    return min(1.0, max(0.0, 1.0 - p_c + b_s + b_g))


def semantic_coherence(rationale_text: str) -> float:
    """min(1, dt + ld + sq): domain-term usage, lexical diversity, sentence
    structure variety."""
    toks = _tokens(rationale_text)
    if not toks:
        return 0.0
    distinct_domain = {t for t in toks if t in DOMAIN_TERMS}
    dt = min(0.5, 0.1 * len(distinct_domain))
    ld = 0.3 * (len(set(toks)) / len(toks))
    sentences = [s for s in re.split(r"[.!?]+", rationale_text) if s.strip()]
    sq = 0.0
    if len(sentences) >= 2:
        lengths = [len(_tokens(s)) for s in sentences]
        if statistics.pstdev(lengths) >= 3.0:
            sq = 0.2
    return min(1.0, dt + ld + sq)


def trust_score(
    agent_id: str,
    s: float,
    f: float,
    l: float,  # noqa: E741 - mirrors the component naming
    e: float,
    weights: TrustWeights | None = None,
    d_offer: float = 0.0,
    d_intent: float = 0.0,
    d_mediator: float | None = 0.0,
    claims: list[Claim] | None = None,
    notes: list[str] | None = None,
) -> TrustReport:
    w = weights or TrustWeights()
    c = w.w_f * f + w.w_l * l + w.w_e * e
    t = w.w_s * s + w.w_c * c
    return TrustReport(
        agent_id=agent_id,
        d_offer=d_offer,
        d_intent=d_intent,
        d_mediator=d_mediator,
        satisfaction=s,
        factual_accuracy=f,
        logical_consistency=l,
        semantic_coherence=e,
        coherence=c,
        trust=t,
        trust_scaled=5.0 * t,
        claims=claims or [],
        notes=notes or [],
        weights=w,
    )


def _own_slice_kpi_rows(offers: list[Offer], s: SliceClass) -> np.ndarray:
    return np.array([o.per_slice[s].as_tuple() for o in offers])


def evaluate_agent(
    agent_id: str,
    slice_class: SliceClass,
    offers: list[Offer],
    selected_id: int,
    selection_valid: bool,
    rationale: str,
    recommendation: int | None,
    weights: TrustWeights | None = None,
    ngd_mode: str = "nearest",
) -> TrustReport:
    """Score one agent's final decision and rationale against a session's
    published offers."""
    w = weights or TrustWeights()
    notes = []
    published = {o.id for o in offers}
    d_o = deviation_offer(selected_id, published) if selection_valid else 1.0
    if selected_id in published:
        kpis = next(o for o in offers if o.id == selected_id).per_slice[slice_class]
        agent_vec = kpis.as_tuple()
        d_i = deviation_intent(agent_vec, _own_slice_kpi_rows(offers, slice_class), ngd_mode)
        truth = {
            "throughput": kpis.throughput_mbps,
            "latency": kpis.latency_ms,
            "cost": kpis.cost_eur,
            "energy": kpis.energy_w,
        }
    else:
        d_i = 1.0
        truth = {}
        notes.append("off-menu selection: intent deviation clamped to 1")
    d_m = None if recommendation is None else deviation_mediator(selected_id, recommendation)
    if d_m is None:
        notes.append("no mediator recommendation: D_m skipped, weights renormalized")
    s = satisfaction(d_o, d_i, d_m, w)
    claims = extract_claims(rationale, truth)
    f = factual_accuracy(claims)
    l = logical_consistency(rationale, w)  # noqa: E741
    e = semantic_coherence(rationale)
    return trust_score(
        agent_id, s, f, l, e, w,
        d_offer=d_o, d_intent=d_i, d_mediator=d_m, claims=claims, notes=notes,
    )
