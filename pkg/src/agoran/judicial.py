"""Arbitration: toxicity classification of negotiation messages and the
warn/fine/credit incentive engine that modulates agent influence.

The classifier is a versioned pattern lexicon; classification is a pure
function of (message, lexicon version), so verdicts are reproducible and
auditable. A model-backed classifier can be plugged behind the same interface.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_LEXICON_PATH = Path(__file__).parent / "data" / "legal" / "toxicity_lexicon.json"


@dataclass(frozen=True)
class LexiconPattern:
    regex: str
    weight: float
    tag: str  # threat | collusion | overprovision | toxic

    def compiled(self) -> re.Pattern:
        return re.compile(self.regex, re.IGNORECASE)


@dataclass
class PatternLexicon:
    version: int
    patterns: list[LexiconPattern]

    def __post_init__(self):
        self._compiled = [(p, p.compiled()) for p in self.patterns]

    @classmethod
    def load(cls, path: str | Path = DEFAULT_LEXICON_PATH) -> "PatternLexicon":
        doc = json.loads(Path(path).read_text())
        return cls(
            version=doc["version"],
            patterns=[LexiconPattern(p["regex"], p["weight"], p["tag"]) for p in doc["patterns"]],
        )

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "patterns": [
                {"regex": p.regex, "weight": p.weight, "tag": p.tag} for p in self.patterns
            ],
        }


@dataclass
class ToxicityVerdict:
    message_ref: str
    label: str  # non_toxic | toxic
    score: float
    matched_patterns: list[str] = field(default_factory=list)
    lexicon_version: int = 0

    def to_dict(self) -> dict:
        return {
            "message_ref": self.message_ref,
            "label": self.label,
            "score": self.score,
            "matched_patterns": list(self.matched_patterns),
            "lexicon_version": self.lexicon_version,
        }


@dataclass
class Incentive:
    kind: str  # none | warn | fine | credit
    target: str
    magnitude: float  # influence multiplier for fine/credit, 1.0 otherwise
    reason: str


@dataclass
class IncentiveParams:
    warn_threshold: float = 0.3
    fine_threshold: float = 0.5
    fine_multiplier: float = 0.5
    credit_multiplier: float = 1.2
    credit_streak: int = 3  # consecutive clean, consensus-supporting messages


def classify(
    message_text: str, lexicon: PatternLexicon, threshold: float = 0.5, message_ref: str = ""
) -> ToxicityVerdict:
    """Score = clamp01 of the summed weights of matched patterns (each pattern
    counted once); label toxic iff score >= threshold."""
    matched = []
    score = 0.0
    for pattern, compiled in lexicon._compiled:
        if compiled.search(message_text):
            matched.append(pattern.regex)
            score += pattern.weight
    score = min(1.0, max(0.0, score))
    return ToxicityVerdict(
        message_ref=message_ref,
        label="toxic" if score >= threshold else "non_toxic",
        score=score,
        matched_patterns=matched,
        lexicon_version=lexicon.version,
    )


def adjudicate(
    verdict: ToxicityVerdict,
    target: str,
    clean_supportive_streak: int = 0,
    params: IncentiveParams | None = None,
) -> Incentive:
    """Map a verdict onto the incentive ladder: benign messages pass, borderline
    scores draw a warning, scores past the toxicity threshold draw a fine, and
    a sustained streak of clean consensus-supporting messages earns a credit."""
    p = params or IncentiveParams()
    if verdict.score >= p.fine_threshold:
        return Incentive(
            "fine", target, p.fine_multiplier,
            f"toxicity score {verdict.score:.2f} >= {p.fine_threshold} "
            f"(matched: {', '.join(verdict.matched_patterns) or 'n/a'})",
        )
    if verdict.score >= p.warn_threshold:
        return Incentive(
            "warn", target, 1.0,
            f"borderline toxicity score {verdict.score:.2f} "
            f"(matched: {', '.join(verdict.matched_patterns) or 'n/a'})",
        )
    if clean_supportive_streak >= p.credit_streak:
        return Incentive(
            "credit", target, p.credit_multiplier,
            f"{clean_supportive_streak} consecutive clean consensus-supporting messages",
        )
    return Incentive("none", target, 1.0, f"benign (score {verdict.score:.2f})")


@dataclass
class ClassifierMetrics:
    precision: float
    recall: float
    f1: float
    true_positive: int
    false_positive: int
    false_negative: int
    true_negative: int

    def confusion(self) -> dict:
        return {
            "tp": self.true_positive,
            "fp": self.false_positive,
            "fn": self.false_negative,
            "tn": self.true_negative,
        }

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": self.confusion(),
        }


def evaluate_classifier(
    labeled_corpus: list[tuple[str, str]],
    lexicon: PatternLexicon,
    threshold: float = 0.5,
) -> ClassifierMetrics:
    """Binary metrics over a (text, label) corpus; labels are 'toxic' or
    'non_toxic'."""
    if not labeled_corpus:
        raise ValueError("corpus must be non-empty")
    tp = fp = fn = tn = 0
    for text, label in labeled_corpus:
        if label not in ("toxic", "non_toxic"):
            raise ValueError(f"unknown label: {label}")
        predicted = classify(text, lexicon, threshold).label
        if label == "toxic" and predicted == "toxic":
            tp += 1
        elif label == "toxic":
            fn += 1
        elif predicted == "toxic":
            fp += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassifierMetrics(precision, recall, f1, tp, fp, fn, tn)


def load_corpus(path: str | Path) -> list[tuple[str, str]]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        return [(row["text"], row["label"]) for row in reader]
