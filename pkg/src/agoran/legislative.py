"""Compliance clause retrieval.

A small lexical search engine over a corpus of regulatory clauses: spectrum
rules, slicing directives, and marketplace precedents. Ranking is Okapi BM25
over whitespace/number tokens; answers quote the winning clause verbatim with
citation metadata rather than generating prose, so every response is traceable
to a specific rule.
"""

from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

DATA_DIR = Path(__file__).parent / "data" / "legal"
DEFAULT_CORPUS_DIR = DATA_DIR / "clauses"
DEFAULT_QA_PATH = DATA_DIR / "qa.csv"

_TOKEN = re.compile(r"[a-z0-9]+(?:\.[0-9]+)?")


class LegislativeError(RuntimeError):
    pass


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Clause:
    id: str
    source_doc: str
    section: str
    text: str
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text.strip():
            raise LegislativeError(f"clause {self.id!r} has empty text")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source_doc,
            "section": self.section,
            "text": self.text,
            "tags": list(self.tags),
        }


@dataclass(frozen=True)
class QaItem:
    question: str
    answer_clause_id: str


@dataclass
class Answer:
    """Verbatim clause return with citation metadata, in place of generated
    prose."""

    clause_id: str
    text: str
    source_doc: str
    section: str
    score: float

    def to_dict(self) -> dict:
        return {
            "clause_id": self.clause_id,
            "text": self.text,
            "citation": f"{self.source_doc} {self.section}",
            "score": self.score,
        }


@dataclass
class RetrievalIndex:
    """Okapi BM25 index. Treat as immutable: `append_precedent` returns a new
    index so concurrent readers always see a complete version."""

    clauses: dict[str, Clause]
    k1: float = 1.2
    b: float = 0.75
    _tf: dict[str, Counter] = field(default_factory=dict, repr=False)
    _df: Counter = field(default_factory=Counter, repr=False)
    _doc_len: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.clauses:
            raise LegislativeError("cannot index an empty corpus")
        for cid, clause in self.clauses.items():
            tokens = tokenize(clause.text)
            self._tf[cid] = Counter(tokens)
            self._doc_len[cid] = len(tokens)
            for term in set(tokens):
                self._df[term] += 1

    @property
    def size(self) -> int:
        return len(self.clauses)

    def _avg_len(self) -> float:
        return sum(self._doc_len.values()) / len(self._doc_len)

    def score(self, query: str, clause_id: str) -> float:
        n = self.size
        avg = self._avg_len()
        tf = self._tf[clause_id]
        dl = self._doc_len[clause_id]
        total = 0.0
        for term in tokenize(query):
            f = tf.get(term, 0)
            if f == 0:
                continue
            idf = math.log(1 + (n - self._df[term] + 0.5) / (self._df[term] + 0.5))
            total += idf * f * (self.k1 + 1) / (f + self.k1 * (1 - self.b + self.b * dl / avg))
        return total

    def retrieve(self, query: str, k: int = 1) -> list[tuple[Clause, float]]:
        if k < 1:
            raise LegislativeError("k must be >= 1")
        scored = sorted(
            ((self.score(query, cid), cid) for cid in self.clauses),
            key=lambda sc: (-sc[0], sc[1]),
        )
        return [(self.clauses[cid], s) for s, cid in scored[:k]]

    def answer(self, query: str) -> Answer:
        (clause, score), = self.retrieve(query, 1)
        return Answer(clause.id, clause.text, clause.source_doc, clause.section, score)

    def append_precedent(self, clause: Clause, approved: bool = False) -> "RetrievalIndex":
        """Write-back of a marketplace ruling; requires explicit operator
        approval."""
        if not approved:
            raise LegislativeError("precedent append requires operator approval")
        if clause.id in self.clauses:
            raise LegislativeError(f"duplicate clause id: {clause.id!r}")
        merged = dict(self.clauses)
        merged[clause.id] = clause
        return RetrievalIndex(merged, self.k1, self.b)


def index(corpus: list[Clause], k1: float = 1.2, b: float = 0.75) -> RetrievalIndex:
    ids = [c.id for c in corpus]
    if len(ids) != len(set(ids)):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise LegislativeError(f"duplicate clause ids: {dupes}")
    # sort by id so insertion order never affects rankings
    return RetrievalIndex({c.id: c for c in sorted(corpus, key=lambda c: c.id)}, k1, b)


def load_corpus(corpus_dir: str | Path = DEFAULT_CORPUS_DIR) -> list[Clause]:
    """Corpus layout: one .txt file per clause plus a manifest.json holding
    id/source/section/tags."""
    corpus_dir = Path(corpus_dir)
    manifest = json.loads((corpus_dir / "manifest.json").read_text())
    out = []
    for entry in manifest:
        text = (corpus_dir / f"{entry['id']}.txt").read_text().strip()
        out.append(
            Clause(entry["id"], entry["source"], entry["section"], text, tuple(entry["tags"]))
        )
    return out


def load_qa(path: str | Path = DEFAULT_QA_PATH) -> list[QaItem]:
    with open(path, newline="") as f:
        return [QaItem(r["question"], r["answer_clause_id"]) for r in csv.DictReader(f)]


@dataclass
class QaReport:
    accuracy: float
    total: int
    correct: int
    misses: list[tuple[str, str, str]]  # (question, expected, got)
    flagged: list[str]  # malformed questions counted as wrong


def evaluate_qa(idx: RetrievalIndex, qa_set: list[QaItem]) -> QaReport:
    if not qa_set:
        raise LegislativeError("empty QA set")
    correct = 0
    misses, flagged = [], []
    for item in qa_set:
        if item.answer_clause_id not in idx.clauses:
            raise LegislativeError(f"QA references unknown clause {item.answer_clause_id!r}")
        if not item.question.strip():
            flagged.append(item.answer_clause_id)
            misses.append((item.question, item.answer_clause_id, ""))
            continue
        (top, _), = idx.retrieve(item.question, 1)
        if top.id == item.answer_clause_id:
            correct += 1
        else:
            misses.append((item.question, item.answer_clause_id, top.id))
    return QaReport(correct / len(qa_set), len(qa_set), correct, misses, flagged)
