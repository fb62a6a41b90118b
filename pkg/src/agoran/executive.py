"""Telemetry store: watcher push path plus a query/snapshot pull path.

Records are appended to an in-memory log (optionally mirrored to a
newline-delimited JSON file) under a single global sequencer; an in-memory
index serves pattern queries. Keys are hierarchical `/`-separated strings and
patterns may use `*` as a per-segment wildcard.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path


class TelemetryError(RuntimeError):
    pass


class SeqConflictError(TelemetryError):
    """A watcher pushed a sequence number that does not advance its stream."""


@dataclass(frozen=True)
class TelemetryRecord:
    key: str
    value: float | str
    ts: int  # ms epoch
    source: str
    seq: int
    version: int = 0  # global store version, assigned on push

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "key": self.key,
                "value": self.value,
                "ts": self.ts,
                "source": self.source,
                "seq": self.seq,
                "version": self.version,
            },
            separators=(",", ":"),
            sort_keys=True,
        )

    @classmethod
    def from_json_line(cls, line: str) -> "TelemetryRecord":
        d = json.loads(line)
        return cls(d["key"], d["value"], d["ts"], d["source"], d["seq"], d["version"])


@dataclass
class Query:
    key_pattern: str
    window: tuple[int, int] | None = None  # [start_ts, end_ts] inclusive
    aggregation: str = "latest"  # latest | mean | max | min


_SEGMENT = re.compile(r"^[A-Za-z0-9_.\-]+$")


def _validate_key(key: str) -> None:
    parts = key.split("/")
    if not parts or not all(_SEGMENT.match(p) for p in parts):
        raise TelemetryError(f"malformed key: {key!r}")


def _compile_pattern(pattern: str) -> re.Pattern:
    parts = pattern.split("/")
    if not parts:
        raise TelemetryError("empty pattern")
    out = []
    for p in parts:
        if p == "*":
            out.append(r"[^/]+")
        elif _SEGMENT.match(p):
            out.append(re.escape(p))
        else:
            raise TelemetryError(f"malformed pattern segment: {p!r}")
    return re.compile("^" + "/".join(out) + "$")


class TelemetryStore:
    """Append-only store with a global version counter.

    Writers (distinct watcher sources) and readers may interleave freely; one
    lock serializes version assignment so snapshots are taken at a single
    store version.
    """

    def __init__(self, log_path: str | Path | None = None):
        self._lock = threading.Lock()
        self._log: list[TelemetryRecord] = []
        self._by_key: dict[str, list[TelemetryRecord]] = {}
        self._latest: dict[str, TelemetryRecord] = {}
        self._source_seq: dict[str, int] = {}
        self._version = 0
        self._log_path = Path(log_path) if log_path else None
        self._log_file = open(self._log_path, "a") if self._log_path else None

    def close(self) -> None:
        if self._log_file:
            self._log_file.close()
            self._log_file = None

    @property
    def version(self) -> int:
        return self._version

    def push(self, key: str, value, ts: int, source: str, seq: int) -> int:
        """Append one record; returns the assigned global version."""
        _validate_key(key)
        with self._lock:
            last = self._source_seq.get(source)
            if last is not None and seq <= last:
                raise SeqConflictError(
                    f"source {source!r} seq {seq} does not advance past {last}"
                )
            self._version += 1
            record = TelemetryRecord(key, value, ts, source, seq, self._version)
            self._source_seq[source] = seq
            self._log.append(record)
            self._by_key.setdefault(key, []).append(record)
            self._latest[key] = record
            if self._log_file:
                self._log_file.write(record.to_json_line() + "\n")
                self._log_file.flush()
            return self._version

    def _matching(self, pattern: str, max_version: int | None = None):
        rx = _compile_pattern(pattern)
        for key, records in self._by_key.items():
            if rx.match(key):
                yield key, [
                    r for r in records if max_version is None or r.version <= max_version
                ]

    def query(self, q: Query) -> list[tuple[str, float | str, int]]:
        """Aggregate matching records per key; 'latest' picks the highest
        store version."""
        if q.aggregation not in ("latest", "mean", "max", "min"):
            raise TelemetryError(f"unknown aggregation: {q.aggregation}")
        out = []
        if q.aggregation == "latest" and q.window is None:
            # Fast path: the per-key latest is tracked incrementally.
            rx = _compile_pattern(q.key_pattern)
            return sorted(
                (key, r.value, r.ts) for key, r in self._latest.items() if rx.match(key)
            )
        for key, records in self._matching(q.key_pattern):
            if q.window is not None:
                lo, hi = q.window
                records = [r for r in records if lo <= r.ts <= hi]
            if not records:
                continue
            if q.aggregation == "latest":
                r = max(records, key=lambda r: r.version)
                out.append((key, r.value, r.ts))
                continue
            values = [r.value for r in records]
            if not all(isinstance(v, (int, float)) for v in values):
                raise TelemetryError(f"non-numeric values under {key} cannot be aggregated")
            ts = max(r.ts for r in records)
            if q.aggregation == "mean":
                out.append((key, sum(values) / len(values), ts))
            elif q.aggregation == "max":
                out.append((key, max(values), ts))
            else:
                out.append((key, min(values), ts))
        return sorted(out)

    def snapshot(self, key_patterns: list[str]) -> dict[str, float | str]:
        """Latest values for all keys matching any pattern, all read at one
        store version."""
        import bisect

        with self._lock:
            frozen = self._version
        result: dict[str, float | str] = {}
        for pattern in key_patterns:
            rx = _compile_pattern(pattern)
            for key in list(self._by_key):
                if not rx.match(key):
                    continue
                records = self._by_key[key]
                # Records are version-ordered; take the last one at or below
                # the frozen version.
                i = bisect.bisect_right(records, frozen, key=lambda r: r.version)
                if i:
                    result[key] = records[i - 1].value
        return result

    @classmethod
    def replay(cls, log_path: str | Path) -> "TelemetryStore":
        """Rebuild an identical index from a persisted append log."""
        store = cls()
        for line in Path(log_path).read_text().splitlines():
            record = TelemetryRecord.from_json_line(line)
            got = store.push(record.key, record.value, record.ts, record.source, record.seq)
            if got != record.version:
                raise TelemetryError(
                    f"log corruption: version {record.version} replayed as {got}"
                )
        return store


@dataclass
class Watcher:
    """Bridges simulator events into the store: every subscribed event kind
    produces exactly one record."""

    id: str
    store: TelemetryStore
    subscription: frozenset = frozenset({"kpi_update", "config_change", "policy_change"})
    _seq: int = field(default=0, repr=False)

    def observe(self, kind: str, key: str, value, ts: int) -> int | None:
        if kind not in self.subscription:
            return None
        self._seq += 1
        return self.store.push(key, value, ts, self.id, self._seq)
