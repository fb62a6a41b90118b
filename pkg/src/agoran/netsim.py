"""TTI-level RAN slice simulator.

One transmission time interval (TTI) is 1 ms. Each slice is a single-server
FIFO queue fed by Poisson packet arrivals with exponentially distributed
packet sizes; service rate per TTI comes from the slice's PRB allocation and
the channel's MCS. Phase scripts stitch intervals with different directives,
traffic profiles, and channel quality; queues reset at phase boundaries so
each stitched interval is an independent experiment.

PRB accounting counts utilization in both modes: the PRBs actually needed to
carry the served traffic, capped by the allocation. A dynamic run differs
from a static one through its renegotiated directives and traffic profiles,
not through a different accounting rule, which keeps the dynamic-vs-static
ledger an apples-to-apples comparison.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kpi import KpiModelParams, throughput

PRBS_PER_TTI = 106  # 40 MHz at 30 kHz subcarrier spacing


class NetsimError(RuntimeError):
    pass


@dataclass
class NetsimParams:
    prbs_per_tti: int = PRBS_PER_TTI
    b_max_mhz: float = 133.7 / (0.86 * 6 * 0.948)  # full grid hits the cell cap
    warmup_ttis: int = 100  # excluded from phase KPI summaries
    max_queue_packets: int = 50_000
    rng_seed: int = 0
    kpi_params: KpiModelParams = field(default_factory=KpiModelParams)

    def cell_capacity_mbps(self, mcs: int) -> float:
        return throughput(self.b_max_mhz, mcs, self.kpi_params)


@dataclass
class McsTrace:
    """Channel quality over time as (tti, mcs) breakpoints; the value holds
    until the next breakpoint."""

    entries: list[tuple[int, int]]

    def __post_init__(self):
        if not self.entries:
            raise NetsimError("trace must have at least one entry")
        ttis = [t for t, _ in self.entries]
        if ttis != sorted(set(ttis)):
            raise NetsimError("trace TTIs must be strictly increasing")
        for _, m in self.entries:
            if not (0 <= m <= 28):
                raise NetsimError(f"invalid MCS index: {m}")

    def value_at(self, tti: int) -> int:
        mcs = self.entries[0][1]
        for t, m in self.entries:
            if t > tti:
                break
            mcs = m
        return mcs

    @classmethod
    def from_csv(cls, path: str | Path) -> "McsTrace":
        with open(path, newline="") as f:
            rows = [(int(r["tti"]), int(r["mcs"])) for r in csv.DictReader(f)]
        return cls(rows)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["tti", "mcs"])
            w.writerows(self.entries)


def default_trace(phase_ttis: int = 625) -> McsTrace:
    """Four equal channel-quality epochs: good, degraded, degraded (cell-off
    window), good again."""
    return McsTrace(
        [(0, 28), (phase_ttis, 7), (2 * phase_ttis, 7), (3 * phase_ttis, 28)]
    )


@dataclass
class SliceConfig:
    """One tenant's slice within a phase: enforced share plus traffic profile."""

    name: str
    prb_share: float
    offered_load_mbps: float
    fixed_latency_ms: float = 1.0

    def __post_init__(self):
        if not (0 <= self.prb_share <= 1):
            raise NetsimError(f"prb_share must lie in [0,1], got {self.prb_share}")
        if self.offered_load_mbps < 0:
            raise NetsimError("offered load must be non-negative")


@dataclass
class PhaseConfig:
    phase_id: str
    n_ttis: int
    mcs: int
    slices: list[SliceConfig]
    cell_active: bool = True  # False models a regulatory power-off window

    def __post_init__(self):
        if self.n_ttis <= 0:
            raise NetsimError("phase must span at least one TTI")
        total = sum(s.prb_share for s in self.slices)
        if total > 1 + 1e-9:
            raise NetsimError(f"slice shares sum to {total} > 1")


def prbs_from_shares(shares: list[float], total_prbs: int) -> list[int]:
    """Integer PRBs by largest-remainder rounding; Σ equals round(Σ shares · total)."""
    raw = [s * total_prbs for s in shares]
    base = [math.floor(r) for r in raw]
    target = int(round(sum(raw)))
    remainders = sorted(
        range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i)
    )
    for i in remainders[: target - sum(base)]:
        base[i] += 1
    return base


@dataclass
class _Packet:
    arrival_ms: float
    bits_left: float


class _SliceRuntime:
    def __init__(self, cfg: SliceConfig, max_queue: int):
        self.cfg = cfg
        self.queue: list[_Packet] = []
        self.max_queue = max_queue
        self.dropped = 0

    def arrivals(self, tti: int, rng: np.random.Generator, packet_bits: int) -> None:
        lam = self.cfg.offered_load_mbps * 1000.0 / packet_bits  # packets per ms
        n = rng.poisson(lam)
        if n == 0:
            return
        times = np.sort(rng.uniform(0.0, 1.0, n)) + tti
        sizes = rng.exponential(packet_bits, n)
        for t, b in zip(times, sizes):
            if len(self.queue) >= self.max_queue:
                self.dropped += 1
                continue
            self.queue.append(_Packet(float(t), float(b)))

    def serve(self, tti: int, capacity_bits: float) -> tuple[float, list[float]]:
        """Drain the FIFO over [tti, tti+1) at the given rate; returns
        (served bits, sojourns of packets completed this TTI in ms)."""
        if capacity_bits <= 0 or not self.queue:
            return 0.0, []
        rate = capacity_bits  # bits per ms
        clock = float(tti)
        served = 0.0
        sojourns = []
        end = tti + 1.0
        while self.queue:
            pkt = self.queue[0]
            start = max(clock, pkt.arrival_ms)
            if start >= end:
                break
            finish = start + pkt.bits_left / rate
            if finish <= end:
                served += pkt.bits_left
                sojourns.append(finish - pkt.arrival_ms)
                clock = finish
                self.queue.pop(0)
            else:
                chunk = (end - start) * rate
                pkt.bits_left -= chunk
                served += chunk
                clock = end
                break
        return served, sojourns


@dataclass
class PhaseSummary:
    phase_id: str
    per_slice: dict[str, dict]  # name -> {throughput_mbps, latency_ms, prbs_used, dropped}
    total_prbs: int


@dataclass
class RunReport:
    slice_names: list[str]
    phases: list[PhaseSummary]
    served_mbps: dict[str, np.ndarray]  # per-TTI series
    latency_ms: dict[str, np.ndarray]  # per-TTI mean completion sojourn + L_fix (nan if idle)
    prbs: dict[str, np.ndarray]
    mcs_series: np.ndarray

    @property
    def n_ttis(self) -> int:
        return len(self.mcs_series)

    def total_prbs_per_tti(self) -> np.ndarray:
        return np.sum([self.prbs[n] for n in self.slice_names], axis=0)

    def phase_summary(self, phase_id: str) -> PhaseSummary:
        for p in self.phases:
            if p.phase_id == phase_id:
                return p
        raise NetsimError(f"no phase {phase_id!r} in report")

    def to_dict(self, downsample: int = 1) -> dict:
        def ds(a):
            out = a[::downsample]
            return [None if isinstance(v, float) and math.isnan(v) else float(v) for v in out]

        return {
            "slices": self.slice_names,
            "phases": [
                {"phase_id": p.phase_id, "per_slice": p.per_slice, "total_prbs": p.total_prbs}
                for p in self.phases
            ],
            "series": {
                "mcs": [int(v) for v in self.mcs_series[::downsample]],
                "served_mbps": {n: ds(self.served_mbps[n]) for n in self.slice_names},
                "latency_ms": {n: ds(self.latency_ms[n]) for n in self.slice_names},
                "prbs": {n: ds(self.prbs[n].astype(float)) for n in self.slice_names},
            },
            "downsample": downsample,
        }


def step_tti(
    tti: int,
    runtimes: list[_SliceRuntime],
    mcs: int,
    params: NetsimParams,
    rng: np.random.Generator,
    cell_active: bool = True,
) -> list[tuple[float, list[float], int]]:
    """Advance every slice by one TTI; returns per-slice
    (served bits, completed sojourns, PRBs used)."""
    cell_bits = params.cell_capacity_mbps(mcs) * 1000.0 if cell_active else 0.0
    bits_per_prb = cell_bits / params.prbs_per_tti if cell_bits > 0 else 0.0
    allocated = prbs_from_shares([r.cfg.prb_share for r in runtimes], params.prbs_per_tti)
    out = []
    for rt, prbs in zip(runtimes, allocated):
        if cell_active:
            rt.arrivals(tti, rng, params.kpi_params.packet_bits)
        served, sojourns = rt.serve(tti, prbs * bits_per_prb)
        used = min(prbs, math.ceil(served / bits_per_prb)) if bits_per_prb > 0 else 0
        out.append((served, sojourns, used))
    return out


def run_phases(phases: list[PhaseConfig], params: NetsimParams | None = None,
               trace: McsTrace | None = None) -> RunReport:
    """Run a stitched phase script. Queues reset at phase boundaries; an
    optional MCS trace overrides the per-phase MCS constants."""
    params = params or NetsimParams()
    names = [s.name for s in phases[0].slices]
    for p in phases:
        if [s.name for s in p.slices] != names:
            raise NetsimError("all phases must script the same slice names")
    n_total = sum(p.n_ttis for p in phases)
    served = {n: np.zeros(n_total) for n in names}
    latency = {n: np.full(n_total, np.nan) for n in names}
    prbs = {n: np.zeros(n_total, dtype=int) for n in names}
    mcs_series = np.zeros(n_total, dtype=int)
    rng = np.random.Generator(np.random.PCG64(params.rng_seed))
    summaries = []
    tti = 0
    for phase in phases:
        runtimes = [_SliceRuntime(s, params.max_queue_packets) for s in phase.slices]
        acc = {n: {"bits": 0.0, "sojourn_sum": 0.0, "completed": 0, "prbs": 0} for n in names}
        for k in range(phase.n_ttis):
            mcs = trace.value_at(tti) if trace is not None else phase.mcs
            mcs_series[tti] = mcs
            results = step_tti(tti, runtimes, mcs, params, rng, phase.cell_active)
            for rt, (bits, sojourns, used) in zip(runtimes, results):
                name = rt.cfg.name
                served[name][tti] = bits / 1000.0  # bits per ms == Mbps
                prbs[name][tti] = used
                if sojourns:
                    latency[name][tti] = float(np.mean(sojourns)) + rt.cfg.fixed_latency_ms
                if k >= params.warmup_ttis:
                    acc[name]["bits"] += bits
                    acc[name]["prbs"] += used
                    acc[name]["sojourn_sum"] += sum(sojourns)
                    acc[name]["completed"] += len(sojourns)
            tti += 1
        span_ms = max(1, phase.n_ttis - params.warmup_ttis)
        per_slice = {}
        for rt in runtimes:
            a = acc[rt.cfg.name]
            mean_latency = (
                a["sojourn_sum"] / a["completed"] + rt.cfg.fixed_latency_ms
                if a["completed"]
                else math.inf
            )
            per_slice[rt.cfg.name] = {
                "throughput_mbps": a["bits"] / span_ms / 1000.0,
                "latency_ms": mean_latency,
                "prbs_used": a["prbs"],
                "dropped": rt.dropped,
            }
        summaries.append(
            PhaseSummary(phase.phase_id, per_slice, sum(v["prbs_used"] for v in per_slice.values()))
        )
    return RunReport(names, summaries, served, latency, prbs, mcs_series)


def prb_ledger(dynamic: RunReport, static: RunReport) -> tuple[int, int, float]:
    """Per-TTI PRB comparison: (saved, added, net saving percent of the static
    total)."""
    if dynamic.n_ttis != static.n_ttis:
        raise NetsimError("runs must cover the same number of TTIs")
    d = dynamic.total_prbs_per_tti()
    s = static.total_prbs_per_tti()
    saved = int(np.maximum(0, s - d).sum())
    added = int(np.maximum(0, d - s).sum())
    static_total = int(s.sum())
    net = 100.0 * (saved - added) / static_total if static_total else 0.0
    return saved, added, net
