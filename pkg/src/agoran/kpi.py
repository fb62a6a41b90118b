"""Per-slice KPI models: throughput, M/M/1 latency, linear cost, energy.

These closed-form models are shared by the offer optimizer and the slice
simulator so that every published KPI is recomputable from its underlying
resource allocation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_MCS_TABLE_PATH = DATA_DIR / "mcs_table.csv"


class SliceClass(str, Enum):
    EMBB = "eMBB"
    URLLC = "URLLC"
    MMTC = "mMTC"


class UnknownMcsIndexError(KeyError):
    def __init__(self, index):
        super().__init__(f"unknown MCS index: {index!r}")
        self.index = index


@dataclass(frozen=True)
class ResourceVector:
    """Per-slice resource quadruple (the optimizer's decision variable)."""

    bandwidth_mhz: float
    compute_cycles: float
    power_w: float
    storage_mb: float

    def __post_init__(self):
        for name in ("bandwidth_mhz", "compute_cycles", "power_w", "storage_mb"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")

    def as_tuple(self):
        return (self.bandwidth_mhz, self.compute_cycles, self.power_w, self.storage_mb)

    @staticmethod
    def zero():
        return ResourceVector(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation_order: int  # Q
    coding_rate: float  # R

    @property
    def spectral_efficiency(self) -> float:
        return self.modulation_order * self.coding_rate


class McsTable:
    """29-entry modulation/coding table, indices 0-28.

    Only the top entry (Q=6, R=0.948) is fixed; the rest follow the standard
    64-QAM progression and can be replaced via a CSV with header index,q,r.
    """

    def __init__(self, entries: list[McsEntry]):
        if not entries:
            raise ValueError("MCS table must be non-empty")
        self._entries = {e.index: e for e in entries}
        if len(self._entries) != len(entries):
            raise ValueError("duplicate MCS indices")
        prev_eff = -1.0
        for idx in sorted(self._entries):
            e = self._entries[idx]
            if not (0 < e.coding_rate <= 1):
                raise ValueError(f"coding rate out of (0,1] at index {idx}")
            if e.spectral_efficiency < prev_eff:
                raise ValueError(f"spectral efficiency decreases at index {idx}")
            prev_eff = e.spectral_efficiency

    def __getitem__(self, index: int) -> McsEntry:
        try:
            return self._entries[index]
        except KeyError:
            raise UnknownMcsIndexError(index) from None

    def __contains__(self, index: int) -> bool:
        return index in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def indices(self) -> list[int]:
        return sorted(self._entries)

    @classmethod
    def load(cls, path: str | Path = DEFAULT_MCS_TABLE_PATH) -> "McsTable":
        entries = []
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                entries.append(
                    McsEntry(int(row["index"]), int(row["q"]), float(row["r"]))
                )
        return cls(entries)


_DEFAULT_TABLE: McsTable | None = None


def default_mcs_table() -> McsTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = McsTable.load()
    return _DEFAULT_TABLE


@dataclass(frozen=True)
class KpiVector:
    throughput_mbps: float
    latency_ms: float  # +inf when the slice is unserved
    cost_eur: float
    energy_w: float

    def as_tuple(self):
        return (self.throughput_mbps, self.latency_ms, self.cost_eur, self.energy_w)


def _per_slice(value, default: float) -> dict[SliceClass, float]:
    if value is None:
        return {s: default for s in SliceClass}
    if isinstance(value, dict):
        out = {s: default for s in SliceClass}
        out.update(value)
        return out
    return {s: float(value) for s in SliceClass}


@dataclass
class KpiModelParams:
    """Shared constants of the KPI models.

    load_ratio and fixed_latency_ms are per-slice scenario configuration;
    cell_capacity_mbps clamps throughput to the testbed's feasible region.
    """

    kappa: float = 0.86
    packet_bits: int = 12000  # 1500-byte packets
    alpha_cost: float = 1.0
    cell_capacity_mbps: float = 133.7
    load_ratio: dict[SliceClass, float] = field(default_factory=dict)
    fixed_latency_ms: dict[SliceClass, float] = field(default_factory=dict)
    mcs_table: McsTable = field(default_factory=default_mcs_table)

    def __post_init__(self):
        if not (0 < self.kappa <= 1):
            raise ValueError("kappa must lie in (0, 1]")
        if self.packet_bits <= 0:
            raise ValueError("packet_bits must be positive")
        self.load_ratio = _per_slice(self.load_ratio or None, 0.5)
        self.fixed_latency_ms = _per_slice(self.fixed_latency_ms or None, 1.0)
        for s, rho in self.load_ratio.items():
            if not (0 < rho < 1):
                raise ValueError(f"load ratio for {s} must lie in (0,1), got {rho}")


def throughput(b: float, m: int, params: KpiModelParams) -> float:
    """Throughput in Mbps: kappa * Q_m * R_m * b, clamped to the cell cap."""
    if b < 0:
        raise ValueError("bandwidth must be non-negative")
    entry = params.mcs_table[m]
    t = params.kappa * entry.spectral_efficiency * b
    if params.cell_capacity_mbps is not None:
        t = min(t, params.cell_capacity_mbps)
    return t


def latency(b: float, m: int, params: KpiModelParams, slice_class: SliceClass) -> float:
    """Fixed component plus M/M/1 queueing delay, in milliseconds.

    Service rate mu is throughput converted to packets/s (factor 1e6 Mbps->bps,
    the 1/(mu*(1-rho)) sojourn in seconds is scaled by 1e3 to ms).
    Returns +inf when the slice is unserved (b == 0) or saturated (rho >= 1).
    """
    rho = params.load_ratio[slice_class]
    l_fix = params.fixed_latency_ms[slice_class]
    if b <= 0 or rho >= 1:
        return math.inf
    t = throughput(b, m, params)
    if t <= 0:
        return math.inf
    mu = t * 1e6 / params.packet_bits  # packets per second
    return l_fix + 1000.0 / (mu * (1.0 - rho))


def cost(c: float, s: float, params: KpiModelParams) -> float:
    """Linear monetary cost of compute and storage."""
    if c < 0 or s < 0:
        raise ValueError("compute and storage must be non-negative")
    return params.alpha_cost * (c + s)


def energy(p: float) -> float:
    """Energy is the committed transmission power."""
    if p < 0:
        raise ValueError("power must be non-negative")
    return p


def slice_kpis(
    rv: ResourceVector, m: int, params: KpiModelParams, slice_class: SliceClass
) -> KpiVector:
    return KpiVector(
        throughput_mbps=throughput(rv.bandwidth_mhz, m, params),
        latency_ms=latency(rv.bandwidth_mhz, m, params, slice_class),
        cost_eur=cost(rv.compute_cycles, rv.storage_mb, params),
        energy_w=energy(rv.power_w),
    )


def objective_vector(
    allocations: dict[SliceClass, tuple[ResourceVector, int]],
    params: KpiModelParams,
) -> tuple[float, float, float, float]:
    """Minimization objective: (-sum T, sum L, sum C, sum E) over all slices."""
    total_t = total_l = total_c = total_e = 0.0
    for slice_class, (rv, m) in allocations.items():
        k = slice_kpis(rv, m, params, slice_class)
        total_t += k.throughput_mbps
        total_l += k.latency_ms
        total_c += k.cost_eur
        total_e += k.energy_w
    return (-total_t, total_l, total_c, total_e)
