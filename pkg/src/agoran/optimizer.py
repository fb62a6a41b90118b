"""NSGA-II search over per-slice resource allocations.

Produces a feasible, SLA-compliant Pareto front of offers, plus a grid
enumeration oracle and an exact hypervolume routine used to validate the
search on small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kpi import (
    KpiModelParams,
    KpiVector,
    ResourceVector,
    SliceClass,
    slice_kpis,
)

RESOURCE_FIELDS = ("bandwidth_mhz", "compute_cycles", "power_w", "storage_mb")


class InfeasibleScenarioError(RuntimeError):
    def __init__(self, clause_description: str):
        super().__init__(f"infeasible scenario: no allocation satisfies {clause_description}")
        self.clause_description = clause_description


@dataclass(frozen=True)
class GlobalBudget:
    b_max: float
    c_max: float
    p_max: float
    s_max: float

    def __post_init__(self):
        for name in ("b_max", "c_max", "p_max", "s_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite")

    def as_tuple(self):
        return (self.b_max, self.c_max, self.p_max, self.s_max)


@dataclass(frozen=True)
class SlaClause:
    slice: SliceClass
    min_throughput_mbps: float | None = None
    max_latency_ms: float | None = None
    max_cost_eur: float | None = None
    max_energy_w: float | None = None

    def __post_init__(self):
        bounds = (
            self.min_throughput_mbps,
            self.max_latency_ms,
            self.max_cost_eur,
            self.max_energy_w,
        )
        if all(b is None for b in bounds):
            raise ValueError("SLA clause must carry at least one bound")
        for b in bounds:
            if b is not None and b < 0:
                raise ValueError("SLA bounds must be non-negative")

    def violation(self, k: KpiVector) -> str | None:
        """Description of the first violated bound, or None if satisfied."""
        if (
            self.min_throughput_mbps is not None
            and k.throughput_mbps < self.min_throughput_mbps
        ):
            return f"{self.slice.value} min throughput {self.min_throughput_mbps} Mbps"
        if self.max_latency_ms is not None and not (
            k.latency_ms <= self.max_latency_ms
        ):
            return f"{self.slice.value} max latency {self.max_latency_ms} ms"
        if self.max_cost_eur is not None and k.cost_eur > self.max_cost_eur:
            return f"{self.slice.value} max cost {self.max_cost_eur} EUR"
        if self.max_energy_w is not None and k.energy_w > self.max_energy_w:
            return f"{self.slice.value} max energy {self.max_energy_w} W"
        return None


@dataclass
class NsgaParams:
    population: int = 60
    generations: int = 80
    p_crossover: float = 0.9
    p_mutation: float = 0.1
    mutation_sigma_frac: float = 0.05  # per-gene sigma as fraction of the gene's budget
    top_k: int = 3
    rng_seed: int = 0
    gene_grid: list[np.ndarray] | None = None  # optional discretization per gene

    def __post_init__(self):
        if self.population % 2:
            raise ValueError("population must be even")
        for p in (self.p_crossover, self.p_mutation):
            if not (0 <= p <= 1):
                raise ValueError("probabilities must lie in [0,1]")


@dataclass
class Individual:
    genes: np.ndarray  # 4 * n_slices reals, slice-major (b, c, p, s)
    objectives: tuple[float, float, float, float] | None = None
    feasible: bool = False
    violation: str | None = None
    rank: int = -1
    crowding: float = 0.0


@dataclass
class Offer:
    id: int
    per_slice: dict[SliceClass, KpiVector]
    per_slice_resources: dict[SliceClass, ResourceVector]
    objectives: tuple[float, float, float, float]
    crowding: float = 0.0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "slices": {
                s.value: {
                    "throughput_mbps": k.throughput_mbps,
                    "latency_ms": k.latency_ms,
                    "cost_eur": k.cost_eur,
                    "energy_w": k.energy_w,
                }
                for s, k in self.per_slice.items()
            },
            "resources": {
                s.value: {
                    "bandwidth_mhz": r.bandwidth_mhz,
                    "compute_cycles": r.compute_cycles,
                    "power_w": r.power_w,
                    "storage_mb": r.storage_mb,
                }
                for s, r in self.per_slice_resources.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Offer":
        per_slice = {
            SliceClass(s): KpiVector(**k) for s, k in d["slices"].items()
        }
        resources = {
            SliceClass(s): ResourceVector(**r) for s, r in d["resources"].items()
        }
        objectives = (
            -sum(k.throughput_mbps for k in per_slice.values()),
            sum(k.latency_ms for k in per_slice.values()),
            sum(k.cost_eur for k in per_slice.values()),
            sum(k.energy_w for k in per_slice.values()),
        )
        return cls(d["id"], per_slice, resources, objectives)


def offers_to_json_dict(offers: list[Offer]) -> dict:
    return {"offers": [o.to_dict() for o in offers]}


def dominates(a, b) -> bool:
    """Minimization: a dominates b iff a <= b componentwise and a != b."""
    le = all(x <= y for x, y in zip(a, b))
    return le and any(x < y for x, y in zip(a, b))


def non_dominated_sort(points: list) -> list[list[int]]:
    """Fast non-dominated sort; returns index lists per front (front 0 first)."""
    n = len(points)
    if n == 0:
        return []
    arr = np.asarray(points, dtype=float)
    le = np.all(arr[:, None, :] <= arr[None, :, :], axis=2)
    lt = np.any(arr[:, None, :] < arr[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    assigned = np.zeros(n, dtype=bool)
    fronts: list[list[int]] = []
    while not assigned.all():
        current = np.flatnonzero((counts == 0) & ~assigned)
        fronts.append(current.tolist())
        assigned[current] = True
        counts = counts - dom[current].sum(axis=0)
    return fronts


def crowding_distance(front: list) -> list[float]:
    """Normalized cuboid-side sums; boundary points get +inf per objective."""
    if not front:
        raise ValueError("front must be non-empty")
    n = len(front)
    if n == 1:
        return [math.inf]
    dim = len(front[0])
    dist = [0.0] * n
    for m in range(dim):
        order = sorted(range(n), key=lambda i: (front[i][m], i))
        lo, hi = front[order[0]][m], front[order[-1]][m]
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        denom = hi - lo
        if denom <= 0 or not math.isfinite(denom):
            continue
        for k in range(1, n - 1):
            i = order[k]
            if math.isfinite(dist[i]):
                dist[i] += (front[order[k + 1]][m] - front[order[k - 1]][m]) / denom
    return dist


def repair(genes: np.ndarray, budget: GlobalBudget) -> np.ndarray:
    """Rescale any resource dimension whose slice sum exceeds its budget."""
    n_slices = len(genes) // 4
    out = np.array(genes, dtype=float)
    caps = budget.as_tuple()
    for d in range(4):
        idx = [s * 4 + d for s in range(n_slices)]
        total = out[idx].sum()
        if total > caps[d]:
            out[idx] *= caps[d] / total
    return out


def _genes_to_allocation(
    genes: np.ndarray, slices: list[SliceClass], mcs: int
) -> dict[SliceClass, tuple[ResourceVector, int]]:
    alloc = {}
    for i, s in enumerate(slices):
        b, c, p, st = genes[i * 4 : i * 4 + 4]
        alloc[s] = (ResourceVector(max(b, 0.0), max(c, 0.0), max(p, 0.0), max(st, 0.0)), mcs)
    return alloc


def evaluate(
    ind: Individual,
    slices: list[SliceClass],
    mcs: int,
    clauses: list[SlaClause],
    kpi_params: KpiModelParams,
) -> Individual:
    """Attach the minimization objectives and SLA feasibility to an individual."""
    alloc = _genes_to_allocation(ind.genes, slices, mcs)
    kpis = {s: slice_kpis(rv, m, kpi_params, s) for s, (rv, m) in alloc.items()}
    obj = (
        -sum(k.throughput_mbps for k in kpis.values()),
        sum(k.latency_ms for k in kpis.values()),
        sum(k.cost_eur for k in kpis.values()),
        sum(k.energy_w for k in kpis.values()),
    )
    violation = None
    for clause in clauses:
        if clause.slice not in kpis:
            continue
        violation = clause.violation(kpis[clause.slice])
        if violation:
            break
    ind.objectives = obj
    ind.feasible = violation is None
    ind.violation = violation
    return ind


def _rank_population(pop: list[Individual]) -> None:
    """Constrained non-dominated ranking: infeasible individuals go last."""
    feasible = [i for i, ind in enumerate(pop) if ind.feasible]
    infeasible = [i for i, ind in enumerate(pop) if not ind.feasible]
    if feasible:
        fronts = non_dominated_sort([pop[i].objectives for i in feasible])
        last = 0
        for r, front in enumerate(fronts):
            dists = crowding_distance([pop[feasible[i]].objectives for i in front])
            for i, d in zip(front, dists):
                pop[feasible[i]].rank = r
                pop[feasible[i]].crowding = d
            last = r
    else:
        last = -1
    for i in infeasible:
        pop[i].rank = last + 1
        pop[i].crowding = 0.0


def _snap_to_grid(genes: np.ndarray, grid: list[np.ndarray]) -> np.ndarray:
    """Floor-snap each gene to its grid so budget sums can only shrink."""
    out = np.empty_like(genes)
    for g, levels in enumerate(grid):
        below = levels[levels <= genes[g] + 1e-12]
        out[g] = below.max() if len(below) else levels.min()
    return out


def _seed_individual(
    slices: list[SliceClass],
    mcs: int,
    clauses: list[SlaClause],
    kpi_params: KpiModelParams,
    budget: GlobalBudget,
) -> np.ndarray:
    """Heuristic seed: enough bandwidth per slice to clear throughput and
    latency bounds (with 10% slack), zero compute/power/storage."""
    eff = kpi_params.kappa * kpi_params.mcs_table[mcs].spectral_efficiency
    genes = np.zeros(4 * len(slices))
    for i, s in enumerate(slices):
        need_t = 0.0
        for clause in clauses:
            if clause.slice is not s:
                continue
            if clause.min_throughput_mbps is not None:
                need_t = max(need_t, clause.min_throughput_mbps)
            if clause.max_latency_ms is not None and math.isfinite(clause.max_latency_ms):
                rho = kpi_params.load_ratio[s]
                l_fix = kpi_params.fixed_latency_ms[s]
                queue_budget_ms = clause.max_latency_ms - l_fix
                if queue_budget_ms > 0:
                    mu_needed = 1000.0 / (queue_budget_ms * (1 - rho))
                    need_t = max(need_t, mu_needed * kpi_params.packet_bits / 1e6)
        if need_t > 0 and eff > 0:
            genes[i * 4] = min(need_t * 1.1 / eff, budget.b_max)
    return repair(genes, budget)


def run_nsga2(
    budget: GlobalBudget,
    clauses: list[SlaClause],
    params: NsgaParams,
    kpi_params: KpiModelParams,
    mcs: int = 28,
    slices: list[SliceClass] | None = None,
) -> list[Offer]:
    """Evolve a population and return the feasible non-dominated front as
    offers, sorted by descending crowding distance (ids 1-based in that order).

    Raises InfeasibleScenarioError when no feasible individual survives.
    """
    slices = list(slices) if slices is not None else list(SliceClass)
    n_genes = 4 * len(slices)
    caps = np.array([budget.as_tuple()[g % 4] for g in range(n_genes)])
    rng = np.random.Generator(np.random.PCG64(params.rng_seed))

    def make(genes: np.ndarray) -> Individual:
        # Reflect out-of-range genes back into [0, cap] rather than clipping;
        # clipping piles probability mass on exact bounds and collapses the
        # realized front.
        genes = np.abs(genes)
        over = genes > caps
        genes[over] = np.maximum(2 * caps[over] - genes[over], 0.0)
        genes = repair(genes, budget)
        if params.gene_grid is not None:
            genes = _snap_to_grid(genes, params.gene_grid)
        return evaluate(Individual(genes), slices, mcs, clauses, kpi_params)

    pop = [make(rng.uniform(0.0, caps)) for _ in range(params.population - 1)]
    pop.append(make(_seed_individual(slices, mcs, clauses, kpi_params, budget)))
    _rank_population(pop)

    def tournament() -> Individual:
        i, j = rng.integers(0, len(pop)), rng.integers(0, len(pop))
        a, b = pop[i], pop[j]
        if (a.rank, -a.crowding, i) <= (b.rank, -b.crowding, j):
            return a
        return b

    sigma = params.mutation_sigma_frac * caps
    for _ in range(params.generations):
        children = []
        while len(children) < params.population:
            pa, pb = tournament(), tournament()
            ga, gb = pa.genes.copy(), pb.genes.copy()
            if rng.random() < params.p_crossover:
                mask = rng.random(n_genes) < 0.5
                ga[mask], gb[mask] = gb[mask], ga[mask].copy()
            for g in (ga, gb):
                mut = rng.random(n_genes) < params.p_mutation
                g[mut] += rng.normal(0.0, sigma[mut])
            children.append(make(ga))
            children.append(make(gb))
        combined = pop + children
        _rank_population(combined)
        combined.sort(key=lambda ind: (ind.rank, -ind.crowding))
        pop = combined[: params.population]

    survivors = [ind for ind in pop if ind.feasible and ind.rank == 0]
    if not survivors:
        best = min(pop, key=lambda ind: ind.rank)
        raise InfeasibleScenarioError(best.violation or "global budget")

    # Deduplicate identical objective vectors to keep the front meaningful.
    seen: set = set()
    unique = []
    for ind in survivors:
        key = tuple(round(v, 9) for v in ind.objectives)
        if key not in seen:
            seen.add(key)
            unique.append(ind)
    dists = crowding_distance([ind.objectives for ind in unique])
    order = sorted(range(len(unique)), key=lambda i: (-dists[i], i))
    offers = []
    for oid, i in enumerate(order, start=1):
        ind = unique[i]
        alloc = _genes_to_allocation(ind.genes, slices, mcs)
        offers.append(
            Offer(
                id=oid,
                per_slice={s: slice_kpis(rv, m, kpi_params, s) for s, (rv, m) in alloc.items()},
                per_slice_resources={s: rv for s, (rv, _) in alloc.items()},
                objectives=ind.objectives,
                crowding=dists[i],
            )
        )
    return offers


def select_offers(front: list[Offer], k: int) -> tuple[list[Offer], bool]:
    """Top-k offers by crowding distance (ties by lower id).

    Returns (offers, short_front_flag); the flag is set when |front| < k.
    """
    if not front:
        raise ValueError("front must be non-empty")
    ranked = sorted(front, key=lambda o: (-o.crowding, o.id))
    return ranked[: min(k, len(ranked))], len(front) < k


# --- independent oracle: exhaustive grid enumeration -----------------------


def pareto_filter(points: np.ndarray) -> np.ndarray:
    """Indices of the non-dominated rows of a (n, d) minimization array."""
    n = len(points)
    keep = np.ones(n, dtype=bool)
    order = np.lexsort(points.T[::-1])
    pts = points[order]
    for i in range(n):
        if not keep[order[i]]:
            continue
        p = pts[i]
        later = order[i + 1 :]
        cand = points[later]
        dominated = np.all(p <= cand, axis=1) & np.any(p < cand, axis=1)
        keep[later[dominated]] = False
        equal = np.all(p == cand, axis=1)
        keep[later[equal]] = False  # drop duplicates, keep first
    return np.flatnonzero(keep)


def brute_force_front(
    budget: GlobalBudget,
    clauses: list[SlaClause],
    kpi_params: KpiModelParams,
    mcs: int,
    slices: list[SliceClass],
    grid_levels: list[np.ndarray],
) -> np.ndarray:
    """Enumerate every grid allocation and return the feasible non-dominated
    objective vectors. grid_levels has one array of allowed values per gene
    (4 genes per slice, slice-major).

    Per-slice combinations are evaluated through the KPI models once each,
    then composed across slices with numpy so the full cross product stays
    tractable.
    """
    per_genes, per_obj, per_feas = [], [], []
    for si, s in enumerate(slices):
        local = list(itertools.product(*grid_levels[si * 4 : si * 4 + 4]))
        genes = np.array(local, dtype=float)
        obj = np.empty((len(local), 4))
        feas = np.ones(len(local), dtype=bool)
        my_clauses = [c for c in clauses if c.slice is s]
        for i, (b, c, p, st) in enumerate(local):
            k = slice_kpis(ResourceVector(b, c, p, st), mcs, kpi_params, s)
            obj[i] = (-k.throughput_mbps, k.latency_ms, k.cost_eur, k.energy_w)
            feas[i] = all(cl.violation(k) is None for cl in my_clauses)
        per_genes.append(genes)
        per_obj.append(obj)
        per_feas.append(feas)

    # Fold slices together: accumulate per-dimension gene sums, objective sums
    # and the joint feasibility mask.
    sums, objs, feas = per_genes[0], per_obj[0], per_feas[0]
    for g, o, f in zip(per_genes[1:], per_obj[1:], per_feas[1:]):
        sums = (sums[:, None, :] + g[None, :, :]).reshape(-1, 4)
        objs = (objs[:, None, :] + o[None, :, :]).reshape(-1, 4)
        feas = (feas[:, None] & f[None, :]).reshape(-1)

    caps = np.array(budget.as_tuple())
    mask = feas & np.all(sums <= caps + 1e-12, axis=1)
    if not mask.any():
        raise InfeasibleScenarioError("grid instance has no feasible point")
    arr = np.unique(objs[mask], axis=0)
    return arr[pareto_filter(arr)]


def hypervolume(points: np.ndarray, ref: np.ndarray) -> float:
    """Exact dominated hypervolume (minimization) by recursive slicing."""
    pts = np.asarray(points, dtype=float)
    ref = np.asarray(ref, dtype=float)
    pts = pts[np.all(pts <= ref, axis=1)]
    if len(pts) == 0:
        return 0.0
    pts = pts[pareto_filter(pts)]
    d = pts.shape[1]
    if d == 1:
        return float(ref[0] - pts[:, 0].min())
    order = np.argsort(pts[:, -1], kind="stable")
    pts = pts[order]
    total = 0.0
    for i in range(len(pts)):
        z = pts[i, -1]
        z_next = pts[i + 1, -1] if i + 1 < len(pts) else ref[-1]
        if z_next > z:
            slab = hypervolume(pts[: i + 1, :-1], ref[:-1])
            total += slab * (z_next - z)
    return float(total)


def front_kpi_matrix(offers: list[Offer], slices: list[SliceClass]) -> np.ndarray:
    """Stack offers' per-slice KPI tuples into one row per offer (for NGD etc.)."""
    rows = []
    for o in offers:
        row = []
        for s in slices:
            row.extend(o.per_slice[s].as_tuple())
        rows.append(row)
    return np.array(rows)


def replace_params(params: NsgaParams, **kw) -> NsgaParams:
    return replace(params, **kw)
