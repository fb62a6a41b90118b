import pytest

from agoran.kpi import KpiModelParams, KpiVector, ResourceVector, SliceClass
from agoran.optimizer import GlobalBudget, NsgaParams, Offer, SlaClause

CELL_CAP_MBPS = 133.7
# Effective bandwidth budget calibrated so a full allocation at the top MCS
# hits the cell's peak throughput exactly.
B_MAX_MHZ = CELL_CAP_MBPS / (0.86 * 6 * 0.948)

# Per-class load profiles for the good-channel phase (scenario configuration).
PA_LOAD_RATIO = {
    SliceClass.EMBB: 0.957,
    SliceClass.URLLC: 0.294,
    SliceClass.MMTC: 0.9295,
}


@pytest.fixture
def pa_kpi_params():
    return KpiModelParams(load_ratio=dict(PA_LOAD_RATIO))


@pytest.fixture
def pa_budget():
    return GlobalBudget(b_max=B_MAX_MHZ, c_max=50.0, p_max=100.0, s_max=100.0)


@pytest.fixture
def pa_clauses():
    return [
        SlaClause(
            SliceClass.EMBB,
            min_throughput_mbps=60,
            max_latency_ms=10,
            max_cost_eur=200,
            max_energy_w=100,
        ),
        SlaClause(
            SliceClass.URLLC,
            min_throughput_mbps=5,
            max_latency_ms=2,
            max_cost_eur=200,
            max_energy_w=100,
        ),
        SlaClause(
            SliceClass.MMTC,
            min_throughput_mbps=20,
            max_latency_ms=10,
            max_cost_eur=30,
            max_energy_w=100,
        ),
    ]


@pytest.fixture
def nsga_params():
    return NsgaParams(rng_seed=7)


def make_offer(oid, kpis, resources, crowding=1.0):
    """Offer from raw per-slice (T, L, cost, energy) and resource 4-tuples."""
    per_slice = {s: KpiVector(*k) for s, k in kpis.items()}
    return Offer(
        id=oid,
        per_slice=per_slice,
        per_slice_resources={s: ResourceVector(*r) for s, r in resources.items()},
        objectives=(
            -sum(k.throughput_mbps for k in per_slice.values()),
            sum(k.latency_ms for k in per_slice.values()),
            sum(k.cost_eur for k in per_slice.values()),
            sum(k.energy_w for k in per_slice.values()),
        ),
        crowding=crowding,
    )


# Three-offer menu with the published KPI structure of the good-channel phase:
# overall throughput identical across offers, spread in cost and energy; the
# middle offer carries the lowest aggregate energy.
def _published_offers():
    E, U, M = SliceClass.EMBB, SliceClass.URLLC, SliceClass.MMTC
    res_2 = {
        E: (12.27, 5.6, 10.8, 26.1),
        U: (7.24, 21.7, 12.1, 44.5),
        M: (7.82, 0.0, 0.0, 1.1),
    }
    return [
        make_offer(
            1,
            {E: (60.72, 5.66, 61.52, 13.39), U: (34.82, 1.49, 133.14, 12.72), M: (38.14, 5.45, 2.19, 0.05)},
            {E: (12.41, 5.8, 11.0, 25.0), U: (7.12, 21.0, 12.5, 43.0), M: (7.80, 0.1, 0.1, 1.2)},
            crowding=float("inf"),
        ),
        make_offer(2, {E: (60.02, 5.67, 63.28, 10.77), U: (35.40, 1.48, 132.35, 12.08), M: (38.26, 5.45, 2.19, 0.00)}, res_2, crowding=2.0),
        make_offer(
            3,
            {E: (60.06, 5.67, 68.16, 12.84), U: (35.52, 1.48, 133.94, 12.92), M: (38.11, 5.45, 1.64, 2.46)},
            {E: (12.28, 5.7, 11.2, 27.0), U: (7.26, 21.9, 12.4, 45.0), M: (7.79, 0.0, 0.2, 1.0)},
            crowding=float("inf"),
        ),
    ]


@pytest.fixture
def published_offers():
    return _published_offers()
