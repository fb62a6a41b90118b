import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agoran.netsim import (
    McsTrace,
    NetsimError,
    NetsimParams,
    PhaseConfig,
    RunReport,
    SliceConfig,
    _Packet,
    _SliceRuntime,
    default_trace,
    prb_ledger,
    prbs_from_shares,
    run_phases,
    step_tti,
)


def phase(name="P", n=200, mcs=28, slices=None, active=True):
    slices = slices or [SliceConfig("s", 0.5, 10.0)]
    return PhaseConfig(name, n, mcs, slices, cell_active=active)


class TestMcsTrace:
    def test_value_holds_until_next_breakpoint(self):
        t = McsTrace([(0, 28), (100, 7)])
        assert t.value_at(0) == 28
        assert t.value_at(99) == 28
        assert t.value_at(100) == 7
        assert t.value_at(10_000) == 7

    def test_ttis_must_strictly_increase(self):
        with pytest.raises(NetsimError, match="strictly increasing"):
            McsTrace([(0, 28), (0, 7)])
        with pytest.raises(NetsimError, match="strictly increasing"):
            McsTrace([(10, 28), (5, 7)])

    def test_empty_rejected(self):
        with pytest.raises(NetsimError):
            McsTrace([])

    def test_mcs_range_checked(self):
        with pytest.raises(NetsimError, match="invalid MCS"):
            McsTrace([(0, 29)])

    def test_csv_roundtrip(self, tmp_path):
        t = default_trace()
        p = tmp_path / "trace.csv"
        t.to_csv(p)
        assert McsTrace.from_csv(p).entries == t.entries

    def test_default_trace_shape(self):
        t = default_trace()
        assert t.entries == [(0, 28), (625, 7), (1250, 7), (1875, 28)]


class TestPrbRounding:
    def test_exact_shares(self):
        assert prbs_from_shares([0.5, 0.5], 106) == [53, 53]

    def test_largest_remainder(self):
        # raw PRBs 47.594 / 28.09 / 30.316: the single leftover PRB goes to
        # the largest fractional part
        assert prbs_from_shares([0.449, 0.265, 0.286], 106) == [48, 28, 30]

    def test_total_preserved(self):
        got = prbs_from_shares([0.3333, 0.3333, 0.3334], 106)
        assert sum(got) == 106

    def test_partial_allocation(self):
        assert sum(prbs_from_shares([0.25, 0.25], 106)) == 53

    def test_zero_shares(self):
        assert prbs_from_shares([0.0, 0.0], 106) == [0, 0]

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
    def test_sum_matches_rounded_request(self, shares):
        total = sum(shares)
        if total > 1:
            shares = [s / total for s in shares]
        got = prbs_from_shares(shares, 106)
        assert sum(got) == int(round(sum(s * 106 for s in shares)))
        assert all(g >= 0 for g in got)


class TestConfigValidation:
    def test_share_out_of_range(self):
        with pytest.raises(NetsimError):
            SliceConfig("s", 1.2, 1.0)

    def test_negative_load(self):
        with pytest.raises(NetsimError):
            SliceConfig("s", 0.5, -1.0)

    def test_overcommitted_phase(self):
        with pytest.raises(NetsimError, match="sum"):
            PhaseConfig("P", 10, 28, [SliceConfig("a", 0.6, 1), SliceConfig("b", 0.6, 1)])

    def test_empty_phase(self):
        with pytest.raises(NetsimError):
            PhaseConfig("P", 0, 28, [SliceConfig("a", 0.5, 1)])


class TestServe:
    def test_single_packet_sojourn(self):
        rt = _SliceRuntime(SliceConfig("s", 1.0, 0.0), 100)
        rt.queue.append(_Packet(arrival_ms=0.25, bits_left=500.0))
        served, sojourns = rt.serve(0, 1000.0)  # 1000 bits per ms
        assert served == 500.0
        assert sojourns == [pytest.approx(0.5)]  # 0.25 waiting for nothing + 0.5 service

    def test_partial_packet_carries_over(self):
        rt = _SliceRuntime(SliceConfig("s", 1.0, 0.0), 100)
        rt.queue.append(_Packet(arrival_ms=0.0, bits_left=1500.0))
        served, sojourns = rt.serve(0, 1000.0)
        assert served == 1000.0 and sojourns == []
        served, sojourns = rt.serve(1, 1000.0)
        # finishes at t=1.5 against the original arrival time
        assert served == 500.0
        assert sojourns == [pytest.approx(1.5)]

    def test_fifo_order(self):
        rt = _SliceRuntime(SliceConfig("s", 1.0, 0.0), 100)
        rt.queue.append(_Packet(0.0, 200.0))
        rt.queue.append(_Packet(0.1, 200.0))
        _, sojourns = rt.serve(0, 1000.0)
        assert sojourns == [pytest.approx(0.2), pytest.approx(0.3)]

    def test_no_capacity_serves_nothing(self):
        rt = _SliceRuntime(SliceConfig("s", 1.0, 0.0), 100)
        rt.queue.append(_Packet(0.0, 100.0))
        assert rt.serve(0, 0.0) == (0.0, [])

    def test_queue_cap_drops(self):
        rt = _SliceRuntime(SliceConfig("s", 1.0, 1000.0), max_queue=5)
        rng = np.random.Generator(np.random.PCG64(0))
        rt.arrivals(0, rng, 12000)
        assert len(rt.queue) <= 5
        assert rt.dropped > 0


class TestStepTti:
    def test_conservation(self):
        params = NetsimParams(rng_seed=1)
        rts = [
            _SliceRuntime(SliceConfig("a", 0.5, 40.0), 10_000),
            _SliceRuntime(SliceConfig("b", 0.5, 40.0), 10_000),
        ]
        cell_bits = params.cell_capacity_mbps(28) * 1000
        rng = np.random.Generator(np.random.PCG64(1))
        for tti in range(50):
            results = step_tti(tti, rts, 28, params, rng)
            for (bits, _, used), prbs in zip(results, [53, 53]):
                assert 0 <= bits <= cell_bits / 2 + 1e-6
                assert 0 <= used <= prbs

    def test_inactive_cell_serves_nothing(self):
        params = NetsimParams(rng_seed=1)
        rts = [_SliceRuntime(SliceConfig("a", 1.0, 40.0), 100)]
        rng = np.random.Generator(np.random.PCG64(1))
        results = step_tti(0, rts, 28, params, rng, cell_active=False)
        assert results == [(0.0, [], 0)]
        assert not rts[0].queue  # no arrivals admitted while the cell is off

    def test_saturated_slice_tracks_mcs_capacity(self):
        # at MCS 7 a saturated half-share slice serves its PRB share of the
        # degraded cell capacity
        params = NetsimParams(rng_seed=5)
        cap7 = params.cell_capacity_mbps(7)
        rep = run_phases(
            [phase(n=600, mcs=7, slices=[SliceConfig("s", 0.5, 100.0)])], params
        )
        served = rep.phases[0].per_slice["s"]["throughput_mbps"]
        assert served == pytest.approx(53 / 106 * cap7, rel=0.01)


class TestRunPhases:
    def test_deterministic(self):
        phases = [phase(n=300, slices=[SliceConfig("s", 0.4, 20.0)])]
        a = run_phases(phases, NetsimParams(rng_seed=9)).to_dict()
        b = run_phases(phases, NetsimParams(rng_seed=9)).to_dict()
        assert a == b

    def test_seed_changes_realization(self):
        phases = [phase(n=300, slices=[SliceConfig("s", 0.4, 20.0)])]
        a = run_phases(phases, NetsimParams(rng_seed=1)).to_dict()
        b = run_phases(phases, NetsimParams(rng_seed=2)).to_dict()
        assert a != b

    def test_queue_flushed_at_phase_boundary(self):
        # overload in phase 1, zero traffic in phase 2: the backlog must not
        # leak across the boundary
        p1 = phase("P1", n=150, slices=[SliceConfig("s", 0.1, 80.0)])
        p2 = phase("P2", n=150, slices=[SliceConfig("s", 0.1, 0.0)])
        rep = run_phases([p1, p2], NetsimParams(rng_seed=3))
        s2 = rep.phase_summary("P2").per_slice["s"]
        assert s2["throughput_mbps"] == 0.0
        assert s2["latency_ms"] == math.inf

    def test_inactive_phase_all_zero(self):
        rep = run_phases(
            [phase(active=False)], NetsimParams(rng_seed=3)
        )
        p = rep.phases[0].per_slice["s"]
        assert p["throughput_mbps"] == 0.0 and p["prbs_used"] == 0
        assert rep.total_prbs_per_tti().sum() == 0

    def test_slice_names_must_match_across_phases(self):
        p1 = phase("P1", slices=[SliceConfig("a", 0.5, 1.0)])
        p2 = phase("P2", slices=[SliceConfig("b", 0.5, 1.0)])
        with pytest.raises(NetsimError, match="same slice names"):
            run_phases([p1, p2])

    def test_trace_overrides_phase_mcs(self):
        tr = McsTrace([(0, 28), (100, 7)])
        rep = run_phases([phase(n=200, mcs=28)], NetsimParams(rng_seed=0), trace=tr)
        assert rep.mcs_series[0] == 28 and rep.mcs_series[150] == 7

    def test_unknown_phase_summary(self):
        rep = run_phases([phase()], NetsimParams(rng_seed=0))
        with pytest.raises(NetsimError):
            rep.phase_summary("nope")

    def test_low_load_served_matches_offered(self):
        offered = 10.0
        rep = run_phases(
            [phase(n=2000, slices=[SliceConfig("s", 0.5, offered)])],
            NetsimParams(rng_seed=11),
        )
        assert rep.phases[0].per_slice["s"]["throughput_mbps"] == pytest.approx(
            offered, rel=0.05
        )

    def test_latency_matches_queueing_theory_at_half_load(self):
        params = NetsimParams(rng_seed=3)
        cap = 53 / 106 * params.cell_capacity_mbps(28)
        offered = 0.5 * cap
        rep = run_phases(
            [phase(n=4000, slices=[SliceConfig("s", 0.5, offered)])], params
        )
        mu, lam = cap / 12, offered / 12  # packets per ms
        theory = 1 / (mu - lam) + 1.0  # sojourn plus fixed component
        got = rep.phases[0].per_slice["s"]["latency_ms"]
        assert got == pytest.approx(theory, rel=0.15)

    def test_fixed_latency_added(self):
        base = [SliceConfig("s", 0.5, 10.0, fixed_latency_ms=1.0)]
        bumped = [SliceConfig("s", 0.5, 10.0, fixed_latency_ms=4.0)]
        a = run_phases([phase(slices=base)], NetsimParams(rng_seed=2))
        b = run_phases([phase(slices=bumped)], NetsimParams(rng_seed=2))
        la = a.phases[0].per_slice["s"]["latency_ms"]
        lb = b.phases[0].per_slice["s"]["latency_ms"]
        assert lb == pytest.approx(la + 3.0)

    def test_to_dict_downsamples(self):
        rep = run_phases([phase(n=200)], NetsimParams(rng_seed=0))
        d = rep.to_dict(downsample=10)
        assert len(d["series"]["mcs"]) == 20
        assert len(d["series"]["served_mbps"]["s"]) == 20
        assert d["downsample"] == 10

    def test_to_dict_json_safe(self):
        import json

        rep = run_phases([phase(active=False)], NetsimParams(rng_seed=0))
        payload = json.dumps(rep.to_dict())
        assert "NaN" not in payload


class TestPrbLedger:
    def test_identical_runs_net_zero(self):
        rep = run_phases([phase(n=300, slices=[SliceConfig("s", 0.5, 20.0)])],
                         NetsimParams(rng_seed=4))
        assert prb_ledger(rep, rep) == (0, 0, 0.0)

    def test_half_usage_saves_half(self):
        # saturated slices pin PRB usage to the allocation, so halving the
        # share halves the ledger exactly
        full = run_phases([phase(n=200, slices=[SliceConfig("s", 1.0, 500.0)])],
                          NetsimParams(rng_seed=4))
        half = run_phases([phase(n=200, slices=[SliceConfig("s", 0.5, 500.0)])],
                          NetsimParams(rng_seed=4))
        saved, added, net = prb_ledger(half, full)
        assert added == 0
        # ramp-up in the very first TTIs shaves a couple of PRBs off the ideal
        assert saved == pytest.approx(200 * 53, abs=5)
        assert net == pytest.approx(50.0, abs=0.1)

    def test_length_mismatch_rejected(self):
        a = run_phases([phase(n=100)], NetsimParams(rng_seed=0))
        b = run_phases([phase(n=101)], NetsimParams(rng_seed=0))
        with pytest.raises(NetsimError, match="same number of TTIs"):
            prb_ledger(a, b)

    def test_empty_static_run(self):
        rep = run_phases([phase(n=50, active=False)], NetsimParams(rng_seed=0))
        assert prb_ledger(rep, rep) == (0, 0, 0.0)
