import json
import math

import pytest

from agoran.kpi import SliceClass
from agoran.protocol import (
    Intent,
    MediatorParams,
    NegotiationMessage,
    ProtocolError,
    Session,
    SessionPhase,
    canonical_bytes,
    sign,
    zero_offer,
)

KEYS = {"MediaFlex": b"k-media", "FactoryOps": b"k-factory", "IoTSense": b"k-iot"}
MKEY = b"k-mediator"


def fresh_session(max_rounds=10):
    ticks = iter(range(1000, 100000))
    return Session("s-1", KEYS, MKEY, max_rounds=max_rounds, clock=lambda: next(ticks))


def standard_intents():
    return [
        Intent("MediaFlex", SliceClass.EMBB, 60, 10, 200),
        Intent("FactoryOps", SliceClass.URLLC, 5, 2, 200),
        Intent("IoTSense", SliceClass.MMTC, 20, 10, 30),
    ]


def negotiating_session(offers):
    s = fresh_session()
    for i in standard_intents():
        s.submit_intent(i)
    s.publish_offers(offers)
    return s


class TestCanonicalization:
    def test_sorted_compact(self):
        assert canonical_bytes({"b": 1, "a": [2, 3]}) == b'{"a":[2,3],"b":1}'

    def test_inf_becomes_null(self):
        assert canonical_bytes({"x": math.inf, "y": [-math.inf]}) == b'{"x":null,"y":[null]}'

    def test_float_shortest_repr(self):
        assert canonical_bytes({"v": 0.1}) == b'{"v":0.1}'


class TestSigning:
    def _msg(self):
        return NegotiationMessage("s-1", 1, "MediaFlex", "selection", {"offer_id": 2}, 1234)

    def test_sign_serialize_parse_verify(self):
        signed = self._msg().signed(KEYS["MediaFlex"])
        parsed = NegotiationMessage.from_json_line(signed.to_json_line())
        assert parsed.verify(KEYS["MediaFlex"])

    def test_wrong_key_fails(self):
        signed = self._msg().signed(KEYS["MediaFlex"])
        assert not signed.verify(KEYS["FactoryOps"])

    def test_tampered_payload_fails(self):
        signed = self._msg().signed(KEYS["MediaFlex"])
        doc = json.loads(signed.to_json_line())
        doc["payload"]["offer_id"] = 3
        assert not NegotiationMessage.from_json_line(json.dumps(doc)).verify(KEYS["MediaFlex"])

    def test_signature_is_hmac_of_canonical_bytes(self):
        m = self._msg()
        assert m.signed(KEYS["MediaFlex"]).sig == sign(m.signing_bytes(), KEYS["MediaFlex"])


class TestIntent:
    def test_negative_bound_rejected(self):
        with pytest.raises(ValueError):
            Intent("a", SliceClass.EMBB, min_throughput_mbps=-1)

    def test_has_bounds(self):
        assert Intent("a", SliceClass.EMBB, min_throughput_mbps=60).has_bounds
        assert not Intent("a", SliceClass.EMBB, freeform_text="hello").has_bounds

    def test_shutdown_detection(self):
        off = Intent("a", SliceClass.EMBB, max_latency_ms=math.inf, freeform_text="off")
        assert off.is_shutdown()
        assert not Intent("a", SliceClass.EMBB, 60, 10).is_shutdown()

    def test_payload_roundtrip_with_unbounded_latency(self):
        i = Intent("a", SliceClass.MMTC, max_latency_ms=math.inf, freeform_text="off")
        p = i.to_payload()
        p["_latency_unbounded"] = True
        p["max_latency_ms"] = None  # wire form
        back = Intent.from_payload(p)
        assert math.isinf(back.max_latency_ms)
        assert back.is_shutdown()


class TestIntentPhase:
    def test_unknown_agent_rejected(self):
        s = fresh_session()
        with pytest.raises(ProtocolError, match="unknown agent"):
            s.submit_intent(Intent("Ghost", SliceClass.EMBB, 60))

    def test_empty_intent_rejected(self):
        s = fresh_session()
        with pytest.raises(ProtocolError, match="nothing to negotiate"):
            s.submit_intent(Intent("MediaFlex", SliceClass.EMBB))

    def test_duplicate_replaces_with_warning(self):
        s = fresh_session()
        s.submit_intent(Intent("MediaFlex", SliceClass.EMBB, 60))
        s.submit_intent(Intent("MediaFlex", SliceClass.EMBB, 65))
        assert s.intents["MediaFlex"].min_throughput_mbps == 65
        assert any("replaced" in w for w in s.warnings)

    def test_all_collected_gates_offers(self, published_offers):
        s = fresh_session()
        s.submit_intent(standard_intents()[0])
        with pytest.raises(ProtocolError, match="all registered intents"):
            s.publish_offers(published_offers)
        assert not s.all_intents_collected()
        for i in standard_intents()[1:]:
            s.submit_intent(i)
        assert s.all_intents_collected()

    def test_shutdown_request_detection(self):
        s = fresh_session()
        for a, uc in (("MediaFlex", SliceClass.EMBB), ("FactoryOps", SliceClass.URLLC), ("IoTSense", SliceClass.MMTC)):
            s.submit_intent(Intent(a, uc, max_latency_ms=math.inf, freeform_text="suspend"))
        assert s.is_shutdown_request()


class TestStateMachine:
    def test_publish_transitions_to_negotiating(self, published_offers):
        s = negotiating_session(published_offers)
        assert s.phase is SessionPhase.NEGOTIATING
        assert s.round == 1

    def test_empty_offer_list_rejected(self):
        s = fresh_session()
        for i in standard_intents():
            s.submit_intent(i)
        with pytest.raises(ProtocolError, match="empty offer list"):
            s.publish_offers([])

    def test_no_selection_outside_negotiating(self):
        s = fresh_session()
        with pytest.raises(ProtocolError, match="cannot select"):
            s.record_selection("MediaFlex", 1, "r")

    def test_no_enforce_before_consensus(self, published_offers):
        s = negotiating_session(published_offers)
        with pytest.raises(ProtocolError, match="cannot enforce"):
            s.enforce()

    def test_no_mediate_without_selections(self, published_offers):
        s = negotiating_session(published_offers)
        with pytest.raises(ProtocolError, match="requires collected selections"):
            s.mediate()

    def test_no_double_publish(self, published_offers):
        s = negotiating_session(published_offers)
        with pytest.raises(ProtocolError, match="cannot publish"):
            s.publish_offers(published_offers)

    def test_abort_records_cause(self, published_offers):
        s = fresh_session()
        s.abort("optimizer infeasible: demo")
        assert s.phase is SessionPhase.ABORTED
        assert "infeasible" in s.abort_cause

    def test_round_monotone_in_transcript(self, published_offers):
        s = negotiating_session(published_offers)
        s.collect_selections({a: (1, "r") for a in KEYS})
        s.mediate()
        s.step_round({a: (1, "r") for a in KEYS})
        rounds = [m.round for m in s.transcript]
        assert rounds == sorted(rounds)


class TestSelections:
    def test_off_menu_flagged_invalid(self, published_offers):
        s = negotiating_session(published_offers)
        s.record_selection("MediaFlex", 99, "I want more")
        assert not s.selections["MediaFlex"].valid

    def test_on_menu_valid(self, published_offers):
        s = negotiating_session(published_offers)
        s.record_selection("MediaFlex", 1, "best throughput")
        assert s.selections["MediaFlex"].valid


class TestMediate:
    def test_recommends_lowest_energy_balanced_offer(self, published_offers):
        s = negotiating_session(published_offers)
        s.collect_selections({"MediaFlex": (1, "r"), "FactoryOps": (2, "r"), "IoTSense": (3, "r")})
        s.mediate()
        assert s.recommendation == 2
        assert "offer 2" in s.recommendation_rationale
        for agent in KEYS:
            assert agent in s.recommendation_rationale

    def test_influence_scale_invariance(self, published_offers):
        s = negotiating_session(published_offers)
        s.collect_selections({a: (1, "r") for a in KEYS})
        s.mediate()
        base = s.recommendation
        s.influence = {a: 3.0 for a in KEYS}
        s.mediate()
        assert s.recommendation == base

    def test_fined_agent_weighs_less(self, published_offers):
        # With the energy bias off and mMTC doubled, the cost-min offer wins;
        # fining the mMTC agent to near zero flips the argmax.
        s = negotiating_session(published_offers)
        s.collect_selections({a: (1, "r") for a in KEYS})
        params = MediatorParams(energy_weight=0.0)
        s.influence["IoTSense"] = 2.0
        s.mediate(params)
        boosted = s.recommendation
        s.influence["IoTSense"] = 1e-6
        s.mediate(params)
        assert boosted == 3  # mMTC's cost-min pick dominates when boosted
        assert s.recommendation != 3


class TestStepRound:
    def _to_recommendation(self, s):
        s.collect_selections({"MediaFlex": (1, "r"), "FactoryOps": (2, "r"), "IoTSense": (3, "r")})
        s.mediate()

    def test_unanimous_consensus_in_one_round(self, published_offers):
        s = negotiating_session(published_offers)
        self._to_recommendation(s)
        phase = s.step_round({a: (2, "adopting the recommendation") for a in KEYS})
        assert phase is SessionPhase.CONSENSUS
        assert s.consensus_offer == 2
        assert not s.consensus_forced
        assert s.round == 1

    def test_persistent_split_forces_consensus_at_max_rounds(self, published_offers):
        s = negotiating_session(published_offers)
        self._to_recommendation(s)
        for _ in range(10):
            if s.phase is not SessionPhase.NEGOTIATING:
                break
            s.step_round({"MediaFlex": (1, "mine"), "FactoryOps": (2, "mine"), "IoTSense": (3, "mine")})
        assert s.phase is SessionPhase.CONSENSUS
        assert s.consensus_forced
        assert s.consensus_offer == s.recommendation
        assert s.round == 10

    def test_abstainers_adopt_recommendation(self, published_offers):
        s = negotiating_session(published_offers)
        self._to_recommendation(s)
        s.mark_abstaining("IoTSense")
        phase = s.step_round({"MediaFlex": (2, "ok"), "FactoryOps": (2, "ok")})
        assert phase is SessionPhase.CONSENSUS
        assert s.consensus_offer == 2

    def test_missing_selection_errors(self, published_offers):
        s = negotiating_session(published_offers)
        self._to_recommendation(s)
        s.selections.clear()
        with pytest.raises(ProtocolError, match="missing selections"):
            s.step_round({"MediaFlex": (2, "ok")})


class TestEnforcement:
    def _consensus_session(self, offers):
        s = negotiating_session(offers)
        s.collect_selections({a: (2, "r") for a in KEYS})
        s.mediate()
        s.step_round({a: (2, "r") for a in KEYS})
        return s

    def test_prb_shares_sum_to_one(self, published_offers):
        s = self._consensus_session(published_offers)
        d = s.decompose_consensus()
        assert sum(d.prb_shares.values()) == pytest.approx(1.0, abs=1e-9)
        assert d.offer_id == 2
        assert d.prb_shares[SliceClass.EMBB] == pytest.approx(0.449, abs=0.002)
        assert d.prb_shares[SliceClass.URLLC] == pytest.approx(0.265, abs=0.002)
        assert d.prb_shares[SliceClass.MMTC] == pytest.approx(0.286, abs=0.002)

    def test_zero_offer_all_zero_directive(self):
        s = fresh_session()
        for a, uc in (("MediaFlex", SliceClass.EMBB), ("FactoryOps", SliceClass.URLLC), ("IoTSense", SliceClass.MMTC)):
            s.submit_intent(Intent(a, uc, max_latency_ms=math.inf, freeform_text="suspend"))
        s.publish_offers([zero_offer(list(SliceClass))], short_front=True)
        s.collect_selections({a: (1, "shutdown") for a in KEYS})
        s.mediate()
        s.step_round({a: (1, "shutdown") for a in KEYS})
        d = s.decompose_consensus()
        assert all(v == 0.0 for v in d.prb_shares.values())
        assert all(v == 0.0 for v in d.power_w.values())

    def test_enforce_transition(self, published_offers):
        s = self._consensus_session(published_offers)
        s.enforce()
        assert s.phase is SessionPhase.ENFORCED


class TestIncentives:
    def test_fine_halves_influence(self, published_offers):
        s = negotiating_session(published_offers)
        s.apply_incentive("fine", "MediaFlex", 0.5, "toxic rationale")
        assert s.influence["MediaFlex"] == pytest.approx(0.5)

    def test_credit_capped_at_two(self, published_offers):
        s = negotiating_session(published_offers)
        for _ in range(10):
            s.apply_incentive("credit", "IoTSense", 1.2, "cooperative")
        assert s.influence["IoTSense"] <= 2.0

    def test_warn_leaves_influence(self, published_offers):
        s = negotiating_session(published_offers)
        s.apply_incentive("warn", "MediaFlex", 1.0, "first strike")
        assert s.influence["MediaFlex"] == 1.0

    def test_unknown_target_rejected(self, published_offers):
        s = negotiating_session(published_offers)
        with pytest.raises(ProtocolError, match="unknown agent"):
            s.apply_incentive("fine", "Ghost", 0.5, "r")


class TestReplay:
    def _full_session(self, offers):
        s = negotiating_session(offers)
        s.collect_selections({"MediaFlex": (1, "best throughput 60.72 Mbps"), "FactoryOps": (2, "low latency"), "IoTSense": (3, "cheapest")})
        s.mediate()
        s.apply_incentive("fine", "MediaFlex", 0.5, "hallucinated claim")
        s.step_round({a: (2, "adopting recommendation") for a in KEYS})
        return s

    def test_replay_reproduces_state(self, published_offers, tmp_path):
        s = self._full_session(published_offers)
        path = tmp_path / "transcript.jsonl"
        s.write_transcript(path)
        lines = path.read_text().splitlines()
        r = Session.replay(lines, KEYS, MKEY)
        assert r.phase == s.phase
        assert r.consensus_offer == s.consensus_offer
        assert r.recommendation == s.recommendation
        assert r.influence == s.influence
        assert {a: sel.offer_id for a, sel in r.selections.items()} == {
            a: sel.offer_id for a, sel in s.selections.items()
        }
        for ro, so in zip(r.offers, s.offers):
            assert ro.id == so.id
            for sc in SliceClass:
                assert ro.per_slice[sc].as_tuple() == pytest.approx(so.per_slice[sc].as_tuple())

    def test_replay_is_byte_stable(self, published_offers, tmp_path):
        s = self._full_session(published_offers)
        path = tmp_path / "t.jsonl"
        s.write_transcript(path)
        lines = path.read_text().splitlines()
        r = Session.replay(lines, KEYS, MKEY)
        assert [m.to_json_line() for m in r.transcript] == lines

    def test_replay_rejects_tampering(self, published_offers, tmp_path):
        s = self._full_session(published_offers)
        path = tmp_path / "t.jsonl"
        s.write_transcript(path)
        lines = path.read_text().splitlines()
        doc = json.loads(lines[-1])
        doc["payload"]["offer_id"] = 1
        lines[-1] = json.dumps(doc)
        with pytest.raises(ProtocolError, match="signature"):
            Session.replay(lines, KEYS, MKEY)

    def test_replay_empty_transcript_rejected(self):
        with pytest.raises(ProtocolError, match="empty"):
            Session.replay([], KEYS, MKEY)

    def test_listener_sees_every_message(self, published_offers):
        s = fresh_session()
        seen = []
        s.subscribe(seen.append)
        for i in standard_intents():
            s.submit_intent(i)
        s.publish_offers(published_offers)
        assert len(seen) == len(s.transcript) == 4
