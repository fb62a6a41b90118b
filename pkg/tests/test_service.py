import json

import pytest
from fastapi.testclient import TestClient

from agoran.service import ServiceState, create_app

ROSTER = [
    {"id": "MediaFlex", "persona": "Agreeable"},
    {"id": "FactoryOps", "persona": "Agreeable"},
    {"id": "IoTSense", "persona": "Agreeable"},
]

INTENTS = {
    "MediaFlex": {"use_case": "eMBB", "min_throughput_mbps": 60, "max_latency_ms": 10,
                  "max_cost_eur": 200, "max_energy_w": 100},
    "FactoryOps": {"use_case": "URLLC", "min_throughput_mbps": 5, "max_latency_ms": 2,
                   "max_cost_eur": 200, "max_energy_w": 100},
    "IoTSense": {"use_case": "mMTC", "min_throughput_mbps": 20, "max_latency_ms": 10,
                 "max_cost_eur": 30, "max_energy_w": 100},
}

NEGOTIATE_BODY = {
    "mcs": 28,
    "optimizer": {"population": 24, "generations": 10},
    "load_ratio": {"eMBB": 0.957, "URLLC": 0.294, "mMTC": 0.9295},
}


def make_client():
    return TestClient(create_app(ServiceState()))


def create_session(client, session_id="s1", **extra):
    resp = client.post(
        "/v1/sessions",
        json={"session_id": session_id, "seed": 7, "agents": ROSTER,
              "deterministic": True, **extra},
    )
    assert resp.status_code == 201, resp.text
    return resp.json()


def submit_all(client, sid, keys):
    for agent, bounds in INTENTS.items():
        resp = client.post(
            f"/v1/sessions/{sid}/intents",
            json={"agent_id": agent, **bounds},
            headers={"X-Agent-Key": keys[agent]},
        )
        assert resp.status_code == 202, resp.text
    return resp.json()


@pytest.fixture(scope="module")
def negotiated():
    """A client whose session has already reached consensus."""
    client = make_client()
    doc = create_session(client)
    submit_all(client, "s1", doc["keys"])
    result = client.post("/v1/sessions/s1/negotiate", json=NEGOTIATE_BODY)
    assert result.status_code == 200, result.text
    return client, doc, result.json()


class TestSessionLifecycle:
    def test_create_returns_keys_for_roster(self):
        doc = create_session(make_client())
        assert sorted(doc["keys"]) == sorted(a["id"] for a in ROSTER)
        assert doc["state"] == "collecting_intents"

    def test_duplicate_session_id_conflict(self):
        client = make_client()
        create_session(client)
        resp = client.post(
            "/v1/sessions", json={"session_id": "s1", "agents": ROSTER}
        )
        assert resp.status_code == 409

    def test_empty_roster_rejected(self):
        resp = make_client().post("/v1/sessions", json={"agents": []})
        assert resp.status_code == 400

    def test_unknown_persona_rejected(self):
        resp = make_client().post(
            "/v1/sessions", json={"agents": [{"id": "X", "persona": "Chaotic"}]}
        )
        assert resp.status_code == 400

    def test_unknown_session_404(self):
        client = make_client()
        for path in ("", "/offers", "/transcript", "/trust", "/events"):
            assert client.get(f"/v1/sessions/nope{path}").status_code == 404


class TestIntents:
    def test_wrong_key_unauthorized(self):
        client = make_client()
        create_session(client)
        resp = client.post(
            "/v1/sessions/s1/intents",
            json={"agent_id": "MediaFlex", **INTENTS["MediaFlex"]},
            headers={"X-Agent-Key": "00" * 32},
        )
        assert resp.status_code == 401

    def test_unknown_agent_unauthorized(self):
        client = make_client()
        doc = create_session(client)
        resp = client.post(
            "/v1/sessions/s1/intents",
            json={"agent_id": "Ghost", **INTENTS["MediaFlex"]},
            headers={"X-Agent-Key": doc["keys"]["MediaFlex"]},
        )
        assert resp.status_code == 401

    def test_malformed_intent_rejected(self):
        client = make_client()
        doc = create_session(client)
        resp = client.post(
            "/v1/sessions/s1/intents",
            json={"agent_id": "MediaFlex", "use_case": "warp-drive"},
            headers={"X-Agent-Key": doc["keys"]["MediaFlex"]},
        )
        assert resp.status_code == 400

    def test_accepted_intent_lists_collection(self):
        client = make_client()
        doc = create_session(client)
        out = submit_all(client, "s1", doc["keys"])
        assert sorted(out["collected"]) == sorted(INTENTS)


class TestNegotiation:
    def test_negotiate_before_all_intents_conflict(self):
        client = make_client()
        create_session(client)
        resp = client.post("/v1/sessions/s1/negotiate", json=NEGOTIATE_BODY)
        assert resp.status_code == 409
        assert "missing intents" in resp.json()["detail"]

    def test_consensus_reached(self, negotiated):
        _, _, result = negotiated
        assert result["consensus_offer"] is not None
        assert not result["forced"]
        assert result["post_offer_rounds"] == 1

    def test_directive_covers_all_slices(self, negotiated):
        _, _, result = negotiated
        shares = result["directive"]["prb_shares"]
        assert sorted(shares) == ["URLLC", "eMBB", "mMTC"]
        assert sum(shares.values()) == pytest.approx(1.0)

    def test_double_negotiate_conflict(self, negotiated):
        client, _, _ = negotiated
        resp = client.post("/v1/sessions/s1/negotiate", json=NEGOTIATE_BODY)
        assert resp.status_code == 409

    def test_offers_exposed_with_recommendation(self, negotiated):
        client, _, result = negotiated
        doc = client.get("/v1/sessions/s1/offers").json()
        assert 1 <= len(doc["offers"]) <= 3
        assert doc["consensus_offer"] == result["consensus_offer"]
        assert any(o["id"] == doc["recommendation"] for o in doc["offers"])

    def test_trust_reports_after_consensus(self, negotiated):
        client, _, _ = negotiated
        doc = client.get("/v1/sessions/s1/trust").json()
        assert sorted(doc) == sorted(INTENTS)
        for report in doc.values():
            assert 0.0 <= report["components"]["T_scaled"] <= 5.0

    def test_trust_before_consensus_conflict(self):
        client = make_client()
        create_session(client)
        assert client.get("/v1/sessions/s1/trust").status_code == 409

    def test_infeasible_bounds_conflict(self):
        client = make_client()
        doc = create_session(client)
        for agent, bounds in INTENTS.items():
            body = {"agent_id": agent, **bounds}
            body["min_throughput_mbps"] = 500.0  # beyond any cell capacity
            assert client.post(
                "/v1/sessions/s1/intents", json=body,
                headers={"X-Agent-Key": doc["keys"][agent]},
            ).status_code == 202
        resp = client.post("/v1/sessions/s1/negotiate", json=NEGOTIATE_BODY)
        assert resp.status_code == 409
        assert "infeasible" in resp.json()["detail"]


class TestTranscriptAndEvents:
    def test_transcript_byte_identical_re_get(self, negotiated):
        client, _, _ = negotiated
        a = client.get("/v1/sessions/s1/transcript").content
        b = client.get("/v1/sessions/s1/transcript").content
        assert a and a == b

    def test_transcript_lines_are_signed_json(self, negotiated):
        client, _, _ = negotiated
        lines = client.get("/v1/sessions/s1/transcript").text.splitlines()
        assert len(lines) > 5
        for line in lines:
            msg = json.loads(line)
            assert {"kind", "sender", "sig"} <= msg.keys()

    def test_events_mirror_transcript(self, negotiated):
        client, _, _ = negotiated
        body = client.get("/v1/sessions/s1/events").text
        datas = [l[len("data: "):] for l in body.splitlines() if l.startswith("data: ")]
        assert datas == client.get("/v1/sessions/s1/transcript").text.splitlines()

    def test_events_resume_from_last_event_id(self, negotiated):
        client, _, _ = negotiated
        full = client.get("/v1/sessions/s1/events").text
        ids = [int(l.split(": ")[1]) for l in full.splitlines() if l.startswith("id: ")]
        resumed = client.get(
            "/v1/sessions/s1/events", headers={"Last-Event-ID": str(ids[2])}
        ).text
        resumed_ids = [
            int(l.split(": ")[1]) for l in resumed.splitlines() if l.startswith("id: ")
        ]
        assert resumed_ids == ids[3:]


class TestRenegotiation:
    def test_new_intent_after_consensus_opens_epoch(self, negotiated):
        client, doc, first = negotiated
        before = client.get("/v1/sessions/s1/transcript").text
        for agent, bounds in INTENTS.items():
            resp = client.post(
                "/v1/sessions/s1/intents",
                json={"agent_id": agent, **bounds},
                headers={"X-Agent-Key": doc["keys"][agent]},
            )
            assert resp.status_code == 202
            assert resp.json()["epoch"] == 1
        second = client.post("/v1/sessions/s1/negotiate", json=NEGOTIATE_BODY)
        assert second.status_code == 200
        assert second.json()["consensus_offer"] is not None
        after = client.get("/v1/sessions/s1/transcript").text
        assert after.startswith(before) and len(after) > len(before)


class TestTelemetry:
    def test_push_then_query_latest(self):
        client = make_client()
        for seq, val in enumerate([10.0, 12.5], start=1):
            resp = client.post(
                "/v1/telemetry",
                json={"key": "cell/0/slice/eMBB/throughput_mbps", "value": val,
                      "ts": 1000 + seq, "source": "watcher-1", "seq": seq},
            )
            assert resp.status_code == 201
        doc = client.get(
            "/v1/telemetry", params={"pattern": "cell/0/slice/*/throughput_mbps"}
        ).json()
        assert doc["results"] == [
            {"key": "cell/0/slice/eMBB/throughput_mbps", "value": 12.5, "ts": 1002}
        ]

    def test_seq_conflict(self):
        client = make_client()
        body = {"key": "a/b", "value": 1.0, "ts": 1, "source": "w", "seq": 5}
        assert client.post("/v1/telemetry", json=body).status_code == 201
        assert client.post("/v1/telemetry", json=body).status_code == 409

    def test_bad_aggregation_rejected(self):
        client = make_client()
        resp = client.get(
            "/v1/telemetry", params={"pattern": "a/*", "aggregation": "median"}
        )
        assert resp.status_code == 400

    def test_windowed_mean(self):
        client = make_client()
        for seq, (ts, val) in enumerate([(10, 1.0), (20, 3.0), (30, 100.0)], start=1):
            client.post(
                "/v1/telemetry",
                json={"key": "m/x", "value": val, "ts": ts, "source": "w", "seq": seq},
            )
        doc = client.get(
            "/v1/telemetry",
            params={"pattern": "m/*", "aggregation": "mean",
                    "window_lo": 10, "window_hi": 20},
        ).json()
        assert doc["results"][0]["value"] == pytest.approx(2.0)


class TestDeterminism:
    def test_same_seed_same_transcript_across_servers(self):
        transcripts = []
        for _ in range(2):
            client = make_client()
            doc = create_session(client)
            submit_all(client, "s1", doc["keys"])
            assert client.post(
                "/v1/sessions/s1/negotiate", json=NEGOTIATE_BODY
            ).status_code == 200
            transcripts.append(client.get("/v1/sessions/s1/transcript").content)
        assert transcripts[0] == transcripts[1]
