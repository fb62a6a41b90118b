"""HTTP facade over negotiation sessions and the telemetry store.

Sessions are created with a roster of scripted stakeholders; clients submit
intents under per-agent keys, trigger negotiation rounds, and read offers,
transcripts, and trust reports. Every mutation lands in the session transcript
and on the event stream, so a client can rebuild its entire view from
`/events` or `/transcript` alone.

Renegotiation is implicit: once a session holds a consensus, submitting a new
intent opens a fresh negotiation epoch under the same session id and keys; the
transcript and event stream simply continue.
"""

from __future__ import annotations

import json
import queue
import secrets
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.responses import PlainTextResponse, StreamingResponse

from . import judicial
from .agents import Persona
from .kpi import KpiModelParams, SliceClass
from .optimizer import (
    GlobalBudget,
    InfeasibleScenarioError,
    NsgaParams,
    SlaClause,
    run_nsga2,
    select_offers,
)
from .executive import SeqConflictError, Query, TelemetryError, TelemetryStore
from .protocol import Intent, ProtocolError, Session
from .scenario import (
    _agent_rng,
    derive_key,
    evaluate_trust,
    negotiate_session,
)

DEFAULT_BUDGET = {"b_max": 27.3340530778, "c_max": 50.0, "p_max": 100.0, "s_max": 100.0}


@dataclass
class SessionHandle:
    """One API session: possibly several negotiation epochs over one roster."""

    session_id: str
    seed: int
    personas: dict[str, Persona]
    keys: dict[str, bytes]
    mediator_key: bytes
    max_rounds: int = 10
    deterministic: bool = False
    epochs: list[Session] = field(default_factory=list)
    events: list[str] = field(default_factory=list)  # serialized envelopes, in order
    subscribers: list[queue.Queue] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    _clock_state: list[int] = field(default_factory=lambda: [0])

    def clock(self) -> int:
        if self.deterministic:
            self._clock_state[0] += 1
            return self._clock_state[0]
        return int(time.time() * 1000)

    @property
    def current(self) -> Session:
        return self.epochs[-1]

    def new_epoch(self) -> Session:
        session = Session(
            f"{self.session_id}#{len(self.epochs)}",
            self.keys,
            self.mediator_key,
            max_rounds=self.max_rounds,
            clock=self.clock,
        )
        session.subscribe(self._on_message)
        self.epochs.append(session)
        return session

    def _on_message(self, msg) -> None:
        line = msg.to_json_line()
        self.events.append(line)
        for q in list(self.subscribers):
            q.put(line)

    def transcript_text(self) -> str:
        return "".join(line + "\n" for line in self.events)


class ServiceState:
    def __init__(self):
        self.sessions: dict[str, SessionHandle] = {}
        self.telemetry = TelemetryStore()
        self.lexicon = judicial.PatternLexicon.load()
        self.lock = threading.Lock()


def _handle_or_404(state: ServiceState, session_id: str) -> SessionHandle:
    handle = state.sessions.get(session_id)
    if handle is None:
        raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
    return handle


def create_app(state: ServiceState | None = None) -> FastAPI:
    state = state or ServiceState()
    app = FastAPI(title="agoran broker", version="1.0")
    app.state.broker = state

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: dict):
        agents = body.get("agents")
        if not agents:
            raise HTTPException(status_code=400, detail="agents roster is required")
        session_id = body.get("session_id") or secrets.token_hex(8)
        seed = int(body.get("seed", 0))
        try:
            personas = {
                a["id"]: Persona(a.get("persona", "Agreeable")) for a in agents
            }
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"bad roster entry: {exc}")
        with state.lock:
            if session_id in state.sessions:
                raise HTTPException(status_code=409, detail="session id already exists")
            handle = SessionHandle(
                session_id=session_id,
                seed=seed,
                personas=personas,
                keys={a: derive_key(seed, a) for a in personas},
                mediator_key=derive_key(seed, "mediator"),
                max_rounds=int(body.get("max_rounds", 10)),
                deterministic=bool(body.get("deterministic", False)),
            )
            handle.new_epoch()
            state.sessions[session_id] = handle
        return {
            "session_id": session_id,
            "state": handle.current.phase.value,
            "agents": sorted(personas),
            "keys": {a: k.hex() for a, k in handle.keys.items()},
        }

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        handle = _handle_or_404(state, session_id)
        s = handle.current
        return {
            "session_id": session_id,
            "state": s.phase.value,
            "epoch": len(handle.epochs) - 1,
            "round": s.round,
            "consensus_offer": s.consensus_offer,
            "intents": sorted(s.intents),
            "influence": s.influence,
        }

    @app.post("/v1/sessions/{session_id}/intents", status_code=202)
    def submit_intent(session_id: str, body: dict, x_agent_key: str = Header(default="")):
        handle = _handle_or_404(state, session_id)
        agent_id = body.get("agent_id", "")
        expected = handle.keys.get(agent_id)
        if expected is None or x_agent_key != expected.hex():
            raise HTTPException(status_code=401, detail="unauthorized agent key")
        with handle.lock:
            session = handle.current
            if session.consensus_offer is not None:
                # a new intent after consensus reopens negotiation
                session = handle.new_epoch()
            try:
                intent = Intent.from_payload(body)
                session.submit_intent(intent)
            except (KeyError, ValueError, ProtocolError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return {
            "state": session.phase.value,
            "epoch": len(handle.epochs) - 1,
            "collected": sorted(session.intents),
            "warnings": session.warnings,
        }

    @app.post("/v1/sessions/{session_id}/negotiate")
    def negotiate(session_id: str, body: dict | None = None):
        handle = _handle_or_404(state, session_id)
        body = body or {}
        with handle.lock:
            session = handle.current
            if not session.all_intents_collected():
                missing = sorted(set(handle.keys) - set(session.intents))
                raise HTTPException(
                    status_code=409, detail=f"missing intents from: {missing}"
                )
            if session.consensus_offer is not None:
                raise HTTPException(
                    status_code=409,
                    detail="consensus already reached; submit a new intent to renegotiate",
                )
            intents = dict(session.intents)
            clauses = _clauses_from_intents(intents)
            budget_doc = {**DEFAULT_BUDGET, **body.get("budget", {})}
            opt = body.get("optimizer", {})
            load_ratio = {
                SliceClass(k): float(v) for k, v in body.get("load_ratio", {}).items()
            }
            try:
                front = run_nsga2(
                    GlobalBudget(**budget_doc),
                    clauses,
                    NsgaParams(
                        population=int(opt.get("population", 60)),
                        generations=int(opt.get("generations", 40)),
                        rng_seed=handle.seed + len(handle.epochs),
                    ),
                    KpiModelParams(load_ratio=load_ratio or None),
                    mcs=int(body.get("mcs", 28)),
                    slices=sorted({i.use_case for i in intents.values()}, key=lambda s: s.value),
                )
            except InfeasibleScenarioError as exc:
                raise HTTPException(status_code=409, detail=f"infeasible scenario: {exc}")
            offers, short = select_offers(front, int(body.get("top_k", 3)))
            session.publish_offers(offers, short_front=short)
            epoch_tag = f"{session_id}#{len(handle.epochs)}"
            incentives = negotiate_session(
                session,
                offers,
                handle.personas,
                intents,
                {a: _agent_rng(handle.seed, epoch_tag, a) for a in handle.personas},
                float(body.get("energy_weight", 0.1)),
                state.lexicon,
            )
            session.enforce()
            directive = session.decompose_consensus()
        return {
            "consensus_offer": session.consensus_offer,
            "forced": session.consensus_forced,
            "post_offer_rounds": session.round,
            "recommendation": session.recommendation,
            "short_front": short,
            "incentives": [
                {"kind": i.kind, "target": i.target, "magnitude": i.magnitude, "reason": i.reason}
                for i in incentives
            ],
            "directive": directive.to_dict(),
        }

    @app.get("/v1/sessions/{session_id}/offers")
    def get_offers(session_id: str):
        handle = _handle_or_404(state, session_id)
        s = handle.current
        return {
            "offers": [o.to_dict() for o in s.offers],
            "recommendation": s.recommendation,
            "consensus_offer": s.consensus_offer,
            "short_front": s.short_front,
        }

    @app.get("/v1/sessions/{session_id}/transcript", response_class=PlainTextResponse)
    def get_transcript(session_id: str):
        return _handle_or_404(state, session_id).transcript_text()

    @app.get("/v1/sessions/{session_id}/trust")
    def get_trust(session_id: str):
        handle = _handle_or_404(state, session_id)
        s = handle.current
        if s.consensus_offer is None or not s.offers:
            raise HTTPException(status_code=409, detail="no consensus to score yet")
        reports = evaluate_trust(
            s, s.offers, {a: i.use_case for a, i in s.intents.items()}
        )
        return {a: r.to_dict() for a, r in reports.items()}

    @app.get("/v1/sessions/{session_id}/events")
    def events(
        session_id: str,
        request: Request,
        follow: int = 0,
        timeout_s: float = 5.0,
        last_event_id: str = Header(default="", alias="Last-Event-ID"),
    ):
        handle = _handle_or_404(state, session_id)
        start = int(last_event_id) + 1 if last_event_id.isdigit() else 0

        def stream():
            idx = start
            live: queue.Queue | None = None
            if follow:
                live = queue.Queue()
                handle.subscribers.append(live)
            try:
                while idx < len(handle.events):
                    yield f"id: {idx}\ndata: {handle.events[idx]}\n\n"
                    idx += 1
                if live is None:
                    return
                deadline = time.monotonic() + timeout_s
                while time.monotonic() < deadline:
                    try:
                        live.get(timeout=0.1)
                    except queue.Empty:
                        continue
                    while idx < len(handle.events):
                        yield f"id: {idx}\ndata: {handle.events[idx]}\n\n"
                        idx += 1
            finally:
                if live is not None:
                    handle.subscribers.remove(live)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.post("/v1/telemetry", status_code=201)
    def push_telemetry(body: dict):
        try:
            version = state.telemetry.push(
                body["key"], body["value"], int(body["ts"]), body["source"], int(body["seq"])
            )
        except KeyError as exc:
            raise HTTPException(status_code=400, detail=f"missing field: {exc}")
        except SeqConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except TelemetryError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"version": version}

    @app.get("/v1/telemetry")
    def query_telemetry(
        pattern: str,
        aggregation: str = "latest",
        window_lo: int | None = None,
        window_hi: int | None = None,
    ):
        window = (window_lo, window_hi) if window_lo is not None and window_hi is not None else None
        try:
            rows = state.telemetry.query(Query(pattern, window, aggregation))
        except TelemetryError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"results": [{"key": k, "value": v, "ts": ts} for k, v, ts in rows]}

    return app


def _clauses_from_intents(intents: dict[str, Intent]) -> list[SlaClause]:
    """One SLA clause per slice class, combining the tightest bounds of the
    intents that requested it."""
    by_slice: dict[SliceClass, list[Intent]] = {}
    for intent in intents.values():
        by_slice.setdefault(intent.use_case, []).append(intent)
    clauses = []
    for slice_class, group in sorted(by_slice.items(), key=lambda kv: kv[0].value):
        def tight(attr, pick):
            vals = [getattr(i, attr) for i in group if getattr(i, attr) is not None]
            return pick(vals) if vals else None
        clause = SlaClause(
            slice_class,
            min_throughput_mbps=tight("min_throughput_mbps", max),
            max_latency_ms=tight("max_latency_ms", min),
            max_cost_eur=tight("max_cost_eur", min),
            max_energy_w=tight("max_energy_w", min),
        )
        clauses.append(clause)
    return clauses


app = create_app()
