"""End-to-end scenario runner.

A scenario file scripts a multi-phase marketplace session: stakeholders with
personas, per-phase SLA clauses and channel quality, and the traffic profile
each slice offers once a consensus is enforced. The runner drives the full
loop for every phase — optimize, negotiate with judicial oversight, score
trust, enforce — then replays the enforced directives on the TTI simulator in
both dynamic and static modes and compares PRB ledgers.

The static baseline freezes both the first phase's enforcement directive and
its traffic profile, modelling a network that cannot renegotiate; regulatory
cell shutdown phases stay off in both modes.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import yaml

from . import judicial, netsim, trust
from .agents import DecisionContext, Persona, scripted_decide
from .kpi import KpiModelParams, SliceClass
from .netsim import McsTrace, NetsimParams, PhaseConfig, RunReport, SliceConfig
from .optimizer import (
    GlobalBudget,
    NsgaParams,
    Offer,
    SlaClause,
    run_nsga2,
    select_offers,
)
from .protocol import (
    EnforcementDirective,
    Intent,
    MediatorParams,
    Session,
    SessionPhase,
    zero_offer,
)

import numpy as np

SCHEMA_PATH = Path(__file__).parent / "data" / "scenario_schema.json"
SCENARIO_DIR = Path(__file__).parent / "data" / "scenarios"
DEFAULT_SCENARIO = SCENARIO_DIR / "pa_pd.yaml"

SLICE_ORDER = [SliceClass.EMBB, SliceClass.URLLC, SliceClass.MMTC]


class ScenarioError(RuntimeError):
    pass


class ScenarioSchemaError(ScenarioError):
    """Config fails schema validation; `path` points at the first offender."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass
class StakeholderSpec:
    id: str
    persona: Persona
    slices: dict[str, SliceClass]  # phase id -> slice class


@dataclass
class PhaseSpec:
    phase_id: str
    mcs: int
    n_ttis: int
    shutdown: bool = False
    clauses: list[SlaClause] = field(default_factory=list)
    load_ratio: dict[SliceClass, float] = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    budget: GlobalBudget
    stakeholders: list[StakeholderSpec]
    phases: list[PhaseSpec]
    top_k: int = 3
    energy_weight: float = 0.1
    warmup_ttis: int = 100
    population: int = 60
    generations: int = 40
    roles: dict[str, str] = field(default_factory=dict)
    trace: McsTrace | None = None

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        try:
            doc = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ScenarioSchemaError(str(path), str(exc)) from exc
        cfg = cls.from_dict(doc)
        if doc.get("trace"):
            trace_path = path.parent / doc["trace"]
            if not trace_path.exists():
                raise ScenarioSchemaError(f"{path}:trace", f"trace file not found: {trace_path}")
            cfg.trace = McsTrace.from_csv(trace_path)
        return cfg

    @classmethod
    def from_dict(cls, doc) -> "ScenarioConfig":
        schema = json.loads(SCHEMA_PATH.read_text())
        validator = jsonschema.Draft202012Validator(schema)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
        if errors:
            first = errors[0]
            where = "/".join(str(p) for p in first.absolute_path) or "<root>"
            raise ScenarioSchemaError(where, first.message)

        stakeholders = [
            StakeholderSpec(
                s["id"],
                Persona(s["persona"]),
                {ph: SliceClass(v) for ph, v in s["slices"].items()},
            )
            for s in doc["stakeholders"]
        ]
        phases = []
        for p in doc["phases"]:
            clauses = [
                SlaClause(
                    SliceClass(c["slice"]),
                    min_throughput_mbps=c.get("min_throughput_mbps"),
                    max_latency_ms=c.get("max_latency_ms"),
                    max_cost_eur=c.get("max_cost_eur"),
                    max_energy_w=c.get("max_energy_w"),
                )
                for c in p.get("clauses", [])
            ]
            phases.append(
                PhaseSpec(
                    p["id"], p["mcs"], p["n_ttis"], p.get("shutdown", False),
                    clauses,
                    {SliceClass(k): v for k, v in p.get("load_ratio", {}).items()},
                )
            )
        # cross-field checks the schema cannot express
        ids = [s.id for s in stakeholders]
        if len(ids) != len(set(ids)):
            raise ScenarioSchemaError("stakeholders", "duplicate stakeholder ids")
        phase_ids = [p.phase_id for p in phases]
        if len(phase_ids) != len(set(phase_ids)):
            raise ScenarioSchemaError("phases", "duplicate phase ids")
        for s in stakeholders:
            for ph in phases:
                if not ph.shutdown and ph.phase_id not in s.slices:
                    raise ScenarioSchemaError(
                        f"stakeholders/{s.id}/slices",
                        f"missing slice assignment for phase {ph.phase_id}",
                    )
        for role, agent in doc.get("roles", {}).items():
            if agent not in ids:
                raise ScenarioSchemaError(f"roles/{role}", f"unknown stakeholder {agent!r}")
        opt = doc.get("optimizer", {})
        b = doc["budget"]
        return cls(
            name=doc["name"],
            seed=doc["seed"],
            budget=GlobalBudget(b["b_max"], b["c_max"], b["p_max"], b["s_max"]),
            stakeholders=stakeholders,
            phases=phases,
            top_k=doc.get("top_k", 3),
            energy_weight=doc.get("energy_weight", 0.1),
            warmup_ttis=doc.get("warmup_ttis", 100),
            population=opt.get("population", 60),
            generations=opt.get("generations", 40),
            roles=doc.get("roles", {}),
        )


def derive_key(seed: int, name: str) -> bytes:
    return hashlib.sha256(f"agoran:{seed}:{name}".encode()).digest()


def _agent_rng(seed: int, phase_id: str, agent_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{phase_id}:{agent_id}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "big")))


@dataclass
class PhaseOutcome:
    phase_id: str
    session: Session
    offers: list[Offer]
    directive: EnforcementDirective
    agreed: dict[SliceClass, "object"]  # KpiVector per slice of the consensus offer
    trust_reports: dict[str, trust.TrustReport]
    incentives: list[judicial.Incentive]
    rounds: int
    forced: bool


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    outcomes: list[PhaseOutcome]
    dynamic_run: RunReport | None
    static_run: RunReport | None
    report: dict


def _make_clock(deterministic: bool):
    if deterministic:
        counter = iter(range(1, 10**9))
        return lambda: next(counter)
    return lambda: int(time.time() * 1000)


def _shutdown_phase(cfg: ScenarioConfig, spec: PhaseSpec, clock) -> PhaseOutcome:
    """Regulatory power-off: every tenant files a shutdown intent, the menu is
    the designated zero offer, and consensus is immediate."""
    keys = {s.id: derive_key(cfg.seed, s.id) for s in cfg.stakeholders}
    session = Session(f"{cfg.name}-{spec.phase_id}", keys, derive_key(cfg.seed, "mediator"), clock=clock)
    for s in cfg.stakeholders:
        session.submit_intent(
            Intent(
                s.id,
                s.slices.get(spec.phase_id, SLICE_ORDER[0]),
                max_latency_ms=math.inf,
                freeform_text="Cease transmission for the ordered shutdown window.",
                phase=spec.phase_id,
            )
        )
    offer = zero_offer(SLICE_ORDER)
    session.publish_offers([offer])
    session.collect_selections(
        {s.id: (offer.id, "Complying with the regulatory shutdown order.") for s in cfg.stakeholders}
    )
    session.mediate(MediatorParams(cfg.energy_weight))
    session.step_round({})
    session.enforce()
    directive = session.decompose_consensus()
    return PhaseOutcome(
        spec.phase_id, session, [offer], directive,
        dict(offer.per_slice), {}, [], session.round, session.consensus_forced,
    )


def negotiate_session(
    session: Session,
    offers: list[Offer],
    personas: dict[str, Persona],
    intents: dict[str, Intent],
    rngs: dict[str, np.random.Generator],
    energy_weight: float,
    lexicon: judicial.PatternLexicon,
    arbitration: bool = True,
) -> list[judicial.Incentive]:
    """Drive scripted agents through the published menu to consensus, applying
    judicial incentives to every exchanged rationale along the way."""
    incentives_log: list[judicial.Incentive] = []
    received: dict[str, list[str]] = {a: [] for a in personas}
    streaks: dict[str, int] = {a: 0 for a in personas}
    previous: dict[str, int | None] = {a: None for a in personas}

    def decide_all(recommendation):
        out = {}
        for agent_id, persona in personas.items():
            ctx = DecisionContext(
                round=session.round,
                previous_choice=previous[agent_id],
                incentives_received=tuple(received[agent_id]),
                arbitration_enabled=arbitration,
                rng=rngs[agent_id],
            )
            out[agent_id] = scripted_decide(
                persona, offers, intents[agent_id], recommendation, ctx
            )
        return out

    def adjudicate_all(selections, recommendation):
        if not arbitration:
            for agent_id, (offer_id, _) in selections.items():
                previous[agent_id] = offer_id
            return
        for agent_id, (offer_id, rationale) in selections.items():
            verdict = judicial.classify(rationale, lexicon, message_ref=agent_id)
            supportive = verdict.score == 0.0 and offer_id == recommendation
            inc = judicial.adjudicate(verdict, agent_id, streaks[agent_id])
            streaks[agent_id] = streaks[agent_id] + 1 if supportive else 0
            if inc.kind != "none":
                incentives_log.append(inc)
                received[agent_id].append(inc.kind)
                session.apply_incentive(inc.kind, inc.target, inc.magnitude, inc.reason)
            previous[agent_id] = offer_id

    initial = decide_all(None)
    session.collect_selections(initial)
    adjudicate_all(initial, None)
    session.mediate(MediatorParams(energy_weight))

    while session.phase is SessionPhase.NEGOTIATING:
        post = decide_all(session.recommendation)
        adjudicate_all(post, session.recommendation)
        state = session.step_round(post)
        if state is SessionPhase.NEGOTIATING:
            session.mediate(MediatorParams(energy_weight))
    return incentives_log


def evaluate_trust(
    session: Session, offers: list[Offer], slices: dict[str, SliceClass]
) -> dict[str, trust.TrustReport]:
    reports = {}
    for agent_id, slice_class in slices.items():
        sel = session.selections[agent_id]
        reports[agent_id] = trust.evaluate_agent(
            agent_id,
            slice_class,
            offers,
            sel.offer_id,
            sel.valid,
            sel.rationale,
            session.recommendation,
        )
    return reports


def _negotiate_phase(
    cfg: ScenarioConfig,
    spec: PhaseSpec,
    clock,
    lexicon: judicial.PatternLexicon,
    phase_index: int,
) -> PhaseOutcome:
    keys = {s.id: derive_key(cfg.seed, s.id) for s in cfg.stakeholders}
    session = Session(f"{cfg.name}-{spec.phase_id}", keys, derive_key(cfg.seed, "mediator"), clock=clock)
    kpi_params = KpiModelParams(load_ratio=dict(spec.load_ratio) or None)

    intents = {}
    for s in cfg.stakeholders:
        slice_class = s.slices[spec.phase_id]
        clause = next((c for c in spec.clauses if c.slice is slice_class), None)
        intents[s.id] = Intent(
            s.id,
            slice_class,
            min_throughput_mbps=clause.min_throughput_mbps if clause else None,
            max_latency_ms=clause.max_latency_ms if clause else None,
            max_cost_eur=clause.max_cost_eur if clause else None,
            max_energy_w=clause.max_energy_w if clause else None,
            freeform_text=(
                f"{s.id} requests a {slice_class.value} slice for phase {spec.phase_id}."
            ),
            phase=spec.phase_id,
        )
        session.submit_intent(intents[s.id])

    front = run_nsga2(
        cfg.budget,
        spec.clauses,
        NsgaParams(
            population=cfg.population,
            generations=cfg.generations,
            rng_seed=cfg.seed + phase_index,
        ),
        kpi_params,
        mcs=spec.mcs,
        slices=SLICE_ORDER,
    )
    offers, short = select_offers(front, cfg.top_k)
    session.publish_offers(offers, short_front=short)

    incentives_log = negotiate_session(
        session,
        offers,
        {s.id: s.persona for s in cfg.stakeholders},
        intents,
        {s.id: _agent_rng(cfg.seed, spec.phase_id, s.id) for s in cfg.stakeholders},
        cfg.energy_weight,
        lexicon,
    )
    session.enforce()
    directive = session.decompose_consensus()
    consensus = next(o for o in offers if o.id == session.consensus_offer)
    reports = evaluate_trust(
        session, offers, {s.id: s.slices[spec.phase_id] for s in cfg.stakeholders}
    )
    return PhaseOutcome(
        spec.phase_id, session, offers, directive,
        dict(consensus.per_slice), reports, incentives_log,
        session.round, session.consensus_forced,
    )


def _sim_phases(
    cfg: ScenarioConfig, outcomes: list[PhaseOutcome], static: bool
) -> list[PhaseConfig]:
    """Dynamic mode enforces each phase's own consensus; static mode freezes
    the first negotiated phase's directive and traffic everywhere. Shutdown
    phases keep the cell off in both modes."""
    baseline = next(o for o, p in zip(outcomes, cfg.phases) if not p.shutdown)
    base_spec = next(p for p in cfg.phases if not p.shutdown)
    sims = []
    for outcome, spec in zip(outcomes, cfg.phases):
        source, traffic_spec = (baseline, base_spec) if static else (outcome, spec)
        slices = []
        for s in SLICE_ORDER:
            share = source.directive.prb_shares.get(s, 0.0)
            agreed_t = source.agreed[s].throughput_mbps
            rho = traffic_spec.load_ratio.get(s, 0.5)
            slices.append(
                SliceConfig(s.value, share, rho * agreed_t if not spec.shutdown else 0.0)
            )
        sims.append(
            PhaseConfig(spec.phase_id, spec.n_ttis, spec.mcs, slices,
                        cell_active=not spec.shutdown)
        )
    return sims


def _role_slice(cfg: ScenarioConfig, role: str, phase_id: str) -> SliceClass | None:
    agent = cfg.roles.get(role)
    if agent is None:
        return None
    spec = next(s for s in cfg.stakeholders if s.id == agent)
    return spec.slices.get(phase_id)


def build_report(
    cfg: ScenarioConfig,
    outcomes: list[PhaseOutcome],
    dynamic: RunReport | None,
    static: RunReport | None,
    runtime_s: float | None,
) -> dict:
    phases = []
    for outcome, spec in zip(outcomes, cfg.phases):
        phases.append(
            {
                "phase_id": outcome.phase_id,
                "shutdown": spec.shutdown,
                "consensus_offer": outcome.session.consensus_offer,
                "forced": outcome.forced,
                "post_offer_rounds": outcome.rounds,
                "agreed_sla": {
                    s.value: {
                        "throughput_mbps": outcome.agreed[s].throughput_mbps,
                        "latency_ms": (
                            None if math.isinf(outcome.agreed[s].latency_ms)
                            else outcome.agreed[s].latency_ms
                        ),
                    }
                    for s in SLICE_ORDER
                },
                "incentives": [
                    {"kind": i.kind, "target": i.target, "magnitude": i.magnitude}
                    for i in outcome.incentives
                ],
                "trust": {
                    a: r.trust_scaled for a, r in outcome.trust_reports.items()
                },
            }
        )
    report = {"scenario": cfg.name, "seed": cfg.seed, "phases": phases}
    if runtime_s is not None:
        report["runtime_s"] = runtime_s

    if dynamic is not None and static is not None:
        first = cfg.phases[0].phase_id
        last = next(p.phase_id for p in reversed(cfg.phases) if not p.shutdown)
        use_case: dict = {}
        f_first = _role_slice(cfg, "factory", first)
        f_last = _role_slice(cfg, "factory", last)
        if f_first and f_last:
            before = dynamic.phase_summary(first).per_slice[f_first.value]["throughput_mbps"]
            after = dynamic.phase_summary(last).per_slice[f_last.value]["throughput_mbps"]
            use_case["factory"] = {
                "tenant": cfg.roles["factory"],
                "first_phase_served_mbps": before,
                "last_phase_served_mbps": after,
                "gain_pct": 100.0 * (after - before) / before if before else math.inf,
            }
        m_dyn = _role_slice(cfg, "media", last)
        m_static = _role_slice(cfg, "media", first)  # static keeps the old mapping
        if m_dyn and m_static:
            lat_static = static.phase_summary(last).per_slice[m_static.value]["latency_ms"]
            lat_dyn = dynamic.phase_summary(last).per_slice[m_dyn.value]["latency_ms"]
            use_case["media"] = {
                "tenant": cfg.roles["media"],
                "static_latency_ms": lat_static,
                "dynamic_latency_ms": lat_dyn,
                "reduction_pct": 100.0 * (lat_static - lat_dyn) / lat_static,
            }
        saved, added, net = netsim.prb_ledger(dynamic, static)
        use_case["prb_ledger"] = {
            "saved_prbs": saved,
            "added_prbs": added,
            "net_saving_pct": net,
            "static_total_prbs": int(static.total_prbs_per_tti().sum()),
        }
        report["use_case"] = use_case
    return report


def run_scenario(
    cfg: ScenarioConfig,
    mode: str = "dynamic",
    deterministic: bool = False,
    out_dir: str | Path | None = None,
) -> ScenarioResult:
    """Drive every phase end to end; `mode` is `dynamic` (negotiate each
    phase, compare against the frozen baseline) or `static` (baseline report
    only)."""
    if mode not in ("dynamic", "static"):
        raise ScenarioError(f"unknown mode: {mode!r}")
    t0 = time.perf_counter()
    clock = _make_clock(deterministic)
    lexicon = judicial.PatternLexicon.load()

    outcomes = []
    for i, spec in enumerate(cfg.phases):
        if spec.shutdown:
            outcomes.append(_shutdown_phase(cfg, spec, clock))
        elif mode == "static" and any(not p.shutdown for p in cfg.phases[:i]):
            # static mode: renegotiation disabled, reuse the baseline outcome
            outcomes.append(outcomes[next(
                j for j, p in enumerate(cfg.phases) if not p.shutdown
            )])
        else:
            outcomes.append(_negotiate_phase(cfg, spec, clock, lexicon, i))

    params = NetsimParams(
        warmup_ttis=cfg.warmup_ttis, rng_seed=cfg.seed, kpi_params=KpiModelParams()
    )
    static_run = netsim.run_phases(_sim_phases(cfg, outcomes, static=True), params, cfg.trace)
    dynamic_run = None
    if mode == "dynamic":
        dynamic_run = netsim.run_phases(_sim_phases(cfg, outcomes, static=False), params, cfg.trace)

    runtime = None if deterministic else round(time.perf_counter() - t0, 3)
    report = build_report(cfg, outcomes, dynamic_run, static_run, runtime)
    result = ScenarioResult(cfg, outcomes, dynamic_run, static_run, report)
    if out_dir is not None:
        write_artifacts(result, Path(out_dir))
    return result


def write_artifacts(result: ScenarioResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "transcript.jsonl", "w") as f:
        for outcome in result.outcomes:
            for msg in outcome.session.transcript:
                f.write(msg.to_json_line() + "\n")
    offers_doc = {
        outcome.phase_id: [o.to_dict() for o in outcome.offers]
        for outcome in result.outcomes
    }
    _dump(out_dir / "offers.json", offers_doc)
    trust_doc = {
        outcome.phase_id: {a: r.to_dict() for a, r in outcome.trust_reports.items()}
        for outcome in result.outcomes
    }
    _dump(out_dir / "trust.json", trust_doc)
    _dump(out_dir / "report.json", result.report)
    _write_plots(result, out_dir / "plots")


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(_json_safe(doc), indent=1, sort_keys=True) + "\n")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_plots(result: ScenarioResult, plot_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plot_dir.mkdir(parents=True, exist_ok=True)
    runs = [("dynamic", result.dynamic_run), ("static", result.static_run)]
    runs = [(label, r) for label, r in runs if r is not None]

    for metric, ylabel, fname in (
        ("served_mbps", "served throughput [Mbps]", "throughput.png"),
        ("latency_ms", "latency [ms]", "latency.png"),
    ):
        fig, axes = plt.subplots(len(runs), 1, figsize=(9, 3 * len(runs)), squeeze=False)
        for ax_row, (label, run) in zip(axes, runs):
            ax = ax_row[0]
            for name in run.slice_names:
                ax.plot(getattr(run, metric)[name], label=name, linewidth=0.7)
            ax.set_title(f"{label} run")
            ax.set_ylabel(ylabel)
            ax.legend(loc="upper right", fontsize=8)
        axes[-1][0].set_xlabel("TTI")
        fig.tight_layout()
        fig.savefig(plot_dir / fname, dpi=100, metadata={"Date": None})
        plt.close(fig)

    fig, ax = plt.subplots(figsize=(9, 3))
    for label, run in runs:
        ax.plot(run.total_prbs_per_tti(), label=f"{label} PRBs used", linewidth=0.7)
    ax.set_xlabel("TTI")
    ax.set_ylabel("PRBs per TTI")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(plot_dir / "prb.png", dpi=100, metadata={"Date": None})
    plt.close(fig)
