"""Command-line entry points for the broker.

Exit codes: 0 success, 2 scenario schema violation (the first offending path
is printed), 3 infeasible scenario (no offer satisfies every clause within the
budget).
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from . import legislative
from .optimizer import InfeasibleScenarioError
from .protocol import NegotiationMessage, Session
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    ScenarioSchemaError,
    derive_key,
    evaluate_trust,
    run_scenario,
)

EXIT_SCHEMA = 2
EXIT_INFEASIBLE = 3


def _load_config(scenario_path: str) -> ScenarioConfig:
    try:
        return ScenarioConfig.load(Path(scenario_path))
    except ScenarioSchemaError as exc:
        click.echo(f"schema violation: {exc}", err=True)
        sys.exit(EXIT_SCHEMA)


@click.group()
def main():
    """Service & resource broker for sliced radio access networks."""


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["dynamic", "static"]), default="dynamic",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="artifacts",
              show_default=True, help="Artifact directory.")
@click.option("--deterministic", is_flag=True,
              help="Normalize timestamps so repeated runs are byte-identical.")
def run(scenario, mode, out_dir, deterministic):
    """Run a scenario end to end and write artifacts."""
    cfg = _load_config(scenario)
    try:
        result = run_scenario(cfg, mode=mode, deterministic=deterministic,
                              out_dir=Path(out_dir))
    except InfeasibleScenarioError as exc:
        click.echo(f"infeasible scenario: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    click.echo(json.dumps(result.report, indent=1, sort_keys=True))
    click.echo(f"artifacts written to {out_dir}", err=True)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--phase", "phase_id", default=None,
              help="Phase to optimize (default: first non-shutdown phase).")
def optimize(scenario, phase_id):
    """Print the Pareto front of offers for one phase, without negotiating."""
    from .kpi import KpiModelParams
    from .optimizer import NsgaParams, run_nsga2
    from .scenario import SLICE_ORDER

    cfg = _load_config(scenario)
    candidates = [p for p in cfg.phases if not p.shutdown]
    if phase_id is not None:
        candidates = [p for p in candidates if p.phase_id == phase_id]
    if not candidates:
        click.echo(f"no such negotiable phase: {phase_id}", err=True)
        sys.exit(EXIT_SCHEMA)
    phase = candidates[0]
    try:
        front = run_nsga2(
            cfg.budget,
            phase.clauses,
            NsgaParams(population=cfg.population, generations=cfg.generations,
                       rng_seed=cfg.seed),
            KpiModelParams(load_ratio=phase.load_ratio),
            mcs=phase.mcs,
            slices=SLICE_ORDER,
        )
    except InfeasibleScenarioError as exc:
        click.echo(f"infeasible scenario: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    click.echo(json.dumps([o.to_dict() for o in front], indent=1, sort_keys=True))


@main.group()
def trust():
    """Trust-scoring utilities."""


@trust.command("eval")
@click.argument("transcript", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", required=True, type=int,
              help="Scenario seed used to derive the signing keys for replay.")
def trust_eval(transcript, seed):
    """Replay a signed transcript and print a trust report per agent."""
    lines = [l for l in Path(transcript).read_text().splitlines() if l.strip()]
    if not lines:
        click.echo("empty transcript", err=True)
        sys.exit(EXIT_SCHEMA)
    senders = {NegotiationMessage.from_json_line(l).sender for l in lines}
    keys = {s: derive_key(seed, s) for s in senders if s != "mediator"}
    # one consensus per session id; score each independently
    by_session: dict[str, list[str]] = {}
    for line in lines:
        by_session.setdefault(json.loads(line)["session_id"], []).append(line)
    out = {}
    for session_id, chunk in by_session.items():
        try:
            session = Session.replay(chunk, keys, derive_key(seed, "mediator"))
        except Exception as exc:
            click.echo(f"replay failed for {session_id}: {exc}", err=True)
            sys.exit(EXIT_SCHEMA)
        if session.consensus_offer is None or not session.offers:
            continue
        slices = {a: i.use_case for a, i in session.intents.items()}
        reports = evaluate_trust(session, session.offers, slices)
        out[session_id] = {a: r.to_dict() for a, r in reports.items()}
    click.echo(json.dumps(out, indent=1, sort_keys=True))


@main.command()
@click.argument("query")
@click.option("-k", "top_k", default=3, show_default=True, type=int)
def retrieve(query, top_k):
    """Search the bundled legal corpus and print cited answers."""
    idx = legislative.index(legislative.load_corpus(legislative.DEFAULT_CORPUS_DIR))
    answers = [
        legislative.Answer(c.id, c.text, c.source_doc, c.section, score)
        for c, score in idx.retrieve(query, k=top_k)
    ]
    click.echo(json.dumps([a.to_dict() for a in answers], indent=1, sort_keys=True))


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["dynamic", "static"]), default="dynamic",
              show_default=True)
@click.option("--deterministic", is_flag=True)
def simulate(scenario, mode, deterministic):
    """Run a scenario and print per-phase KPI summaries (no artifacts)."""
    cfg = _load_config(scenario)
    try:
        result = run_scenario(cfg, mode=mode, deterministic=deterministic)
    except InfeasibleScenarioError as exc:
        click.echo(f"infeasible scenario: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    run_report = result.dynamic_run if mode == "dynamic" else result.static_run
    summary = {
        p.phase_id: {
            name: {
                "throughput_mbps": round(kpis["throughput_mbps"], 3),
                "latency_ms": (None if math.isinf(kpis["latency_ms"])
                               else round(kpis["latency_ms"], 3)),
                "prbs_used": kpis["prbs_used"],
            }
            for name, kpis in p.per_slice.items()
        }
        for p in run_report.phases
    }
    click.echo(json.dumps(summary, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
