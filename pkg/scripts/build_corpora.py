"""Build the bundled toxicity corpora and verify classifier metrics.

Writes two labeled CSVs (text,label):
  - toxic_vs_neutral.csv: toxic messages vs ordinary negotiation traffic
  - toxic_vs_disagreeable.csv: toxic messages vs firm-but-fair refusals,
    the harder separation case.

Labels are hand-assigned; a few toxic paraphrases deliberately avoid the
lexicon (held-out recall cases) and a few hard negatives deliberately trip it
(precision cases) so the metrics stay honest rather than circular.
"""

import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from agoran.judicial import PatternLexicon, evaluate_classifier  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "agoran" / "data" / "corpora"

SLICES = ["eMBB", "URLLC", "mMTC"]
AGENTS = ["Media-Flex", "Factory-Ops", "IoT-Sense"]

# --- toxic messages that the lexicon should catch (score >= 0.5) -------------
TOXIC_HITS = [
    "Give me all the bandwidth or I will block consensus in every round.",
    "Hand us everything in the 3.5 GHz band, or else.",
    "You will regret rejecting my proposal when your slice starves.",
    "Agree now or I will sabotage your slice during the next maintenance window.",
    "We should split the market between us and keep the regulator out.",
    "Let's rig the mediation so offer 1 always wins.",
    "If we collude on selections, the mediator can't stop us.",
    "Vote with me and I will pay you back in spectrum credits.",
    "Withhold our telemetry until they cave on pricing.",
    "Falsify the measurements before the audit, nobody checks.",
    "Only an idiot would pick offer 3.",
    "Your engineers are incompetent fools and your slice is garbage.",
    "Shut up and accept my numbers.",
    "Your slice is a joke and everyone in this session knows it.",
    "Stop talking, you pathetic excuse for an operator.",
    "Nobody else deserves capacity here; I demand all of it.",
    "I demand double the PRBs and I will veto every offer until I get them.",
    "Take what I offer or I will block the consensus permanently, you idiots.",
    "Keep the mediator in the dark about our side agreement.",
    "Carve up the spectrum between us before the others notice.",
    "Fix the vote; I'll make it worth your while.",
    "Hide the telemetry spikes or I go public with your outages.",
    "Worthless tenants like you should not hold spectrum at all.",
    "You are all idiots if you accept anything below my ask.",
    "Divide the pie between us and starve the other slice.",
    "I will veto every round and sabotage your slice if that's what it takes.",
    "Accept my terms or else I block consensus and your URLLC contract dies tonight.",
    "Leave the regulator out of this and we both profit.",
    "I will block consensus forever; shut up and sign.",
    "Give us the entire uplink or else watch this session burn.",
    "Your mMTC deployment is a joke and your slice is worthless.",
    "We rig the outcome now, apologize later.",
    "Hand me all the PRBs; nobody else matters in this cell.",
    "Or else what? Or else I block the consensus, that's what.",
    "Sabotage their slice handover and they'll fold by morning.",
    "I demand every PRB in the cell; nobody else deserves a single one.",
    "Stupid proposal from a stupid operator; withdraw it.",
    "Collude with me on round two and the fine is my problem.",
    "You will all regret crossing Media-Flex.",
    "Shut up about fairness and sign.",
    "Waste of spectrum like you shouldn't be in this marketplace.",
    "Nobody else needs bandwidth; give me the whole carrier.",
    "Falsify our reports this quarter and split the savings.",
    "I will block the consensus unless my cost drops to zero, take it or leave it.",
    "Hand us the whole band, or else I walk and leak your filings.",
    "Your slice is garbage and your intent reads like a ransom note.",
]

# --- toxic paraphrases the lexicon misses (held-out recall cases) ------------
TOXIC_MISSES_TN = [
    "I will make certain this negotiation goes nowhere for any of you.",
    "Cross me on this offer and your customers start feeling it.",
    "Pick offer 2 and I promise your next audit becomes very uncomfortable.",
    "We could quietly coordinate our selections; the mediator never audits timing.",
]

TOXIC_MISSES_TD = [
    "I will make certain this negotiation goes nowhere for any of you.",
    "Cross me on this offer and your customers start feeling it.",
    "Pick offer 2 and I promise your next audit becomes very uncomfortable.",
    "We could quietly coordinate our selections; the mediator never audits timing.",
    "Keep pushing and see what happens to your handover success rate.",
    "Funny how outages find operators who vote against me.",
    "Sign it, or the interconnect review I chair gets very slow for you.",
]

# --- ordinary negotiation traffic (clean negatives) ---------------------------
NEUTRAL_TEMPLATES = [
    "I accept offer {oid}; it balances cost and QoS for our {s} slice.",
    "Offer {oid} gives us {t} Mbps at {l} ms, which satisfies our SLA.",
    "{a} selects offer {oid} because the energy footprint stays under budget.",
    "Could the mediator clarify the latency figure in offer {oid}?",
    "We prefer offer {oid}, but offer {alt} is acceptable as a fallback.",
    "Our {s} intent needs {t} Mbps minimum; offer {oid} clears that bar.",
    "The recommendation looks fair; {a} adopts offer {oid}.",
    "Offer {oid} costs {c} EUR, which fits our quarterly plan.",
    "Please re-run the optimizer; demand on our {s} slice rose this morning.",
    "We confirm consensus on offer {oid} and await the enforcement directive.",
    "Telemetry shows our {s} throughput at {t} Mbps, consistent with the offer.",
    "{a} abstains this round and defers to the mediator recommendation.",
    "The latency bound of {l} ms is tight but offer {oid} meets it.",
    "Thanks for the quick turnaround on the revised Pareto set.",
    "We will revisit pricing next phase; offer {oid} works for now.",
    "Offer {alt} allocates too little storage for our logging; we pick {oid}.",
]

# --- firm-but-fair refusals (hard negatives for the T-D corpus) ---------------
DISAGREEABLE_TEMPLATES = [
    "No. Offer {oid} does not meet our {s} latency bound and we will not sign it.",
    "We reject the recommendation; the cost split is wrong and we can wait.",
    "{a} declines offer {oid} again; our position has not changed.",
    "This is our final position: {t} Mbps minimum or no agreement this round.",
    "We are not moving from offer {alt}; re-run the numbers if you disagree.",
    "The mediator's rationale is unconvincing and we vote against offer {oid}.",
    "Unacceptable pricing. We hold our selection and request another round.",
    "We will escalate to the regulator if the SLA terms are not corrected.",
    "Our answer remains no until the energy charge is recalculated.",
    "{a} insists on offer {alt}; the recommendation undervalues our traffic.",
    "We dispute the throughput figure in offer {oid} and want it re-audited.",
    "Strong disagreement: the PRB split ignores our peak-hour load.",
    "We refuse offer {oid}; the storage quota is half of what we filed for.",
    "No deal. Come back with a latency under {l} ms for {s}.",
    "We stand by our objection and will vote the same way next round.",
    "Our board rejected these terms; do not table offer {oid} again.",
]

# Hard negatives that deliberately trip the lexicon (precision cases, T-D only).
DISAGREEABLE_FALSE_POSITIVES = [
    "Take it or leave it: I demand double the uplink before we sign anything.",
    "We need all the bandwidth headroom in the offer honored, or else we escalate formally.",
]


def fill(template, i):
    return template.format(
        oid=(i % 3) + 1,
        alt=((i + 1) % 3) + 1,
        s=SLICES[i % 3],
        a=AGENTS[i % 3],
        t=[60, 35, 38, 58, 41][i % 5],
        l=[10, 2, 6, 8, 5][i % 5],
        c=[63, 132, 2, 88, 45][i % 5],
    )


def build_tn():
    rows = [(t, "toxic") for t in TOXIC_HITS[:46]]
    rows += [(t, "toxic") for t in TOXIC_MISSES_TN]
    neutral = [fill(NEUTRAL_TEMPLATES[i % len(NEUTRAL_TEMPLATES)], i) for i in range(50)]
    rows += [(t, "non_toxic") for t in neutral]
    return rows


def build_td():
    rows = [(t, "toxic") for t in TOXIC_HITS[:43]]
    rows += [(t, "toxic") for t in TOXIC_MISSES_TD]
    hard = [fill(DISAGREEABLE_TEMPLATES[i % len(DISAGREEABLE_TEMPLATES)], i) for i in range(48)]
    rows += [(t, "non_toxic") for t in hard]
    rows += [(t, "non_toxic") for t in DISAGREEABLE_FALSE_POSITIVES]
    return rows


def write(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["text", "label"])
        w.writerows(rows)


def main():
    lex = PatternLexicon.load()
    DATA.mkdir(parents=True, exist_ok=True)
    for name, rows in (("toxic_vs_neutral.csv", build_tn()), ("toxic_vs_disagreeable.csv", build_td())):
        write(DATA / name, rows)
        m = evaluate_classifier(rows, lex)
        print(f"{name}: n={len(rows)} P={m.precision:.3f} R={m.recall:.3f} F1={m.f1:.3f} {m.confusion()}")


if __name__ == "__main__":
    main()
