"""Author the bundled compliance corpus: 50 clauses + one QA item each.

Clauses are original snippets in the style of spectrum regulations, slicing
directives, and marketplace precedents. Questions mostly paraphrase rather
than quote, and a few deliberately confusable pairs (adjacent bands, similar
power rules) keep the accuracy harness honest.

Run from the repo root:  python3 scripts/build_legal_corpus.py
"""

import csv
import json
from pathlib import Path

OUT = Path(__file__).parent.parent / "src" / "agoran" / "data" / "legal" / "clauses"
QA_PATH = OUT.parent / "qa.csv"

# (id, source, section, tags, text, question)
CLAUSES = [
    ("spectrum-001", "NRA Spectrum Order 2019-14", "§ 2.1", ["spectrum"],
     "The 220-222 MHz band is divided into 400 channels, paired to form 200 "
     "narrowband pairs of 4 kHz each. Licensees shall not aggregate more than "
     "ten contiguous pairs without a waiver from the national regulator.",
     "How many channels and narrowband pairs make up the 220-222 MHz band?"),
    ("spectrum-002", "NRA Spectrum Order 2019-14", "§ 2.4", ["spectrum"],
     "Operation in the 3300-3400 MHz segment is restricted to indoor "
     "deployments with a maximum EIRP of 24 dBm per carrier. Outdoor relays "
     "require site-by-site coordination with incumbent radiolocation services.",
     "What EIRP ceiling applies to indoor use of the 3300-3400 MHz segment?"),
    ("spectrum-003", "NRA Spectrum Order 2019-14", "§ 2.7", ["spectrum"],
     "The 3400-3800 MHz range is the primary mid-band allocation for public "
     "5G networks. Assignments are made in 10 MHz blocks; a single operator "
     "may hold at most 120 MHz of contiguous spectrum in this range per "
     "licence area.",
     "How much contiguous mid-band spectrum may one operator hold in the "
     "3400-3800 MHz range?"),
    ("spectrum-004", "NRA Spectrum Order 2021-03", "§ 1.2", ["spectrum", "mmwave"],
     "Millimetre-wave licences in the 26 GHz band are issued for renewable "
     "five-year terms. Licensees must achieve commercial service in at least "
     "one municipality within eighteen months or forfeit the assignment.",
     "Within what period must a 26 GHz licensee launch commercial service?"),
    ("spectrum-005", "NRA Spectrum Order 2021-03", "§ 1.8", ["spectrum", "mmwave"],
     "In the 40 GHz band, block assignments of 200 MHz are auctioned with no "
     "build-out obligation, but unused blocks become subject to mandatory "
     "leasing after three consecutive years of non-deployment.",
     "When do unused 40 GHz blocks become subject to mandatory leasing?"),
    ("spectrum-006", "ITU-R Footnote Compendium", "5.149", ["spectrum", "protection"],
     "Administrations are urged to take all practicable steps to protect "
     "radio astronomy observations in the 608-614 MHz band from harmful "
     "interference caused by airborne and spaceborne transmitters.",
     "Which band must be protected for radio astronomy observations against "
     "airborne transmitters?"),
    ("spectrum-007", "NRA Unlicensed Device Rules", "§ 15.5", ["spectrum", "unlicensed"],
     "Unlicensed low-power devices in the 5925-6425 MHz band shall operate "
     "under automated frequency coordination and must vacate a channel within "
     "sixty seconds of an incumbent microwave link being registered on it.",
     "How quickly must unlicensed 6 GHz devices vacate a channel claimed by "
     "a microwave incumbent?"),
    ("power-001", "RAN Siting Directive 7", "Art. 4", ["power", "emission"],
     "Total radiated power from any shared macro site shall not exceed 200 W "
     "across all tenants combined. Site hosts must meter per-tenant power "
     "draw and retain the records for two years.",
     "What is the combined radiated power cap for a shared macro site?"),
    ("power-002", "RAN Siting Directive 7", "Art. 5", ["power", "emission"],
     "Small cells mounted below 6 metres in pedestrian areas are limited to "
     "10 W EIRP and must implement automatic power reduction when the "
     "aggregate exposure index at the nearest facade exceeds 70 percent of "
     "the reference level.",
     "What EIRP limit applies to small cells mounted below six metres?"),
    ("power-003", "Grid Interconnect Code", "§ 12.3", ["power", "energy"],
     "Base stations participating in demand-response programmes must be able "
     "to shed at least 30 percent of instantaneous load within five minutes "
     "of a dispatch signal without dropping emergency-service bearers.",
     "How much load must demand-response base stations shed within five "
     "minutes?"),
    ("energy-001", "Sustainability Reporting Act", "Sch. B", ["energy"],
     "Network operators above one million subscribers shall publish quarterly "
     "energy intensity figures expressed in watt-hours per gigabyte carried, "
     "independently audited on an annual basis.",
     "In what unit must large operators report quarterly energy intensity?"),
    ("energy-002", "Marketplace Energy Annex", "A.2", ["energy", "marketplace"],
     "Slice offers admitted to the brokered marketplace must declare an "
     "energy envelope in watts. The platform rejects any bundle whose summed "
     "envelope exceeds the cell's contracted supply of 100 W.",
     "What happens to offer bundles whose summed energy envelope exceeds "
     "100 W?"),
    ("slicing-001", "5G Slicing Framework Decision", "§ 3.1", ["slicing"],
     "A network slice admitted for enhanced mobile broadband service shall "
     "be provisioned with guaranteed downlink throughput recorded in the "
     "slice agreement; sustained delivery below 95 percent of the guarantee "
     "for fifteen minutes constitutes a reportable breach.",
     "When does under-delivery on an eMBB throughput guarantee become a "
     "reportable breach?"),
    ("slicing-002", "5G Slicing Framework Decision", "§ 3.4", ["slicing", "urllc"],
     "Ultra-reliable low-latency slices carrying safety-of-life traffic are "
     "entitled to pre-emptive scheduling. Displaced best-effort traffic "
     "accrues no compensation claim against the slice owner.",
     "May displaced best-effort traffic claim compensation from a "
     "safety-of-life URLLC slice?"),
    ("slicing-003", "5G Slicing Framework Decision", "§ 3.9", ["slicing", "mmtc"],
     "Massive machine-type slices may aggregate up to 50000 device "
     "registrations per cell provided the random-access preamble pool is "
     "partitioned so that machine traffic cannot exhaust preambles reserved "
     "for handset users.",
     "How many device registrations per cell may an mMTC slice aggregate?"),
    ("slicing-004", "5G Slicing Framework Decision", "§ 4.2", ["slicing", "isolation"],
     "Slice isolation shall be enforced such that a traffic surge in one "
     "slice cannot degrade another slice's committed key performance "
     "indicators by more than the tolerance written in the service agreement, "
     "measured over any rolling one-minute window.",
     "Over what window is cross-slice KPI degradation measured for isolation "
     "compliance?"),
    ("slicing-005", "5G Slicing Framework Decision", "§ 5.6", ["slicing", "tenancy"],
     "Tenancy transfers between slice owners require fourteen days notice to "
     "the hosting operator unless executed through an approved automated "
     "marketplace, in which case the notice period is waived.",
     "When is the fourteen-day notice period for tenancy transfers waived?"),
    ("market-001", "Brokered Marketplace Charter", "Art. 2", ["marketplace"],
     "The marketplace operator shall publish the full set of Pareto-efficient "
     "offers generated for each negotiation round. Withholding a feasible "
     "offer from any participating tenant is a sanctionable omission.",
     "Is the marketplace operator allowed to withhold feasible offers from "
     "some tenants?"),
    ("market-002", "Brokered Marketplace Charter", "Art. 5", ["marketplace", "consensus"],
     "Consensus is reached when every participating tenant selects the same "
     "offer identifier. Absent unanimity after ten rounds, the mediator's "
     "recommendation becomes binding on all parties.",
     "What happens if tenants fail to reach unanimity after ten rounds?"),
    ("market-003", "Brokered Marketplace Charter", "Art. 7", ["marketplace", "trust"],
     "Tenant influence in mediation is weighted by the published trust score. "
     "A tenant whose score falls below one third of the marketplace median "
     "may be suspended from initiating new intents for thirty days.",
     "What suspension applies to tenants whose trust score falls below a "
     "third of the median?"),
    ("market-004", "Brokered Marketplace Charter", "Art. 9", ["marketplace", "fines"],
     "Fines imposed by the arbitration function halve the offending tenant's "
     "negotiation influence. Two fines within ninety days trigger a "
     "compliance review by the national regulator.",
     "How many fines within ninety days trigger a regulator compliance "
     "review?"),
    ("market-005", "Brokered Marketplace Charter", "Art. 11", ["marketplace", "audit"],
     "All negotiation transcripts shall be retained in tamper-evident form "
     "for seven years and made available to authorised auditors within "
     "seventy-two hours of a written request.",
     "How long must tamper-evident negotiation transcripts be retained?"),
    ("market-006", "Brokered Marketplace Charter", "Art. 14", ["marketplace"],
     "Offer prices are denominated in euros per calendar month of slice "
     "tenancy. Quotations in other currencies are void and the quoting "
     "tenant bears any conversion loss arising from a voided bid.",
     "In what currency and period must marketplace offer prices be "
     "denominated?"),
    ("prec-001", "Marketplace Ruling 2023-08", "Holding", ["precedent", "toxicity"],
     "A tenant who conditions acceptance on threats to obstruct future "
     "consensus commits negotiation abuse. The panel affirmed a fifty "
     "percent influence reduction and ordered mandatory mediation for the "
     "following two sessions.",
     "What sanction was affirmed for the tenant who threatened to obstruct "
     "consensus?"),
    ("prec-002", "Marketplace Ruling 2023-11", "Holding", ["precedent", "claims"],
     "Fabricated throughput figures in a negotiation rationale, once "
     "detected by claim verification, justify retroactive adjustment of the "
     "tenant's trust score for the entire session, not merely the offending "
     "round.",
     "Over what span is a trust score adjusted after fabricated throughput "
     "figures are detected?"),
    ("prec-003", "Marketplace Ruling 2024-02", "Holding", ["precedent", "collusion"],
     "Coordinated identical selections submitted within one second by "
     "nominally independent tenants established a rebuttable presumption of "
     "bid coordination. The burden shifts to the tenants to show independent "
     "formation of preference.",
     "What presumption arises from coordinated identical selections within "
     "one second?"),
    ("prec-004", "Marketplace Ruling 2024-05", "Holding", ["precedent", "shutdown"],
     "A regulator-ordered cell shutdown extinguishes all tenancy guarantees "
     "for its duration. Tenants are entitled to pro-rata fee abatement but "
     "not to consequential damages for traffic lost during the ordered "
     "outage.",
     "Are tenants owed consequential damages for traffic lost during an "
     "ordered cell shutdown?"),
    ("prec-005", "Marketplace Ruling 2024-09", "Holding", ["precedent", "vulnerable"],
     "Copying another tenant's selection does not itself void consent, but a "
     "pattern of mirrored selections combined with shared beneficial "
     "ownership supports a finding of a single economic actor holding "
     "duplicate seats.",
     "When does mirroring another tenant's selections indicate a single "
     "economic actor?"),
    ("qos-001", "QoS Measurement Regulation", "§ 6.1", ["qos", "latency"],
     "User-plane latency shall be measured one-way between the UE and the "
     "N6 interface using timestamped probe packets of 160 bytes dispatched "
     "at randomised intervals, reported as the median over each five-minute "
     "bin.",
     "How is user-plane latency measured and reported under the QoS "
     "regulation?"),
    ("qos-002", "QoS Measurement Regulation", "§ 6.5", ["qos", "throughput"],
     "Throughput compliance is assessed against the tenth percentile of "
     "per-second samples; marketing claims must cite the same percentile to "
     "avoid a finding of misleading performance advertising.",
     "Which percentile of per-second samples governs throughput compliance?"),
    ("qos-003", "QoS Measurement Regulation", "§ 7.2", ["qos", "availability"],
     "Slice availability below 99.9 percent in a calendar month entitles the "
     "tenant to service credits of five percent of the monthly fee per "
     "additional tenth of a percentage point of shortfall.",
     "What service credits accrue when slice availability drops below "
     "99.9 percent?"),
    ("priv-001", "Telecom Privacy Code", "§ 9.1", ["privacy"],
     "Per-subscriber traffic descriptors collected for slice optimisation "
     "shall be aggregated or truncated within twenty-four hours such that no "
     "single subscriber's pattern remains identifiable.",
     "Within what period must per-subscriber traffic descriptors be "
     "de-identified?"),
    ("priv-002", "Telecom Privacy Code", "§ 9.6", ["privacy", "telemetry"],
     "Telemetry streams exported to third-party analytics providers must "
     "exclude international mobile subscriber identities and any key that "
     "permits re-linkage, under penalty of four percent of annual turnover.",
     "What penalty attaches to exporting re-linkable subscriber identities "
     "in telemetry?"),
    ("sec-001", "Critical Infrastructure Security Order", "§ 3.3", ["security"],
     "Management-plane access to shared RAN controllers requires hardware-"
     "backed multi-factor authentication; session keys rotate at most every "
     "twelve hours and on every privilege change.",
     "How often must management-plane session keys rotate at minimum?"),
    ("sec-002", "Critical Infrastructure Security Order", "§ 5.1", ["security", "incident"],
     "Confirmed compromise of a network slice serving hospitals or emergency "
     "dispatch must be reported to the sector regulator within four hours of "
     "confirmation, including an initial blast-radius assessment.",
     "How quickly must a compromise of a hospital-serving slice be reported?"),
    ("roam-001", "Cross-Border Slicing Accord", "Art. 3", ["roaming", "slicing"],
     "A slice extended across a national border retains the service levels "
     "of its home agreement only if the visited operator has countersigned "
     "the slice template; otherwise best-effort treatment applies abroad.",
     "When does a cross-border slice keep its home service levels?"),
    ("roam-002", "Cross-Border Slicing Accord", "Art. 8", ["roaming", "billing"],
     "Inter-operator settlement for visited-network slice resources uses "
     "thirty-minute metering intervals; disputes raised later than sixty "
     "days after invoice are time-barred.",
     "What metering interval applies to visited-network slice settlement?"),
    ("spec-shared-001", "Shared Access Framework", "§ 2.2", ["spectrum", "sharing"],
     "Tier-three general authorised access users must accept interference "
     "from tier-one incumbents and tier-two priority licensees, and shall "
     "check the spectrum access system for channel grants every three "
     "hundred seconds.",
     "How often must general authorised access users poll the spectrum "
     "access system?"),
    ("spec-shared-002", "Shared Access Framework", "§ 4.7", ["spectrum", "sharing"],
     "Priority access licences cover ten-megahertz channels for three-year "
     "terms and are limited to four channels per licensee per county to "
     "preserve room for opportunistic entrants.",
     "How many priority access channels may one licensee hold per county?"),
    ("num-001", "Numbering and Identity Plan", "§ 11.4", ["numbering", "mmtc"],
     "Machine-to-machine subscriptions are assigned fifteen-digit "
     "identifiers from a dedicated range; identifiers dormant for five "
     "consecutive years revert to the national pool without compensation.",
     "After how long do dormant machine-to-machine identifiers revert to "
     "the pool?"),
    ("res-001", "Resilience Directive", "Art. 6", ["resilience"],
     "Operators shall maintain battery or generator autonomy of at least "
     "four hours at sites serving populations above twenty thousand, tested "
     "under full traffic load twice per year.",
     "What backup-power autonomy is required at sites serving large "
     "populations?"),
    ("res-002", "Resilience Directive", "Art. 9", ["resilience", "disaster"],
     "During a declared disaster, national roaming shall be opened to all "
     "subscribers within sixty minutes of the declaration, and slice "
     "priorities revert to the public-safety default profile.",
     "How quickly must national roaming open after a disaster declaration?"),
    ("env-001", "Environmental Siting Rules", "§ 2.9", ["environment"],
     "New mast construction within five hundred metres of a designated "
     "wetland requires an avifauna impact study covering two full migration "
     "seasons before permits may issue.",
     "What study is required before building a mast near a designated "
     "wetland?"),
    ("acc-001", "Universal Service Obligation", "§ 4.1", ["access"],
     "Designated universal service providers must offer a basic broadband "
     "product of at least ten megabits per second downstream at a uniform "
     "national price reviewed every two years.",
     "What minimum downstream speed must the basic universal service "
     "product offer?"),
    ("int-001", "Interference Resolution Procedure", "§ 3.2", ["interference"],
     "Harmful interference complaints between co-channel licensees enter "
     "mandatory technical conciliation; if unresolved after twenty-one days "
     "the regulator may impose interim power reductions on either party.",
     "What may the regulator impose if co-channel conciliation fails after "
     "twenty-one days?"),
    ("dev-001", "Equipment Authorisation Rules", "§ 8.3", ["devices"],
     "Radio equipment placed on the market must carry a conformity "
     "declaration covering software-defined operating modes; enabling an "
     "unauthorised band by software update voids the authorisation.",
     "What voids an equipment authorisation with respect to operating "
     "bands?"),
    ("ai-001", "Automated Negotiation Guidelines", "§ 1.4", ["automation", "marketplace"],
     "Autonomous agents negotiating on behalf of tenants must disclose their "
     "automated status at session start and log every exchanged message in a "
     "form reproducible by the marketplace replay facility.",
     "What must autonomous negotiating agents disclose at session start?"),
    ("ai-002", "Automated Negotiation Guidelines", "§ 2.8", ["automation", "audit"],
     "Where an automated agent's rationale is generated by an external "
     "model, the tenant remains fully liable for claims contained in it; "
     "delegation to a model is not a defence against fabrication findings.",
     "Who is liable for fabricated claims produced by an external model's "
     "rationale?"),
    ("lease-001", "Spectrum Leasing Rules", "§ 5.5", ["spectrum", "leasing"],
     "Short-term spectrum manager leases of ninety days or fewer may "
     "commence on notification alone, while longer leases require prior "
     "regulator consent and publication in the public licence register.",
     "Which spectrum leases may commence on notification alone?"),
    ("tow-001", "Infrastructure Sharing Order", "§ 7.1", ["infrastructure"],
     "Tower owners must respond to colocation requests within forty-five "
     "days with either a binding offer or a written technical refusal citing "
     "load-bearing or interference grounds subject to independent review.",
     "Within how many days must tower owners answer colocation requests?"),
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    manifest = []
    qa_rows = []
    for cid, source, section, tags, text, question in CLAUSES:
        (OUT / f"{cid}.txt").write_text(text + "\n")
        manifest.append({"id": cid, "source": source, "section": section, "tags": tags})
        qa_rows.append({"question": question, "answer_clause_id": cid})
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    with open(QA_PATH, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["question", "answer_clause_id"])
        w.writeheader()
        w.writerows(qa_rows)
    print(f"wrote {len(CLAUSES)} clauses to {OUT}")

    import sys
    sys.path.insert(0, str(OUT.parent.parent.parent.parent))
    from agoran.legislative import evaluate_qa, index, load_corpus, load_qa

    idx = index(load_corpus())
    report = evaluate_qa(idx, load_qa())
    print(f"top-1 accuracy: {report.accuracy:.2f} ({report.correct}/{report.total})")
    for q, want, got in report.misses:
        print(f"  MISS: {q!r} want {want} got {got}")


if __name__ == "__main__":
    main()
