"""Structural failure diagnostics over scored queries.

Four diagnostics: role swaps (spurious predictions that would match gold with
IV and DV exchanged), binding drift (correct variable pair bound to the wrong
method/condition/effect), recall by gold-tuple density (instance compression),
and derived-query error amplification relative to upstream extraction quality.
Swap classification takes precedence over drift, so the two sets are disjoint
within overlapping scopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from evidx.matching import PASS_OUTCOMES, slot_match
from evidx.metrics import ScoredQuery
from evidx.queries import get as get_query
from evidx.schema import StudyTuple

SWAP_SCOPE = ("M_L2_Q4", "M_L2_Q5", "M_L2_Q6")
DRIFT_SCOPE = ("M_L2_Q5", "M_L2_Q6")

# Slots compared when testing an IV/DV exchange; condition and effect are
# deliberately ignored for M_L2_Q6 (role identity concerns the pair).
_SWAP_EXTRA_SLOTS = {"M_L2_Q4": (), "M_L2_Q5": ("A",), "M_L2_Q6": ("A",)}

# Slots that must bind to the same analysis for the pair to count as drifted.
_DRIFT_BOUND_SLOTS = {"M_L2_Q5": ("A",), "M_L2_Q6": ("A", "C", "E")}

DENSITY_BUCKETS = ((1, 5), (6, 10), (11, 20), (21, 30), (31, None))

# Derived query -> the extraction query whose output feeds it.
UPSTREAM = {
    "O_C_Q1": "O_L1_Q2",
    "O_C_Q2": "O_L1_Q2",
    "O_C_Q3": "O_L1_Q2",
    "M_C_Q1": "M_L1_Q1",
    "M_C_Q2": "M_L1_Q2",
    "M_C_Q3": "M_L1_Q3",
    "M_C_Q4": "M_L1_Q4",
    "M_C_Q5": "M_L2_Q6",
}


def format_ratio(count: int, denominator: int) -> str:
    """Percent string with one decimal, e.g. 688/4430 -> '15.5%'."""
    if denominator == 0:
        return "0.0%"
    return f"{100.0 * count / denominator:.1f}%"


@dataclass(frozen=True)
class Instance:
    domain: str
    model: str
    regime: str
    query_id: str
    pred_index: int
    doc_id: int


@dataclass
class DetectorResult:
    count: int
    denominator: int
    instances: list[Instance]

    @property
    def ratio(self) -> float:
        return self.count / self.denominator if self.denominator else 0.0

    @property
    def ratio_text(self) -> str:
        return format_ratio(self.count, self.denominator)


def _spurious(sq: ScoredQuery) -> list[tuple[int, StudyTuple]]:
    assert sq.report is not None
    return [(d.pred_index, sq.preds[d.pred_index]) for d in sq.report.decisions if d.verdict == "spurious"]


def _unconsumed_golds(sq: ScoredQuery) -> list[StudyTuple]:
    assert sq.report is not None
    return [sq.golds[i] for i in sq.report.unmatched_gold]


def _slot_pass(pred_value, gold_value, query_id: str, slot: str, gateway) -> bool:
    numeric = get_query(query_id).numeric(slot)
    outcome = slot_match(pred_value, gold_value, numeric, gateway, f"{query_id}/{slot}")
    return outcome in PASS_OUTCOMES


def detect_role_swaps(scored: Sequence[ScoredQuery], gateway=None) -> DetectorResult:
    """Spurious predictions that pass slot matching against some unconsumed
    gold tuple of the same document once their IV and DV are exchanged."""
    in_scope = [sq for sq in scored if sq.query_id in SWAP_SCOPE and sq.report is not None]
    denominator = 0
    result = DetectorResult(0, 0, [])
    for sq in in_scope:
        extra = _SWAP_EXTRA_SLOTS[sq.query_id]
        unconsumed = _unconsumed_golds(sq)
        for pred_index, pred in _spurious(sq):
            denominator += 1
            swapped = {"IV": pred.value("DV"), "DV": pred.value("IV")}
            for gold in unconsumed:
                if gold.doc_id != pred.doc_id:
                    continue
                ok = _slot_pass(swapped["IV"], gold.value("IV"), sq.query_id, "IV", gateway) and _slot_pass(
                    swapped["DV"], gold.value("DV"), sq.query_id, "DV", gateway
                )
                for slot in extra:
                    ok = ok and _slot_pass(pred.value(slot), gold.value(slot), sq.query_id, slot, gateway)
                if ok:
                    result.count += 1
                    result.instances.append(
                        Instance(sq.domain, sq.model, sq.regime, sq.query_id, pred_index, pred.doc_id)
                    )
                    break
    result.denominator = denominator
    return result


def detect_binding_drift(
    scored: Sequence[ScoredQuery],
    gateway=None,
    exclude: set[tuple] | None = None,
) -> DetectorResult:
    """Spurious predictions whose (IV, DV) pair exists in the document's gold
    but whose method/condition/effect bindings belong to no gold tuple with
    that pair.  Predictions already classified as swaps are excluded."""
    exclude = exclude or set()
    in_scope = [
        sq
        for sq in scored
        if sq.query_id in DRIFT_SCOPE and sq.regime == "per-paper" and sq.report is not None
    ]
    result = DetectorResult(0, 0, [])
    denominator = 0
    for sq in in_scope:
        bound = _DRIFT_BOUND_SLOTS[sq.query_id]
        for pred_index, pred in _spurious(sq):
            denominator += 1
            key = (sq.domain, sq.model, sq.regime, sq.query_id, pred_index)
            if key in exclude:
                continue
            pair_golds = [
                gold
                for gold in sq.golds
                if gold.doc_id == pred.doc_id
                and _slot_pass(pred.value("IV"), gold.value("IV"), sq.query_id, "IV", gateway)
                and _slot_pass(pred.value("DV"), gold.value("DV"), sq.query_id, "DV", gateway)
            ]
            if not pair_golds:
                continue
            accepted = any(
                all(_slot_pass(pred.value(s), gold.value(s), sq.query_id, s, gateway) for s in bound)
                for gold in pair_golds
            )
            if not accepted:
                result.count += 1
                result.instances.append(
                    Instance(sq.domain, sq.model, sq.regime, sq.query_id, pred_index, pred.doc_id)
                )
    result.denominator = denominator
    return result


@dataclass(frozen=True)
class DensityBucket:
    label: str
    low: int
    high: int | None
    mean_recall: float
    papers: int


@dataclass
class DensityResult:
    buckets: list[DensityBucket]
    notes: list[str] = field(default_factory=list)


def recall_by_density(sq: ScoredQuery) -> DensityResult:
    """Per-document recall for the highest-arity query, grouped by the number
    of gold tuples in the document."""
    assert sq.report is not None
    gold_by_doc: dict[int, int] = {}
    for gold in sq.golds:
        gold_by_doc[gold.doc_id] = gold_by_doc.get(gold.doc_id, 0) + 1
    correct_by_doc: dict[int, int] = {}
    for decision in sq.report.decisions:
        if decision.verdict == "correct":
            doc = sq.preds[decision.pred_index].doc_id
            correct_by_doc[doc] = correct_by_doc.get(doc, 0) + 1

    recalls: dict[int, float] = {
        doc: correct_by_doc.get(doc, 0) / count for doc, count in gold_by_doc.items() if count > 0
    }
    result = DensityResult(buckets=[])
    for low, high in DENSITY_BUCKETS:
        label = f"{low}-{high}" if high is not None else f">={low}"
        members = [
            recalls[doc]
            for doc, count in sorted(gold_by_doc.items())
            if count >= low and (high is None or count <= high)
        ]
        if not members:
            result.notes.append(f"bucket {label} empty")
            continue
        result.buckets.append(
            DensityBucket(label, low, high, sum(members) / len(members), len(members))
        )
    return result


@dataclass(frozen=True)
class AmplificationRow:
    derived_id: str
    upstream_id: str
    success_rate: float
    upstream_f1: float
    cells: int
    partial: bool


def amplification_report(scored: Sequence[ScoredQuery]) -> list[AmplificationRow]:
    """Per derived query: how often its exact-equality answer succeeds across
    (domain, model, regime) cells, against the macro F1 of the extraction
    query it depends on."""
    by_cell_query: dict[tuple, ScoredQuery] = {
        (sq.domain, sq.model, sq.regime, sq.query_id): sq for sq in scored
    }
    rows = []
    for derived_id, upstream_id in UPSTREAM.items():
        cells = sorted(
            (d, m, r) for d, m, r, q in by_cell_query if q == derived_id
        )
        if not cells:
            continue
        successes = 0
        upstream_f1s = []
        partial = False
        for cell in cells:
            sq = by_cell_query[(*cell, derived_id)]
            if sq.prf.f1 == 1.0:
                successes += 1
            upstream = by_cell_query.get((*cell, upstream_id))
            if upstream is None:
                partial = True
            else:
                upstream_f1s.append(upstream.prf.f1)
        rows.append(
            AmplificationRow(
                derived_id=derived_id,
                upstream_id=upstream_id,
                success_rate=successes / len(cells),
                upstream_f1=sum(upstream_f1s) / len(upstream_f1s) if upstream_f1s else 0.0,
                cells=len(cells),
                partial=partial,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Whole-domain taxonomy


@dataclass
class TaxonomyReport:
    domain: str
    swaps: DetectorResult
    drift: DetectorResult
    density: DensityResult
    amplification: list[AmplificationRow]


def build_taxonomy(domain: str, scored: Sequence[ScoredQuery], gateway=None) -> TaxonomyReport:
    in_domain = [sq for sq in scored if sq.domain == domain]
    swaps = detect_role_swaps(in_domain, gateway)
    swap_keys = {(i.domain, i.model, i.regime, i.query_id, i.pred_index) for i in swaps.instances}
    drift = detect_binding_drift(in_domain, gateway, exclude=swap_keys)

    density_sqs = [
        sq for sq in in_domain if sq.query_id == "M_L2_Q6" and sq.regime == "per-paper" and sq.report
    ]
    if density_sqs:
        density = recall_by_density(density_sqs[0])
        for extra in density_sqs[1:]:
            more = recall_by_density(extra)
            density.buckets.extend(more.buckets)
            density.notes.extend(more.notes)
    else:
        density = DensityResult(buckets=[], notes=["no per-paper M_L2_Q6 report available"])

    return TaxonomyReport(
        domain=domain,
        swaps=swaps,
        drift=drift,
        density=density,
        amplification=amplification_report(in_domain),
    )


def taxonomy_to_dict(report: TaxonomyReport) -> dict:
    def detector(res: DetectorResult) -> dict:
        return {
            "count": res.count,
            "denominator": res.denominator,
            "ratio": res.ratio,
            "ratio_text": res.ratio_text,
            "instances": [vars(i) for i in res.instances],
        }

    return {
        "domain": report.domain,
        "role_swaps": detector(report.swaps),
        "binding_drift": detector(report.drift),
        "recall_by_density": {
            "buckets": [vars(b) for b in report.density.buckets],
            "notes": report.density.notes,
        },
        "amplification": [vars(r) for r in report.amplification],
    }


def taxonomy_markdown(report: TaxonomyReport) -> str:
    lines = [f"# Failure taxonomy: {report.domain}", ""]
    lines.append("## Role swaps (variable directionality)")
    lines.append(
        f"- {report.swaps.count} of {report.swaps.denominator} spurious predictions "
        f"({report.swaps.ratio_text}) match gold once IV and DV are exchanged."
    )
    lines.append("")
    lines.append("## Binding drift (cross-analysis conflation)")
    lines.append(
        f"- {report.drift.count} of {report.drift.denominator} spurious predictions "
        f"({report.drift.ratio_text}) bind a real variable pair to the wrong "
        "method, condition, or effect."
    )
    lines.append("")
    lines.append("## Recall by gold-tuple density (instance compression)")
    if report.density.buckets:
        lines.append("| gold tuples per paper | mean recall | papers |")
        lines.append("| --- | --- | --- |")
        for b in report.density.buckets:
            lines.append(f"| {b.label} | {b.mean_recall:.2f} | {b.papers} |")
    for note in report.density.notes:
        lines.append(f"- note: {note}")
    lines.append("")
    lines.append("## Derived-query error amplification")
    lines.append("| derived query | upstream query | success rate | upstream F1 |")
    lines.append("| --- | --- | --- | --- |")
    for row in report.amplification:
        flag = " (partial)" if row.partial else ""
        lines.append(
            f"| {row.derived_id} | {row.upstream_id} | {format_ratio(round(row.success_rate * row.cells), row.cells)}"
            f" | {row.upstream_f1:.2f}{flag} |"
        )
    lines.append("")
    return "\n".join(lines)
